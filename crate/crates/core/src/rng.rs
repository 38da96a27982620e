//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_index)` and maps onto an
//! independent ChaCha8 keystream, so replicate `i` of any parallel loop draws
//! the same variates no matter which worker thread runs it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn from_seed(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }

    /// Derives an independent child stream keyed by `index`.
    ///
    /// The child's master seed mixes both coordinates of the parent, so
    /// children of distinct parents never collide by construction of the
    /// keystream (distinct ChaCha keys).
    pub fn child(&self, index: u64) -> Self {
        let key = splitmix64(self.master_seed ^ splitmix64(self.stream_index));
        Self::new(key, index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Uniform variate on (0, 1], never exactly zero.
#[inline]
pub fn uniform_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}
