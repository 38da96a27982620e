//! The q-exponential family on `[0, ∞)` for `q > 1`.
//!
//! Two parameter systems are in use:
//!
//! ```text
//! (q, κ):  P(X ≥ x) = (1 − (1−q)x/κ)^(1/(1−q))
//! (θ, σ):  P(X ≥ x) = (1 + x/σ)^(−θ),   θ = 1/(q−1),  σ = θκ
//! ```
//!
//! All numerical work happens in `(θ, σ)`; `(q, κ)` is a presentation layer.
//! `1 + X/σ` is Pareto with cut-off 1 and exponent θ.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform_open_closed, RngStream};
use crate::sample::Sample;

/// Shape θ and scale σ, both finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSigma {
    theta: f64,
    sigma: f64,
}

impl ThetaSigma {
    pub fn new(theta: f64, sigma: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite and positive, got {theta}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { theta, sigma })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// q = 1 + 1/θ, κ = σ/θ.
    pub fn to_q_kappa(&self) -> QKappa {
        QKappa {
            q: 1.0 + 1.0 / self.theta,
            kappa: self.sigma / self.theta,
        }
    }

    /// `P(X ≥ x)`. Negative `x` is a domain error.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain(format!("survival undefined at x = {x}")));
        }
        Ok((-self.theta * log1p_ratio(x, self.sigma)).exp())
    }

    /// `P(X < x)`, zero below the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-self.theta * log1p_ratio(x, self.sigma)).exp_m1()
    }

    /// Density; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.log_density(x).exp()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x.is_nan() || x < 0.0 {
            return f64::NEG_INFINITY;
        }
        self.theta.ln() - self.sigma.ln() - (self.theta + 1.0) * log1p_ratio(x, self.sigma)
    }

    /// The `x` whose survival probability is `s`.
    pub fn quantile(&self, s: UnitInterval) -> Result<f64> {
        let s = s.get();
        if s == 0.0 {
            return Err(Error::Domain(
                "quantile at survival probability 0 is infinite".into(),
            ));
        }
        Ok(self.quantile_unchecked(s))
    }

    #[inline]
    fn quantile_unchecked(&self, s: f64) -> f64 {
        (self.sigma * (-s.ln() / self.theta).exp_m1()).min(f64::MAX)
    }

    /// `n` draws by inverse transform with uniforms on (0, 1].
    pub fn sample(&self, n: usize, stream: &RngStream) -> Sample {
        self.sample_tail(0.0, n, stream)
    }

    /// `n` draws from the conditional law of `X` given `X ≥ x0`.
    ///
    /// Uses `x = x0 + (σ + x0)(U^(−1/θ) − 1)`, which equals
    /// `(σ + x0)U^(−1/θ) − σ` and reproduces [`Self::sample`] bit for bit at `x0 = 0`.
    pub fn sample_tail(&self, x0: f64, n: usize, stream: &RngStream) -> Sample {
        assert!(x0.is_finite() && x0 >= 0.0, "x0 must be finite and >= 0");
        let mut rng = stream.rng();
        let scale = self.sigma + x0;
        let values = (0..n)
            .map(|_| {
                let u = uniform_open_closed(&mut rng);
                (x0 + scale * (-u.ln() / self.theta).exp_m1()).min(f64::MAX)
            })
            .collect();
        Sample::censored(values, x0).expect("inverse-transform draws are finite and >= x0")
    }

    /// Gamma mixture of exponentials: `Z ~ Gamma(θ, 1)`, `X | Z ~ Exp(mean σ/Z)`.
    ///
    /// Marginally `X` has this distribution; kept as an independent check on
    /// [`Self::sample`].
    pub fn sample_gamma_mixture(&self, n: usize, stream: &RngStream) -> Sample {
        let mut rng = stream.rng();
        let gamma = Gamma::new(self.theta, 1.0).expect("theta > 0");
        let values = (0..n)
            .map(|_| {
                let z: f64 = gamma.sample(&mut rng);
                let e = -uniform_open_closed(&mut rng).ln();
                (self.sigma * e / z).min(f64::MAX)
            })
            .collect();
        Sample::new(values).expect("mixture draws are finite and non-negative")
    }
}

/// Increasing-q parameterization; only `q > 1` is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QKappa {
    q: f64,
    kappa: f64,
}

impl QKappa {
    pub fn new(q: f64, kappa: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::InvalidParameter(format!("q must be finite, got {q}")));
        }
        if q <= 1.0 {
            return Err(Error::UnsupportedBranch { q });
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be finite and positive, got {kappa}"
            )));
        }
        Ok(Self { q, kappa })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// θ = 1/(q − 1), σ = κ/(q − 1).
    pub fn to_theta_sigma(&self) -> Result<ThetaSigma> {
        let dq = self.q - 1.0;
        ThetaSigma::new(1.0 / dq, self.kappa / dq)
    }
}

impl TryFrom<QKappa> for ThetaSigma {
    type Error = Error;

    fn try_from(p: QKappa) -> Result<Self> {
        p.to_theta_sigma()
    }
}

impl From<ThetaSigma> for QKappa {
    fn from(p: ThetaSigma) -> Self {
        p.to_q_kappa()
    }
}

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self(p))
        } else {
            Err(Error::Domain(format!("probability {p} outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `ln(1 + x/σ)` accurate for `x ≪ σ` and free of overflow for huge `x/σ`.
#[inline]
pub fn log1p_ratio(x: f64, sigma: f64) -> f64 {
    let r = x / sigma;
    if r.is_finite() {
        r.ln_1p()
    } else {
        x.ln() - sigma.ln()
    }
}
