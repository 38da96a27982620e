//! Replicate-level parallelism.
//!
//! With the `parallel` feature (default) indexed maps run on the rayon pool;
//! without it they run as a plain loop. Output order always follows the
//! index, so results are identical across worker counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(0), f(1), ..., f(len - 1)` and returns the results in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Sequential counterpart of [`map_indexed`], always available.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Runs `op` on a dedicated pool of `threads` workers (`None` = global pool).
///
/// Without the `parallel` feature the thread count is ignored.
pub fn with_threads<R, OP>(threads: Option<usize>, op: OP) -> R
where
    R: Send,
    OP: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                Ok(pool) => pool.install(op),
                Err(_) => op(),
            },
            None => op(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}

pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
