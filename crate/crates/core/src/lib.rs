//! Maximum-likelihood fitting of q-exponential (type-II generalized Pareto)
//! distributions, with censoring, asymptotic and bootstrap uncertainty,
//! a least-squares baseline, and mis-specification diagnostics.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod diagnostics;
pub mod distribution;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod inference;
pub mod ingest;
pub mod numeric;
pub mod par;
pub mod report;
pub mod resampling;
pub mod rng;
pub mod sample;

pub use distribution::{QKappa, ThetaSigma, UnitInterval};
pub use error::{Error, Result};
pub use estimation::{BoundaryFlag, FitResult, SolverConfig};
pub use rng::RngStream;
pub use sample::Sample;
