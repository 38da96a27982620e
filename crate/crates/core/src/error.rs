use thiserror::Error;

use crate::resampling::BootstrapSummary;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// q <= 1 selects the bounded-support branch, which is not supported.
    #[error("unsupported branch: q = {q} (only q > 1 is supported)")]
    UnsupportedBranch { q: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("value at index {index} is not finite")]
    NonFinite { index: usize },

    #[error("value {value} at index {index} is negative")]
    NegativeValue { index: usize, value: f64 },

    #[error("value {value} at index {index} is below the censoring threshold {x0}")]
    BelowThreshold { index: usize, value: f64, x0: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("censored sample (x0 = {x0}) passed to an uncensored routine")]
    CensoredSample { x0: f64 },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("{matrix} is singular or ill-conditioned")]
    IllConditioned { matrix: &'static str },

    #[error("insufficient replicates: need at least {needed}, got {got}")]
    InsufficientReplicates { needed: usize, got: usize },

    #[error("bootstrap unstable: {failures} of {total} replicates failed")]
    BootstrapUnstable {
        failures: usize,
        total: usize,
        partial: Box<BootstrapSummary>,
    },

    #[error("goodness-of-fit bootstrap unstable: {failures} of {total} replicates failed")]
    GofUnstable { failures: usize, total: usize },

    #[error("R-squared undefined: log empirical survival has zero variance")]
    UndefinedRSquared,

    #[error("no usable replicates for n = {n}, method = {method}")]
    MissingGroup { n: usize, method: String },

    #[error("line {line}: cannot parse {text:?} as a number")]
    Parse { line: usize, text: String },

    #[error("line {line}: negative value {value}")]
    NegativeLine { line: usize, value: f64 },

    #[error("values below the censoring threshold {x0} on lines {lines:?}")]
    BelowThresholdLines { x0: f64, lines: Vec<usize> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
