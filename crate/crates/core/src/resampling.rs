//! Parametric and non-parametric bootstrap.
//!
//! Replicate `b` draws from the stream `cfg.seed.child(b)` and replicates are
//! mapped in index order, so a summary depends only on the seed, never on the
//! worker count.

use rand::Rng;
use serde::Serialize;

use crate::distribution::ThetaSigma;
use crate::error::{Error, Result};
use crate::estimation::{self, FitResult, SolverConfig};
use crate::numeric::{mean, quantile_sorted, sample_sd, sorted_copy};
use crate::par;
use crate::rng::RngStream;
use crate::sample::Sample;

/// Fewest replicates for which percentile intervals are reported.
pub const MIN_CI_REPLICATES: usize = 100;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    #[default]
    Parametric,
    Nonparametric,
}

impl BootstrapMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Parametric => "parametric",
            Self::Nonparametric => "nonparametric",
        }
    }
}

/// How each replicate is re-estimated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Refit {
    #[default]
    Joint,
    FixedSigma(f64),
    FixedTheta(f64),
}

impl Refit {
    pub fn apply(&self, s: &Sample, solver: &SolverConfig) -> Result<FitResult> {
        match *self {
            Refit::Joint => estimation::fit(s, solver),
            Refit::FixedSigma(sigma) => estimation::fit_fixed_sigma(s, sigma),
            Refit::FixedTheta(theta) => estimation::fit_fixed_theta(s, theta, solver),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub mode: BootstrapMode,
    pub seed: RngStream,
    pub solver: SolverConfig,
    pub refit: Refit,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            level: 0.90,
            mode: BootstrapMode::Parametric,
            seed: RngStream::from_seed(0),
            solver: SolverConfig::default(),
            refit: Refit::Joint,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidParameter("bootstrap needs at least one replicate".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "CI level must lie in (0, 1), got {}",
                self.level
            )));
        }
        self.solver.validate()
    }

    pub fn with_mode(mut self, mode: BootstrapMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSummary {
    pub estimate: f64,
    pub bias: f64,
    pub se: f64,
    /// Percentile interval; absent with fewer than [`MIN_CI_REPLICATES`] successes.
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub mode: BootstrapMode,
    pub level: f64,
    pub replicates: usize,
    pub failures: usize,
    pub theta: ParamSummary,
    pub sigma: ParamSummary,
    pub q: ParamSummary,
    pub kappa: ParamSummary,
    /// One row per replicate: (θ, σ, q, κ), `None` where the refit failed.
    #[serde(skip)]
    pub replicate_estimates: Vec<Option<[f64; 4]>>,
}

impl BootstrapSummary {
    pub fn successes(&self) -> usize {
        self.replicates - self.failures
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.replicate_estimates.iter().flatten().map(|r| r[j]).collect()
    }

    pub fn params(&self) -> [&ParamSummary; 4] {
        [&self.theta, &self.sigma, &self.q, &self.kappa]
    }
}

/// Midpoint-interpolated `(1 − level)/2` and `(1 + level)/2` quantiles.
pub fn percentile_ci(replicates: &[f64], level: f64) -> Result<(f64, f64)> {
    if replicates.len() < MIN_CI_REPLICATES {
        return Err(Error::InsufficientReplicates {
            needed: MIN_CI_REPLICATES,
            got: replicates.len(),
        });
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!("CI level must lie in [0, 1), got {level}")));
    }
    let sorted = sorted_copy(replicates);
    Ok((
        quantile_sorted(&sorted, 0.5 * (1.0 - level)),
        quantile_sorted(&sorted, 0.5 * (1.0 + level)),
    ))
}

/// One bootstrap data set drawn according to `mode`.
pub fn resample(s: &Sample, fitted: &ThetaSigma, mode: BootstrapMode, stream: &RngStream) -> Sample {
    match mode {
        BootstrapMode::Parametric => fitted.sample_tail(s.x0(), s.n(), stream),
        BootstrapMode::Nonparametric => {
            let mut rng = stream.rng();
            let values = s.values();
            let drawn = (0..values.len())
                .map(|_| values[rng.random_range(0..values.len())])
                .collect();
            Sample::censored(drawn, s.x0()).expect("resampled data keep the sample's invariants")
        }
    }
}

pub fn bootstrap(s: &Sample, fit: &FitResult, cfg: &BootstrapConfig) -> Result<BootstrapSummary> {
    cfg.validate()?;
    if !fit.converged {
        return Err(Error::NoConvergence("bootstrap requires a converged fit".into()));
    }
    let rows: Vec<Option<[f64; 4]>> = par::map_indexed(cfg.replicates, |b| {
        let data = resample(s, &fit.params, cfg.mode, &cfg.seed.child(b as u64));
        match cfg.refit.apply(&data, &cfg.solver) {
            Ok(r) if r.converged => Some([
                r.params.theta(),
                r.params.sigma(),
                r.params_qk.q(),
                r.params_qk.kappa(),
            ]),
            _ => None,
        }
    });
    let summary = summarize(fit, cfg, rows);
    if summary.failures as f64 > MAX_FAILURE_FRACTION * cfg.replicates as f64 {
        return Err(Error::BootstrapUnstable {
            failures: summary.failures,
            total: summary.replicates,
            partial: Box::new(summary),
        });
    }
    Ok(summary)
}

fn summarize(fit: &FitResult, cfg: &BootstrapConfig, rows: Vec<Option<[f64; 4]>>) -> BootstrapSummary {
    let failures = rows.iter().filter(|r| r.is_none()).count();
    let point = [
        fit.params.theta(),
        fit.params.sigma(),
        fit.params_qk.q(),
        fit.params_qk.kappa(),
    ];
    let param = |j: usize| {
        let col: Vec<f64> = rows.iter().flatten().map(|r| r[j]).collect();
        if col.is_empty() {
            return ParamSummary {
                estimate: point[j],
                bias: f64::NAN,
                se: f64::NAN,
                ci: None,
            };
        }
        ParamSummary {
            estimate: point[j],
            bias: mean(&col) - point[j],
            se: sample_sd(&col),
            ci: percentile_ci(&col, cfg.level).ok(),
        }
    };
    BootstrapSummary {
        mode: cfg.mode,
        level: cfg.level,
        replicates: rows.len(),
        failures,
        theta: param(0),
        sigma: param(1),
        q: param(2),
        kappa: param(3),
        replicate_estimates: rows,
    }
}
