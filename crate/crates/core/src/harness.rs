//! Monte Carlo comparison of the MLE and the curve-fit baseline across sample
//! sizes, with plot-ready CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::baseline::curvefit;
use crate::distribution::ThetaSigma;
use crate::error::{Error, Result};
use crate::estimation::{fit, SolverConfig};
use crate::numeric::{quantile_sorted, sorted_copy};
use crate::par;
use crate::rng::RngStream;

pub const DEFAULT_SIZES: [usize; 4] = [10, 100, 1000, 10_000];
pub const DEFAULT_REPS: usize = 500;
pub const SUMMARY_PROBS: [f64; 3] = [0.05, 0.5, 0.95];

pub const RAW_HEADER: &str = "n,rep,method,theta_hat,sigma_hat,q_hat,kappa_hat,converged";
pub const SUMMARY_HEADER: &str = "n,method,q_median,q_p05,q_p95,q_min,q_max,failures";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mle,
    Curvefit,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mle => "mle",
            Method::Curvefit => "curvefit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Method::Mle),
            "curvefit" => Ok(Method::Curvefit),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub truth: ThetaSigma,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub seed: RngStream,
    pub solver: SolverConfig,
}

impl ExperimentPlan {
    pub fn new(truth: ThetaSigma, seed: RngStream) -> Self {
        Self {
            truth,
            sizes: DEFAULT_SIZES.to_vec(),
            reps: DEFAULT_REPS,
            methods: vec![Method::Mle, Method::Curvefit],
            seed,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidParameter("no sample sizes given".into()));
        }
        if self.sizes[0] < 2 {
            return Err(Error::InvalidParameter("sample sizes must be at least 2".into()));
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("sample sizes must be strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods given".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidParameter(format!("method {m} listed twice")));
            }
        }
        self.solver.validate()
    }

    /// Stream for replicate `rep` at `sizes[size_index]`.
    pub fn replicate_stream(&self, size_index: usize, rep: usize) -> RngStream {
        self.seed.child(size_index as u64).child(rep as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawRow {
    pub n: usize,
    pub rep: usize,
    pub method: Method,
    pub theta_hat: f64,
    pub sigma_hat: f64,
    pub q_hat: f64,
    pub kappa_hat: f64,
    pub converged: bool,
}

impl RawRow {
    fn failed(n: usize, rep: usize, method: Method) -> Self {
        Self {
            n,
            rep,
            method,
            theta_hat: f64::NAN,
            sigma_hat: f64::NAN,
            q_hat: f64::NAN,
            kappa_hat: f64::NAN,
            converged: false,
        }
    }

    fn from_params(n: usize, rep: usize, method: Method, p: &ThetaSigma, converged: bool) -> Self {
        let qk = p.to_q_kappa();
        Self {
            n,
            rep,
            method,
            theta_hat: p.theta(),
            sigma_hat: p.sigma(),
            q_hat: qk.q(),
            kappa_hat: qk.kappa(),
            converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub n: usize,
    pub method: Method,
    /// Quantiles of q̂ at the summary's `probs`.
    pub q_quantiles: Vec<f64>,
    pub q_min: f64,
    pub q_max: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub probs: Vec<f64>,
    pub groups: Vec<GroupSummary>,
    pub raw: Vec<RawRow>,
}

impl ExperimentSummary {
    pub fn group(&self, n: usize, method: Method) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.n == n && g.method == method)
    }

    /// Quantile of q̂ at `prob`, which must be one of the summary's levels.
    pub fn quantile(&self, g: &GroupSummary, prob: f64) -> Option<f64> {
        self.probs.iter().position(|&p| p == prob).map(|i| g.q_quantiles[i])
    }

    /// Converged q̂ values for one group, in replicate order.
    pub fn q_values(&self, n: usize, method: Method) -> Vec<f64> {
        self.raw
            .iter()
            .filter(|r| r.n == n && r.method == method && r.converged)
            .map(|r| r.q_hat)
            .collect()
    }
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentSummary> {
    plan.validate()?;
    let reps = plan.reps;
    let per_task: Vec<Vec<RawRow>> = par::map_indexed(plan.sizes.len() * reps, |task| {
        let (size_index, rep) = (task / reps, task % reps);
        let n = plan.sizes[size_index];
        let sample = plan.truth.sample(n, &plan.replicate_stream(size_index, rep));
        plan.methods
            .iter()
            .map(|&method| match method {
                Method::Mle => match fit(&sample, &plan.solver) {
                    Ok(r) => RawRow::from_params(n, rep, method, &r.params, r.converged),
                    Err(_) => RawRow::failed(n, rep, method),
                },
                Method::Curvefit => match curvefit(&sample, &plan.solver) {
                    Ok(r) => RawRow::from_params(n, rep, method, &r.params, r.converged),
                    Err(_) => RawRow::failed(n, rep, method),
                },
            })
            .collect()
    });
    summarize(per_task.into_iter().flatten().collect(), &SUMMARY_PROBS)
}

/// Groups `raw` by (n, method) in order of first appearance and summarizes the
/// converged q̂ of each group.
pub fn summarize(raw: Vec<RawRow>, probs: &[f64]) -> Result<ExperimentSummary> {
    if raw.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("quantile level {p} outside [0, 1]")));
    }
    let mut keys: Vec<(usize, Method)> = Vec::new();
    for r in &raw {
        if !keys.contains(&(r.n, r.method)) {
            keys.push((r.n, r.method));
        }
    }
    let mut groups = Vec::with_capacity(keys.len());
    for (n, method) in keys {
        let rows = raw.iter().filter(|r| r.n == n && r.method == method);
        let total = rows.clone().count();
        let q: Vec<f64> = rows.filter(|r| r.converged).map(|r| r.q_hat).collect();
        if q.is_empty() {
            return Err(Error::MissingGroup {
                n,
                method: method.to_string(),
            });
        }
        let sorted = sorted_copy(&q);
        groups.push(GroupSummary {
            n,
            method,
            q_quantiles: probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect(),
            q_min: sorted[0],
            q_max: sorted[sorted.len() - 1],
            successes: q.len(),
            failures: total - q.len(),
        });
    }
    Ok(ExperimentSummary {
        probs: probs.to_vec(),
        groups,
        raw,
    })
}

pub fn write_raw_csv<W: Write>(summary: &ExperimentSummary, mut out: W) -> Result<()> {
    writeln!(out, "{RAW_HEADER}")?;
    for r in &summary.raw {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n, r.rep, r.method, r.theta_hat, r.sigma_hat, r.q_hat, r.kappa_hat, r.converged
        )?;
    }
    Ok(())
}

/// Needs a summary computed at [`SUMMARY_PROBS`].
pub fn write_summary_csv<W: Write>(summary: &ExperimentSummary, mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for g in &summary.groups {
        let q = |p: f64| {
            summary.quantile(g, p).ok_or_else(|| {
                Error::InvalidParameter(format!("summary lacks the {p} quantile"))
            })
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            g.n,
            g.method,
            q(0.5)?,
            q(0.05)?,
            q(0.95)?,
            g.q_min,
            g.q_max,
            g.failures
        )?;
    }
    Ok(())
}
