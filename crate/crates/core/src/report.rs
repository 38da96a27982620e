//! Machine-readable reports emitted by the command-line tool.
//!
//! JSON numbers are written in shortest round-trip form, so every `f64`
//! survives a parse/serialize cycle bit-exactly. Text output is a flat
//! `key: value` rendering of the same JSON document.

use serde::Serialize;
use serde_json::Value;

use crate::diagnostics::{GofReport, SpecReport};
use crate::estimation::{BoundaryFlag, FitResult};
use crate::inference::{CovarianceReport, InfoKind};
use crate::resampling::BootstrapSummary;
use crate::sample::Sample;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimates {
    pub theta: f64,
    pub sigma: f64,
    pub q: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intervals {
    pub level: f64,
    pub theta: (f64, f64),
    pub sigma: (f64, f64),
    pub q: (f64, f64),
    pub kappa: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub version: &'static str,
    pub source: String,
    pub seed: u64,
    pub n: usize,
    pub x0: f64,
    pub theta: f64,
    pub sigma: f64,
    pub q: f64,
    pub kappa: f64,
    pub loglik: f64,
    pub converged: bool,
    pub boundary_flag: BoundaryFlag,
    pub iterations: usize,
    pub residual: f64,
    pub fixed_theta: Option<f64>,
    pub fixed_sigma: Option<f64>,
    pub info: InfoKind,
    /// Asymptotic standard errors; absent for boundary fits.
    pub se: Option<Estimates>,
    /// Wald intervals; absent for boundary fits.
    pub ci: Option<Intervals>,
    pub bootstrap: Option<BootstrapSummary>,
    pub gof: Option<GofReport>,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn new(source: &str, seed: u64, s: &Sample, fit: &FitResult, info: InfoKind) -> Self {
        Self {
            version: VERSION,
            source: source.to_string(),
            seed,
            n: s.n(),
            x0: s.x0(),
            theta: fit.params.theta(),
            sigma: fit.params.sigma(),
            q: fit.params_qk.q(),
            kappa: fit.params_qk.kappa(),
            loglik: fit.loglik,
            converged: fit.converged,
            boundary_flag: fit.boundary_flag,
            iterations: fit.iterations,
            residual: fit.residual,
            fixed_theta: None,
            fixed_sigma: None,
            info,
            se: None,
            ci: None,
            bootstrap: None,
            gof: None,
            notes: Vec::new(),
        }
    }

    pub fn set_covariance(&mut self, c: &CovarianceReport) {
        self.se = Some(Estimates {
            theta: c.se_theta,
            sigma: c.se_sigma,
            q: c.se_q,
            kappa: c.se_kappa,
        });
        self.ci = Some(Intervals {
            level: c.ci_level,
            theta: c.wald_cis.theta,
            sigma: c.wald_cis.sigma,
            q: c.wald_cis.q,
            kappa: c.wald_cis.kappa,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub version: &'static str,
    pub source: String,
    pub seed: u64,
    pub n: usize,
    pub x0: f64,
    pub theta: f64,
    pub sigma: f64,
    pub q: f64,
    pub kappa: f64,
    pub loglik: f64,
    pub converged: bool,
    pub boundary_flag: BoundaryFlag,
    /// R² of the log-survival regression evaluated at the MLE.
    pub r_squared_mle: Option<f64>,
    /// R² of the least-squares curve fit itself.
    pub r_squared_curvefit: Option<f64>,
    pub gof: GofReport,
    pub spec: SpecReport,
    /// Heuristic warnings; empty when nothing looks amiss.
    pub flags: Vec<String>,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize to JSON")
}

/// `key: value` lines, nested keys joined with `.`.
pub fn to_text<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize to JSON");
    let mut out = String::new();
    flatten("", &value, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten(&key(k), child, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), child, out);
            }
        }
        _ => out.push_str(&format!("{prefix}: {}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "n/a".to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
