//! Least-squares fit of `ln S_n(x) ≈ −θ ln(1 + x/σ)` and the R² statistic.
//!
//! Kept as the comparison baseline for the MLE. Tied observations share one
//! evaluation point of `S_n`, weighted by multiplicity in every sum.

use serde::Serialize;

use crate::distribution::{log1p_ratio, ThetaSigma};
use crate::error::{Error, Result};
use crate::estimation::{BoundaryFlag, SigmaLimits, SolverConfig};
use crate::numeric::{brent_minimize, sorted_copy};
use crate::sample::Sample;

const GRID_PER_DECADE: usize = 16;

/// `S_n(x) = #{j : x_j ≥ x}/n` at each distinct observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSurvival {
    /// `(x, S_n(x))`, increasing in `x`.
    pub points: Vec<(f64, f64)>,
    pub multiplicity: Vec<usize>,
    pub n: usize,
}

impl EmpiricalSurvival {
    fn log_survival(&self) -> Vec<f64> {
        self.points.iter().map(|&(_, s)| s.ln()).collect()
    }
}

pub fn empirical_survival(s: &Sample) -> EmpiricalSurvival {
    let sorted = sorted_copy(s.values());
    let n = sorted.len();
    let mut points = Vec::new();
    let mut multiplicity = Vec::new();
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == x {
            j += 1;
        }
        points.push((x, (n - i) as f64 / n as f64));
        multiplicity.push(j - i);
        i = j;
    }
    EmpiricalSurvival {
        points,
        multiplicity,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveFitResult {
    pub params: ThetaSigma,
    /// Least-squares objective at `params`.
    pub sse: f64,
    pub r_squared: f64,
    pub converged: bool,
    pub boundary_flag: BoundaryFlag,
}

/// Least-squares objective `Σ (ln S_n(xᵢ) + θ ln(1 + xᵢ/σ))²` at `p`.
pub fn curvefit_objective(s: &Sample, p: &ThetaSigma) -> f64 {
    let es = empirical_survival(s);
    Objective::new(&es).sse(p.theta(), p.sigma())
}

struct Objective<'a> {
    xs: Vec<f64>,
    log_s: Vec<f64>,
    weights: &'a [usize],
}

impl<'a> Objective<'a> {
    fn new(es: &'a EmpiricalSurvival) -> Self {
        Self {
            xs: es.points.iter().map(|p| p.0).collect(),
            log_s: es.log_survival(),
            weights: &es.multiplicity,
        }
    }

    fn sse(&self, theta: f64, sigma: f64) -> f64 {
        self.xs
            .iter()
            .zip(&self.log_s)
            .zip(self.weights)
            .map(|((&x, &a), &m)| {
                let r = a + theta * log1p_ratio(x, sigma);
                m as f64 * r * r
            })
            .sum()
    }

    /// Least-squares θ for fixed σ and the resulting objective.
    fn profile(&self, t: f64) -> (f64, f64) {
        let sigma = t.exp();
        let mut ab = 0.0;
        let mut bb = 0.0;
        for ((&x, &a), &m) in self.xs.iter().zip(&self.log_s).zip(self.weights) {
            let b = log1p_ratio(x, sigma);
            ab += m as f64 * a * b;
            bb += m as f64 * b * b;
        }
        let theta = -ab / bb;
        (theta, self.sse(theta, sigma))
    }
}

pub fn curvefit(s: &Sample, cfg: &SolverConfig) -> Result<CurveFitResult> {
    cfg.validate()?;
    if s.is_censored() {
        return Err(Error::CensoredSample { x0: s.x0() });
    }
    let es = empirical_survival(s);
    if es.points.len() < 2 {
        return Err(Error::DegenerateSample("all observations are equal".into()));
    }
    let obj = Objective::new(&es);
    let limits = SigmaLimits::new(s, cfg)?;
    let (mut lo, mut hi) = limits.initial();
    let step = 10f64.ln();
    let grid = |a: f64, b: f64| {
        let m = ((((b - a) / step) * GRID_PER_DECADE as f64).ceil() as usize).max(4);
        (0..=m).map(move |i| a + (b - a) * i as f64 / m as f64)
    };
    let eval = |t: f64| (t, obj.profile(t).1);

    let mut pts: Vec<(f64, f64)> = grid(lo, hi).map(eval).collect();
    loop {
        let k = argmin(&pts);
        if k == pts.len() - 1 && hi < limits.hi {
            let new_hi = (hi + step).min(limits.hi);
            pts.extend(grid(hi, new_hi).skip(1).map(eval));
            hi = new_hi;
        } else if k == 0 && lo > limits.lo {
            let new_lo = (lo - step).max(limits.lo);
            let mut extra: Vec<(f64, f64)> = grid(new_lo, lo).map(eval).collect();
            extra.pop();
            extra.extend(pts);
            pts = extra;
            lo = new_lo;
        } else {
            break;
        }
    }

    let last = pts.len() - 1;
    let mut best: Option<(f64, f64, bool, BoundaryFlag)> = None;
    for k in 0..=last {
        let here = pts[k].1;
        let is_min = (k == 0 || here <= pts[k - 1].1) && (k == last || here <= pts[k + 1].1);
        if !is_min {
            continue;
        }
        let candidate = if k == last && pts[k].0 >= limits.hi {
            (pts[k].0, here, true, BoundaryFlag::SigmaUpperBound)
        } else if k == 0 && pts[k].0 <= limits.lo {
            (pts[k].0, here, true, BoundaryFlag::SigmaLowerBound)
        } else {
            let a = pts[k.saturating_sub(1)].0;
            let b = pts[(k + 1).min(last)].0;
            let m = brent_minimize(|t| obj.profile(t).1, a, b, 1e-10, cfg.max_iter);
            if m.fx <= here {
                (m.x, m.fx, m.converged, BoundaryFlag::Interior)
            } else {
                (pts[k].0, here, m.converged, BoundaryFlag::Interior)
            }
        };
        if best.is_none_or(|b| candidate.1 < b.1) {
            best = Some(candidate);
        }
    }
    let (t, sse, converged, boundary_flag) =
        best.ok_or_else(|| Error::NoConvergence("curve-fit objective undefined".into()))?;
    let (theta, _) = obj.profile(t);
    let params = ThetaSigma::new(theta, t.exp())
        .map_err(|_| Error::NoConvergence(format!("curve fit left the parameter space (theta = {theta})")))?;
    let r_squared = r_squared(s, &params)?;
    Ok(CurveFitResult {
        params,
        sse,
        r_squared,
        converged,
        boundary_flag,
    })
}

/// Fraction of the variance of `ln S_n` explained by `−θ ln(1 + x/σ)`.
pub fn r_squared(s: &Sample, p: &ThetaSigma) -> Result<f64> {
    let es = empirical_survival(s);
    let obj = Objective::new(&es);
    let n = es.n as f64;
    let mean_a: f64 = obj
        .log_s
        .iter()
        .zip(obj.weights)
        .map(|(&a, &m)| m as f64 * a)
        .sum::<f64>()
        / n;
    let ss_tot: f64 = obj
        .log_s
        .iter()
        .zip(obj.weights)
        .map(|(&a, &m)| m as f64 * (a - mean_a).powi(2))
        .sum();
    if !(ss_tot > 0.0) {
        return Err(Error::UndefinedRSquared);
    }
    Ok(1.0 - obj.sse(p.theta(), p.sigma()) / ss_tot)
}

fn argmin(pts: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.1 < pts[best].1 || pts[best].1.is_nan() {
            best = i;
        }
    }
    best
}
