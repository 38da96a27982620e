//! Maximum-likelihood estimation, plain and left-censored.
//!
//! With θ profiled out in closed form,
//!
//! ```text
//! θ̂(σ) = n / Σ ln[(1 + xᵢ/σ) / (1 + x0/σ)]
//! ```
//!
//! the joint problem reduces to a scalar search over `t = ln σ`. The search
//! scans a geometric grid (expanding it while the best point sits on an edge),
//! then solves the scaled σ estimating equation
//!
//! ```text
//! r(σ) = (σ/n)·∂ℓ/∂σ = −1 + ((θ̂+1)/n) Σ xᵢ/(σ+xᵢ) − θ̂·x0/(σ+x0) = 0
//! ```
//!
//! by Brent's method around each local maximum. `|r|` at the answer is the
//! reported residual; it is the relative residual of the σ fixed-point equation.

use serde::{Deserialize, Serialize};

use crate::distribution::{log1p_ratio, QKappa, ThetaSigma};
use crate::error::{Error, Result};
use crate::numeric::{brent_minimize, brent_root, quantile_sorted, sorted_copy};
use crate::sample::Sample;

const GRID_PER_DECADE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tolerance on the estimating-equation residual.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Initial σ bracket is `[median/f, median·f]`.
    pub sigma_bracket_factor: f64,
    /// σ search is confined to `[min⁺/f, max·f]`.
    pub sigma_max_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 200,
            sigma_bracket_factor: 10.0,
            sigma_max_factor: 1e9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.sigma_bracket_factor > 1.0 && self.sigma_max_factor > 1.0) {
            return Err(Error::InvalidParameter("sigma factors must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFlag {
    Interior,
    /// Profile still rising at the largest admissible σ (exponential limit).
    SigmaUpperBound,
    /// Profile still rising at the smallest admissible σ (censored Pareto limit).
    SigmaLowerBound,
}

impl BoundaryFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::SigmaUpperBound => "sigma_upper_bound",
            Self::SigmaLowerBound => "sigma_lower_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub params: ThetaSigma,
    pub params_qk: QKappa,
    /// Log-likelihood at the estimate, in nats (censored when `x0 > 0`).
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub boundary_flag: BoundaryFlag,
}

impl FitResult {
    fn new(
        s: &Sample,
        params: ThetaSigma,
        converged: bool,
        iterations: usize,
        residual: f64,
        boundary_flag: BoundaryFlag,
    ) -> Self {
        Self {
            params,
            params_qk: params.to_q_kappa(),
            loglik: censored_log_likelihood(s, &params),
            converged,
            iterations,
            residual,
            boundary_flag,
        }
    }

    pub fn is_interior(&self) -> bool {
        self.boundary_flag == BoundaryFlag::Interior
    }
}

/// `ℓ(θ, σ) = −n ln σ + n ln θ − (θ+1) Σ ln(1 + xᵢ/σ)`, ignoring any censoring.
pub fn log_likelihood(s: &Sample, p: &ThetaSigma) -> f64 {
    let n = s.n() as f64;
    let (theta, sigma) = (p.theta(), p.sigma());
    let sum: f64 = s.values().iter().map(|&x| log1p_ratio(x, sigma)).sum();
    -n * sigma.ln() + n * theta.ln() - (theta + 1.0) * sum
}

/// `ℓ_C = ℓ + nθ ln(1 + x0/σ)`: the likelihood conditional on `X ≥ x0`.
pub fn censored_log_likelihood(s: &Sample, p: &ThetaSigma) -> f64 {
    let base = log_likelihood(s, p);
    if s.x0() == 0.0 {
        return base;
    }
    base + s.n() as f64 * p.theta() * log1p_ratio(s.x0(), p.sigma())
}

/// Closed-form θ̂ for known σ (censoring-aware).
pub fn mle_theta_given_sigma(s: &Sample, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let denom = excess_log_sum(s.values(), s.x0(), sigma);
    if !(denom > 0.0) {
        return Err(Error::DegenerateSample(
            "every observation sits at the support minimum".into(),
        ));
    }
    Ok(s.n() as f64 / denom)
}

/// σ̂ for known θ: root of the σ estimating equation (censoring-aware).
pub fn mle_sigma_given_theta(s: &Sample, theta: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if s.values().iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateSample("all observations are zero".into()));
    }
    let (values, x0) = (s.values(), s.x0());
    let n = s.n() as f64;
    let score = |t: f64| {
        let sigma = t.exp();
        let w: f64 = values.iter().map(|&x| x / (sigma + x)).sum();
        -1.0 + (theta + 1.0) / n * w - theta * x0 / (sigma + x0)
    };
    let limits = SigmaLimits::new(s, cfg)?;
    let (mut lo, mut hi) = limits.initial();
    let step = 10f64.ln();
    while score(hi) > 0.0 {
        if hi >= limits.hi {
            return Err(Error::NoConvergence(format!(
                "sigma estimating equation has no root below sigma = {:e}",
                limits.hi.exp()
            )));
        }
        hi = (hi + step).min(limits.hi);
    }
    while score(lo) < 0.0 {
        if lo <= limits.lo {
            return Err(Error::NoConvergence(format!(
                "sigma estimating equation has no root above sigma = {:e}",
                limits.lo.exp()
            )));
        }
        lo = (lo - step).max(limits.lo);
    }
    let root = brent_root(score, lo, hi, 1e-15, cfg.max_iter)
        .ok_or_else(|| Error::NoConvergence("failed to bracket sigma".into()))?;
    let sigma = root.x.exp();
    if !root.converged || root.fx.abs() >= cfg.rel_tol {
        return Err(Error::NoConvergence(format!(
            "sigma residual {:e} after {} iterations",
            root.fx.abs(),
            root.iterations
        )));
    }
    Ok(sigma)
}

/// Joint MLE of (θ, σ) for an uncensored sample.
pub fn mle_joint(s: &Sample, cfg: &SolverConfig) -> Result<FitResult> {
    if s.is_censored() {
        return Err(Error::CensoredSample { x0: s.x0() });
    }
    profile_fit(s, cfg)
}

/// Joint MLE of (θ, σ) conditional on `X ≥ x0`; identical to [`mle_joint`] at `x0 = 0`.
pub fn mle_joint_censored(s: &Sample, cfg: &SolverConfig) -> Result<FitResult> {
    profile_fit(s, cfg)
}

/// Dispatches on the sample's censoring threshold.
pub fn fit(s: &Sample, cfg: &SolverConfig) -> Result<FitResult> {
    if s.is_censored() {
        mle_joint_censored(s, cfg)
    } else {
        mle_joint(s, cfg)
    }
}

/// Fit with σ held fixed; θ from its closed form.
pub fn fit_fixed_sigma(s: &Sample, sigma: f64) -> Result<FitResult> {
    let theta = mle_theta_given_sigma(s, sigma)?;
    let params = ThetaSigma::new(theta, sigma)?;
    Ok(FitResult::new(s, params, true, 0, 0.0, BoundaryFlag::Interior))
}

/// Fit with θ held fixed; σ from its estimating equation.
pub fn fit_fixed_theta(s: &Sample, theta: f64, cfg: &SolverConfig) -> Result<FitResult> {
    let sigma = mle_sigma_given_theta(s, theta, cfg)?;
    let params = ThetaSigma::new(theta, sigma)?;
    let residual = sigma_residual(s, &params).abs();
    Ok(FitResult::new(s, params, true, 0, residual, BoundaryFlag::Interior))
}

/// `(σ/n)·∂ℓ_C/∂σ` at `p`; zero at a stationary point in σ.
pub fn sigma_residual(s: &Sample, p: &ThetaSigma) -> f64 {
    let (theta, sigma, x0) = (p.theta(), p.sigma(), s.x0());
    let n = s.n() as f64;
    let w: f64 = s.values().iter().map(|&x| x / (sigma + x)).sum();
    -1.0 + (theta + 1.0) / n * w - theta * x0 / (sigma + x0)
}

fn excess_log_sum(values: &[f64], x0: f64, sigma: f64) -> f64 {
    if x0 == 0.0 {
        values.iter().map(|&x| log1p_ratio(x, sigma)).sum()
    } else {
        values.iter().map(|&x| ((x - x0) / (sigma + x0)).ln_1p()).sum()
    }
}

/// Search range for `t = ln σ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SigmaLimits {
    pub lo: f64,
    pub hi: f64,
    center: f64,
    half_width: f64,
}

impl SigmaLimits {
    pub(crate) fn new(s: &Sample, cfg: &SolverConfig) -> Result<Self> {
        let sorted = sorted_copy(s.values());
        let max = *sorted.last().expect("non-empty");
        let min_pos = sorted.iter().copied().find(|&x| x > 0.0);
        let Some(min_pos) = min_pos else {
            return Err(Error::DegenerateSample("all observations are zero".into()));
        };
        let mut center = quantile_sorted(&sorted, 0.5);
        if !(center > 0.0) {
            let pos: Vec<f64> = sorted.iter().copied().filter(|&x| x > 0.0).collect();
            center = pos.iter().sum::<f64>() / pos.len() as f64;
        }
        let lo = (min_pos / cfg.sigma_max_factor).ln();
        let hi = (max * cfg.sigma_max_factor).ln();
        Ok(Self {
            lo,
            hi,
            center: center.ln().clamp(lo, hi),
            half_width: cfg.sigma_bracket_factor.ln(),
        })
    }

    pub(crate) fn initial(&self) -> (f64, f64) {
        (
            (self.center - self.half_width).max(self.lo),
            (self.center + self.half_width).min(self.hi),
        )
    }
}

/// Evaluation of the θ-profiled log-likelihood at `t = ln σ`.
#[derive(Debug, Clone, Copy)]
struct ProfilePoint {
    t: f64,
    loglik: f64,
    slope: f64,
}

struct Profile<'a> {
    values: &'a [f64],
    x0: f64,
    n: f64,
}

impl Profile<'_> {
    fn eval(&self, t: f64) -> ProfilePoint {
        let sigma = t.exp();
        let n = self.n;
        let mut log_sum = 0.0;
        let mut excess_sum = 0.0;
        let mut w = 0.0;
        if self.x0 == 0.0 {
            for &x in self.values {
                log_sum += log1p_ratio(x, sigma);
                w += x / (sigma + x);
            }
            excess_sum = log_sum;
        } else {
            for &x in self.values {
                log_sum += log1p_ratio(x, sigma);
                excess_sum += ((x - self.x0) / (sigma + self.x0)).ln_1p();
                w += x / (sigma + x);
            }
        }
        let theta = n / excess_sum;
        let cens = log1p_ratio(self.x0, sigma);
        let loglik = -n * t + n * theta.ln() - (theta + 1.0) * log_sum + n * theta * cens;
        let slope = -1.0 + (theta + 1.0) / n * w - theta * self.x0 / (sigma + self.x0);
        ProfilePoint { t, loglik, slope }
    }

    fn theta_at(&self, t: f64) -> f64 {
        self.n / excess_log_sum(self.values, self.x0, t.exp())
    }
}

fn check_fit_preconditions(s: &Sample) -> Result<()> {
    if s.n() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: s.n() });
    }
    let first = s.values()[0];
    if s.values().iter().all(|&x| x == first) {
        return Err(Error::DegenerateSample("all observations are equal".into()));
    }
    Ok(())
}

fn grid(lo: f64, hi: f64) -> Vec<f64> {
    let decades = (hi - lo) / 10f64.ln();
    let m = ((decades * GRID_PER_DECADE as f64).ceil() as usize).max(4);
    (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect()
}

fn best_index(points: &[ProfilePoint]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.loglik > points[best].loglik || points[best].loglik.is_nan() {
            best = i;
        }
    }
    best
}

fn local_maxima(points: &[ProfilePoint]) -> Vec<usize> {
    let last = points.len() - 1;
    (0..=last)
        .filter(|&i| {
            let here = points[i].loglik;
            let left = i == 0 || here >= points[i - 1].loglik;
            let right = i == last || here >= points[i + 1].loglik;
            left && right
        })
        .collect()
}

struct Located {
    t: f64,
    loglik: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    boundary: BoundaryFlag,
}

fn profile_fit(s: &Sample, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    check_fit_preconditions(s)?;
    if s.values().iter().all(|&x| x == s.x0()) {
        return Err(Error::DegenerateSample("all observations equal the threshold".into()));
    }
    let profile = Profile {
        values: s.values(),
        x0: s.x0(),
        n: s.n() as f64,
    };
    let limits = SigmaLimits::new(s, cfg)?;
    let (mut lo, mut hi) = limits.initial();
    let step = 10f64.ln();

    // Expand while the best grid point sits on an edge that can still move.
    let mut points: Vec<ProfilePoint> = grid(lo, hi).into_iter().map(|t| profile.eval(t)).collect();
    loop {
        let k = best_index(&points);
        let last = points.len() - 1;
        if k == last && hi < limits.hi && points[k].slope > 0.0 {
            let new_hi = (hi + step).min(limits.hi);
            let extra = grid(hi, new_hi);
            points.extend(extra.into_iter().skip(1).map(|t| profile.eval(t)));
            hi = new_hi;
        } else if k == 0 && lo > limits.lo && points[0].slope < 0.0 {
            let new_lo = (lo - step).max(limits.lo);
            let mut extra: Vec<ProfilePoint> = grid(new_lo, lo)
                .into_iter()
                .rev()
                .skip(1)
                .map(|t| profile.eval(t))
                .collect();
            extra.reverse();
            extra.extend(points);
            points = extra;
            lo = new_lo;
        } else {
            break;
        }
    }

    // Several local maxima: widen once by a decade on each side before refining.
    if local_maxima(&points).len() > 1 {
        let new_lo = (lo - step).max(limits.lo);
        let new_hi = (hi + step).min(limits.hi);
        if new_lo < lo || new_hi > hi {
            points = grid(new_lo, new_hi).into_iter().map(|t| profile.eval(t)).collect();
        }
    }

    let mut best: Option<Located> = None;
    for k in local_maxima(&points) {
        let candidate = refine(&profile, &points, k, cfg, &limits);
        if best.as_ref().is_none_or(|b| candidate.loglik > b.loglik) {
            best = Some(candidate);
        }
    }
    let located = best.ok_or_else(|| Error::NoConvergence("profile likelihood is undefined".into()))?;

    let sigma = located.t.exp();
    let theta = profile.theta_at(located.t);
    let params = ThetaSigma::new(theta, sigma).map_err(|_| {
        Error::NoConvergence(format!("estimate left the parameter space (theta = {theta})"))
    })?;
    let converged = match located.boundary {
        BoundaryFlag::Interior => located.converged && located.residual < cfg.rel_tol,
        _ => located.converged,
    };
    Ok(FitResult::new(
        s,
        params,
        converged,
        located.iterations,
        located.residual,
        located.boundary,
    ))
}

fn refine(
    profile: &Profile<'_>,
    points: &[ProfilePoint],
    k: usize,
    cfg: &SolverConfig,
    limits: &SigmaLimits,
) -> Located {
    let last = points.len() - 1;
    let here = points[k];
    let at_upper = k == last && here.slope > 0.0 && here.t >= limits.hi;
    let at_lower = k == 0 && here.slope < 0.0 && here.t <= limits.lo;
    if at_upper || at_lower {
        return Located {
            t: here.t,
            loglik: here.loglik,
            residual: here.slope.abs(),
            iterations: 0,
            converged: true,
            boundary: if at_upper {
                BoundaryFlag::SigmaUpperBound
            } else {
                BoundaryFlag::SigmaLowerBound
            },
        };
    }
    let a = points[k.saturating_sub(1)];
    let b = points[(k + 1).min(last)];
    let slope = |t: f64| profile.eval(t).slope;

    if a.slope > 0.0 && b.slope < 0.0 {
        if let Some(root) = brent_root(slope, a.t, b.t, 1e-15, cfg.max_iter) {
            let p = profile.eval(root.x);
            return Located {
                t: p.t,
                loglik: p.loglik,
                residual: p.slope.abs(),
                iterations: root.iterations,
                converged: root.converged,
                boundary: BoundaryFlag::Interior,
            };
        }
    }

    // Slopes at the neighbours do not straddle zero: locate the maximum
    // directly, then look for a sign change of the slope around it.
    let m = brent_minimize(|t| -profile.eval(t).loglik, a.t, b.t, 1e-10, cfg.max_iter);
    let mut h = 1e-9_f64.max(m.x.abs() * 1e-12);
    while h < (b.t - a.t) {
        let (l, r) = ((m.x - h).max(a.t), (m.x + h).min(b.t));
        if slope(l) > 0.0 && slope(r) < 0.0 {
            if let Some(root) = brent_root(slope, l, r, 1e-15, cfg.max_iter) {
                let p = profile.eval(root.x);
                return Located {
                    t: p.t,
                    loglik: p.loglik,
                    residual: p.slope.abs(),
                    iterations: m.iterations + root.iterations,
                    converged: root.converged,
                    boundary: BoundaryFlag::Interior,
                };
            }
        }
        h *= 4.0;
    }
    let p = profile.eval(m.x);
    Located {
        t: p.t,
        loglik: p.loglik,
        residual: p.slope.abs(),
        iterations: m.iterations,
        converged: m.converged,
        boundary: BoundaryFlag::Interior,
    }
}
