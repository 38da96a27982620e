//! Asymptotic uncertainty for the MLE.
//!
//! Expected information per observation in `(θ, σ)`:
//!
//! ```text
//! I(θ, σ) = [ 1/θ²              −1/((θ+1)σ)     ]
//!           [ −1/((θ+1)σ)       θ/(σ²(θ+2))     ]
//! ```
//!
//! Under censoring at `x0` the same matrix evaluated at `(θ, σ + x0)` applies.
//! Covariance of the estimate is `(1/n)·I⁻¹`, carried to `(q, κ)` with the
//! Jacobian `G = ∂(q, κ)/∂(θ, σ) = [[−1/θ², 0], [−σ/θ², 1/θ]]`.

use serde::{Deserialize, Serialize};

use crate::distribution::ThetaSigma;
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::numeric::inverse_normal_cdf;
use crate::sample::Sample;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coords {
    ThetaSigma,
    QKappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    #[default]
    Expected,
    Observed,
}

impl InfoKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Expected => "expected",
            Self::Observed => "observed",
        }
    }
}

/// Symmetric 2×2 information matrix (per observation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoMatrix {
    pub entries: Mat2,
    pub coords: Coords,
    pub kind: InfoKind,
}

impl InfoMatrix {
    pub fn determinant(&self) -> f64 {
        det(&self.entries)
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.determinant() > 0.0 && self.trace() > 0.0
    }

    pub fn inverse(&self) -> Option<Mat2> {
        inverse(&self.entries)
    }

    /// Re-expresses a `(θ, σ)` information matrix in `(q, κ)` coordinates.
    pub fn to_q_kappa(&self, p: &ThetaSigma) -> InfoMatrix {
        assert_eq!(self.coords, Coords::ThetaSigma);
        let (theta, sigma) = (p.theta(), p.sigma());
        // ∂(θ, σ)/∂(q, κ)
        let h = [[-theta * theta, 0.0], [-sigma * theta, theta]];
        InfoMatrix {
            entries: sandwich(&transpose(&h), &self.entries),
            coords: Coords::QKappa,
            kind: self.kind,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            InfoKind::Expected => "expected information",
            InfoKind::Observed => "observed information",
        }
    }
}

pub fn fisher_information(p: &ThetaSigma) -> InfoMatrix {
    let (theta, sigma) = (p.theta(), p.sigma());
    let off = -1.0 / ((theta + 1.0) * sigma);
    InfoMatrix {
        entries: [
            [1.0 / (theta * theta), off],
            [off, theta / (sigma * sigma * (theta + 2.0))],
        ],
        coords: Coords::ThetaSigma,
        kind: InfoKind::Expected,
    }
}

pub fn fisher_information_censored(p: &ThetaSigma, x0: f64) -> InfoMatrix {
    let shifted = ThetaSigma::new(p.theta(), p.sigma() + x0).expect("σ + x0 > 0");
    fisher_information(&shifted)
}

/// `J = −H/n` from analytic second derivatives of `ℓ` (or `ℓ_C` when `x0 > 0`).
pub fn observed_information(s: &Sample, p: &ThetaSigma) -> InfoMatrix {
    let (theta, sigma, x0) = (p.theta(), p.sigma(), s.x0());
    let n = s.n() as f64;
    let mut cross = 0.0;
    let mut curv = 0.0;
    for &x in s.values() {
        let sx = sigma + x;
        cross += x / (sigma * sx);
        curv += x * (2.0 * sigma + x) / (sigma * sigma * sx * sx);
    }
    let s0 = sigma + x0;
    let cens_cross = n * x0 / (sigma * s0);
    let cens_curv = n * x0 * (2.0 * sigma + x0) / (sigma * sigma * s0 * s0);

    let h_tt = -n / (theta * theta);
    let h_ts = cross - cens_cross;
    let h_ss = n / (sigma * sigma) - (theta + 1.0) * curv + theta * cens_curv;
    InfoMatrix {
        entries: [[-h_tt / n, -h_ts / n], [-h_ts / n, -h_ss / n]],
        coords: Coords::ThetaSigma,
        kind: InfoKind::Observed,
    }
}

pub fn information(s: &Sample, p: &ThetaSigma, kind: InfoKind) -> InfoMatrix {
    match kind {
        InfoKind::Expected => fisher_information_censored(p, s.x0()),
        InfoKind::Observed => observed_information(s, p),
    }
}

/// Which parameters were estimated (the others held fixed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreeParams {
    #[default]
    Both,
    ThetaOnly,
    SigmaOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamPairs {
    pub theta: (f64, f64),
    pub sigma: (f64, f64),
    pub q: (f64, f64),
    pub kappa: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub kind: InfoKind,
    /// Covariance of (θ̂, σ̂).
    pub cov: Mat2,
    /// Covariance of (q̂, κ̂) by the delta method.
    pub cov_qk: Mat2,
    pub se_theta: f64,
    pub se_sigma: f64,
    pub se_q: f64,
    pub se_kappa: f64,
    pub ci_level: f64,
    pub wald_cis: ParamPairs,
}

/// Delta-method Jacobian `∂(q, κ)/∂(θ, σ)`.
pub fn qk_jacobian(p: &ThetaSigma) -> Mat2 {
    let (theta, sigma) = (p.theta(), p.sigma());
    [
        [-1.0 / (theta * theta), 0.0],
        [-sigma / (theta * theta), 1.0 / theta],
    ]
}

/// Standard errors and Wald intervals for an interior, converged fit.
pub fn covariance_report(s: &Sample, fit: &FitResult, kind: InfoKind, level: f64) -> Result<CovarianceReport> {
    covariance_report_with(s, fit, kind, level, FreeParams::Both)
}

pub fn covariance_report_with(
    s: &Sample,
    fit: &FitResult,
    kind: InfoKind,
    level: f64,
    free: FreeParams,
) -> Result<CovarianceReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("CI level must lie in (0, 1), got {level}")));
    }
    if !fit.converged || !fit.is_interior() {
        return Err(Error::Domain(
            "covariance requires a converged interior estimate".into(),
        ));
    }
    let p = fit.params;
    let info = information(s, &p, kind);
    let n = s.n() as f64;
    let ill = Error::IllConditioned { matrix: info.name() };
    let cov = match free {
        FreeParams::Both => {
            if !info.is_positive_definite() {
                return Err(ill);
            }
            let inv = info.inverse().ok_or(ill)?;
            scale(&inv, 1.0 / n)
        }
        FreeParams::ThetaOnly => {
            let i = info.entries[0][0];
            if !(i > 0.0) {
                return Err(ill);
            }
            [[1.0 / (n * i), 0.0], [0.0, 0.0]]
        }
        FreeParams::SigmaOnly => {
            let i = info.entries[1][1];
            if !(i > 0.0) {
                return Err(ill);
            }
            [[0.0, 0.0], [0.0, 1.0 / (n * i)]]
        }
    };
    let cov_qk = sandwich(&qk_jacobian(&p), &cov);
    let se = |v: f64| v.max(0.0).sqrt();
    let (se_theta, se_sigma) = (se(cov[0][0]), se(cov[1][1]));
    let (se_q, se_kappa) = (se(cov_qk[0][0]), se(cov_qk[1][1]));
    let z = inverse_normal_cdf(0.5 * (1.0 + level));
    let ci = |est: f64, se: f64| (est - z * se, est + z * se);
    let qk = fit.params_qk;
    Ok(CovarianceReport {
        kind,
        cov,
        cov_qk,
        se_theta,
        se_sigma,
        se_q,
        se_kappa,
        ci_level: level,
        wald_cis: ParamPairs {
            theta: ci(p.theta(), se_theta),
            sigma: ci(p.sigma(), se_sigma),
            q: ci(qk.q(), se_q),
            kappa: ci(qk.kappa(), se_kappa),
        },
    })
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if !(d.is_finite() && d != 0.0) {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// `A·M·Aᵀ`.
pub fn sandwich(a: &Mat2, m: &Mat2) -> Mat2 {
    matmul(&matmul(a, m), &transpose(a))
}

fn scale(m: &Mat2, c: f64) -> Mat2 {
    [[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]]
}

/// Relative Frobenius distance `‖A − B‖ / ‖A‖`.
pub fn relative_frobenius(a: &Mat2, b: &Mat2) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            num += (a[i][j] - b[i][j]).powi(2);
            den += a[i][j].powi(2);
        }
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{mle_joint, SolverConfig};
    use crate::rng::RngStream;

    fn ts(theta: f64, sigma: f64) -> ThetaSigma {
        ThetaSigma::new(theta, sigma).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn fisher_information_unit() {
        let i = fisher_information(&ts(1.0, 1.0)).entries;
        assert_eq!(i, [[1.0, -0.5], [-0.5, 1.0 / 3.0]]);
    }

    #[test]
    fn fisher_information_reference_parameters() {
        let i = fisher_information(&ts(3.0, 200.0)).entries;
        assert!(close(i[0][0], 1.0 / 9.0, 1e-15));
        assert!(close(i[0][1], -0.00125, 1e-14));
        assert!(close(i[1][1], 1.5e-5, 1e-14));
    }

    #[test]
    fn censored_information_shifts_scale() {
        let i = fisher_information_censored(&ts(1.0, 1.0), 1.0).entries;
        assert_eq!(i, [[1.0, -0.25], [-0.25, 1.0 / 12.0]]);
        let p = ts(2.3, 4.1);
        assert_eq!(fisher_information_censored(&p, 0.0), fisher_information(&p));
    }

    #[test]
    fn inverse_is_exact() {
        let info = fisher_information(&ts(3.0, 200.0));
        let prod = matmul(&info.inverse().unwrap(), &info.entries);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn observed_theta_entry_is_exact() {
        let p = ts(2.7, 9.0);
        let s = ts(1.5, 3.0).sample(50, &RngStream::from_seed(1));
        let j = observed_information(&s, &p);
        assert!(close(j.entries[0][0], 1.0 / (2.7 * 2.7), 1e-15));
    }

    #[test]
    fn asymptotic_covariance_at_reference_parameters() {
        let inv = fisher_information(&ts(3.0, 200.0)).inverse().unwrap();
        assert!(close(inv[0][0], 144.0, 1e-12));
        assert!(close(inv[1][1], 3.2e6 / 3.0, 1e-12));
        assert!(close(inv[0][1], 12_000.0, 1e-12));
        let cov_qk = sandwich(&qk_jacobian(&ts(3.0, 200.0)), &inv);
        assert!(close(cov_qk[0][0], 144.0 / 81.0, 1e-12));
    }

    #[test]
    fn delta_method_agrees_with_reparameterized_information() {
        let p = ts(3.0, 200.0);
        let info = fisher_information(&p);
        let via_delta = sandwich(&qk_jacobian(&p), &info.inverse().unwrap());
        let via_qk = info.to_q_kappa(&p).inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(via_delta[i][j], via_qk[i][j], 1e-10), "{i}{j}");
            }
        }
    }

    #[test]
    fn wald_half_width_at_n_1000() {
        let truth = ts(3.0, 200.0);
        let s = truth.sample(1000, &RngStream::from_seed(3));
        let mut fit = mle_joint(&s, &SolverConfig::default()).unwrap();
        // Evaluate the expected-information report at the true parameters.
        fit.params = truth;
        fit.params_qk = truth.to_q_kappa();
        let rep = covariance_report(&s, &fit, InfoKind::Expected, 0.90).unwrap();
        let half = 0.5 * (rep.wald_cis.theta.1 - rep.wald_cis.theta.0);
        assert!(close(half, 1.6448536269514722 * (0.144f64).sqrt(), 1e-10), "{half}");
        assert!((half - 0.624).abs() < 5e-4);
        assert!(close(rep.se_q * rep.se_q, 144.0 / 81.0 / 1000.0, 1e-12));
    }

    #[test]
    fn report_rejects_bad_level() {
        let s = ts(3.0, 200.0).sample(100, &RngStream::from_seed(3));
        let fit = mle_joint(&s, &SolverConfig::default()).unwrap();
        assert!(covariance_report(&s, &fit, InfoKind::Expected, 1.0).is_err());
    }

    #[test]
    fn singular_information_is_reported() {
        let s = Sample::new(vec![1.0, 2.0]).unwrap();
        let mut fit = crate::estimation::fit_fixed_sigma(&s, 1.0).unwrap();
        // Far from the optimum the log-likelihood is convex in σ, so J is indefinite.
        fit.params = ts(0.01, 100.0);
        assert!(observed_information(&s, &fit.params).determinant() < 0.0);
        let out = covariance_report(&s, &fit, InfoKind::Observed, 0.9);
        assert!(matches!(out, Err(Error::IllConditioned { .. })));
    }
}
