//! Independent reference computations for the integration tests.
//!
//! Nothing here calls into the library's numerics; formulas are written out
//! in a different (but algebraically equivalent) form.
#![allow(dead_code)]

use qexp::RngStream;
use rand_distr::{Distribution, Normal};

/// `Σ [ln θ − ln(σ + x0) − (θ + 1) ln(1 + (x − x0)/(σ + x0))]`: the density of
/// the excess over `x0`, a Lomax law with scale `σ + x0`.
pub fn loglik(x: &[f64], x0: f64, theta: f64, sigma: f64) -> f64 {
    let scale = sigma + x0;
    x.iter()
        .map(|&xi| theta.ln() - scale.ln() - (theta + 1.0) * ((xi - x0) / scale).ln_1p())
        .sum()
}

/// `ℓ(θ', σ') − ℓ(θ, σ)` accumulated term by term so that small steps keep
/// full relative precision.
pub fn loglik_delta(x: &[f64], x0: f64, from: (f64, f64), to: (f64, f64)) -> f64 {
    let (t, s) = from;
    let (t2, s2) = to;
    let dt = t2 - t;
    let ds = s2 - s;
    let per_obs_const = (dt / t).ln_1p() + t2 * (ds / (s + x0)).ln_1p();
    x.iter()
        .map(|&xi| {
            per_obs_const - dt * ((xi - x0) / (s + x0)).ln_1p() - (t2 + 1.0) * (ds / (s + xi)).ln_1p()
        })
        .sum()
}

/// `J = −H/n` by central differences with relative step `h`.
pub fn fd_observed_information(x: &[f64], x0: f64, theta: f64, sigma: f64, h: f64) -> [[f64; 2]; 2] {
    let ht = h * theta;
    let hs = h * sigma;
    let f = |a: f64, b: f64| loglik_delta(x, x0, (theta, sigma), (theta + a, sigma + b));
    let d_tt = (f(ht, 0.0) + f(-ht, 0.0)) / (ht * ht);
    let d_ss = (f(0.0, hs) + f(0.0, -hs)) / (hs * hs);
    let d_ts = (f(ht, hs) - f(ht, -hs) - f(-ht, hs) + f(-ht, -hs)) / (4.0 * ht * hs);
    let n = x.len() as f64;
    [[-d_tt / n, -d_ts / n], [-d_ts / n, -d_ss / n]]
}

/// Largest log-likelihood on an `m × m` log-spaced grid spanning `decades`
/// decades in each of θ and σ, centred on `(theta, sigma)`.
pub fn grid_max_loglik(x: &[f64], x0: f64, theta: f64, sigma: f64, m: usize, decades: f64) -> f64 {
    let axis = |c: f64| -> Vec<f64> {
        (0..m)
            .map(|i| c * 10f64.powf(decades * (i as f64 / (m - 1) as f64 - 0.5)))
            .collect()
    };
    let (ts, ss) = (axis(theta), axis(sigma));
    let mut best = f64::NEG_INFINITY;
    for &t in &ts {
        for &s in &ss {
            best = best.max(loglik(x, x0, t, s));
        }
    }
    best
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (−1)^{k−1} exp(−2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS p-value with the usual small-sample correction.
pub fn ks_two_sample_pvalue(a: &[f64], b: &[f64]) -> f64 {
    let d = ks_two_sample(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS distance against a CDF.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = x.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Midpoint-interpolated quantile with `h = n·p + 1/2` (1-based), clamped.
pub fn midpoint_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let h = (n as f64 * p + 0.5).clamp(1.0, n as f64);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo - 1] + (h - lo as f64) * (v[hi - 1] - v[lo - 1])
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// `x` with `ln(1 + x) ~ N(mu, sd)`, keeping only `x ≥ 0`.
pub fn log_normal_sample(mu: f64, sd: f64, n: usize, stream: &RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let normal = Normal::new(mu, sd).expect("valid normal");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = normal.sample(&mut rng).exp() - 1.0;
        if x >= 0.0 {
            out.push(x);
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
