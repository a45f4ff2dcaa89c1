use rayon::prelude::*;
use serde::Serialize;

use crate::decay::fit::linear_fit;
use crate::decay::profile::PowerProfile;
use crate::error::{invalid, Error, Result};
use crate::nonlocal::KernelParams;
use crate::operator::frac_p_laplacian_radial;

/// Position of `α(p-1)` relative to `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRegime {
    Below,
    Critical,
    Above,
}

pub const SLOPE_TOL: f64 = 0.15;
/// Local-slope tolerance that defines the threshold radius `k`.
pub const LOCAL_SLOPE_TOL: f64 = 0.2;
pub const RADIUS_RANGE: (f64, f64) = (10.0, 1e3);

/// Operator samples of `Υ` at large radii with the fitted envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: DecayRegime,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Slopes of `log|value|` between neighbouring radii (centred where possible).
    pub local_slopes: Vec<f64>,
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    /// Coefficient of `log r` in the critical-regime joint fit.
    pub log_coefficient: Option<f64>,
    pub envelope_ok: bool,
    /// Every value beyond the first radius is negative (meaningful above `N`).
    pub sign_ok: bool,
    /// Smallest radius whose local slope is within 0.2 of the prediction.
    pub threshold_k: Option<f64>,
    /// Every value at radii `>= k` is negative.
    pub negative_beyond_k: bool,
    /// `min_{r >= k} |value| r^{-predicted_slope}` (divided by `log r` in the critical regime).
    pub envelope_constant: Option<f64>,
    pub sign_changes: usize,
    /// Radii where evaluation failed, with the reason.
    pub failures: Vec<(f64, String)>,
}

pub fn classify(alpha: f64, k: &KernelParams) -> DecayRegime {
    let gap = alpha * (k.p() - 1.0) - k.dim() as f64;
    if gap.abs() <= 1e-12 * k.dim() as f64 {
        DecayRegime::Critical
    } else if gap < 0.0 {
        DecayRegime::Below
    } else {
        DecayRegime::Above
    }
}

pub fn predicted_slope(alpha: f64, k: &KernelParams) -> f64 {
    match classify(alpha, k) {
        DecayRegime::Below => -(alpha * (k.p() - 1.0) + k.sp()),
        _ => -(k.dim() as f64 + k.sp()),
    }
}

fn local_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = if n < 2 {
                return f64::NAN;
            } else if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (y[b] - y[a]) / (x[b] - x[a])
        })
        .collect()
}

/// Residual of `log|v| ≈ β log r + log(a log r + b)` with `(a, b)` solved
/// by relative least squares for fixed `β`.
fn critical_residual(x: &[f64], y: &[f64], beta: f64) -> (f64, f64, f64) {
    // Minimize Σ ((a x_i + b) w_i - 1)^2 with w_i = r_i^β / |v_i|.
    let w: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| (beta * xi - yi).exp()).collect();
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let (u1, u2) = (xi * wi, *wi);
        s11 += u1 * u1;
        s12 += u1 * u2;
        s22 += u2 * u2;
        t1 += u1;
        t2 += u2;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (t1 * s22 - t2 * s12) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    let mut res = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let m = a * xi + b;
        res += if m > 0.0 { (yi - beta * xi - m.ln()).powi(2) } else { 1e6 };
    }
    (res, a, b)
}

/// Scans `[lo, hi]` on a fine grid, then refines around the best node by
/// golden section.
fn golden_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let n = 600;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut lo, mut hi) = ((best - step).max(lo), (best + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Evaluates `(-Δ_p)^s Υ` at `radii` and compares the decay with the
/// regime prediction.
pub fn verify_decay_regimes(alpha: f64, k: &KernelParams, radii: &[f64]) -> Result<RegimeReport> {
    let (lo, hi) = RADIUS_RANGE;
    if radii.iter().any(|&r| !(lo..=hi).contains(&r)) {
        return Err(invalid(format!("radii must lie in [{lo}, {hi}]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must be strictly increasing"));
    }
    let profile = PowerProfile::new(alpha)?;
    let regime = classify(alpha, k);
    let predicted = predicted_slope(alpha, k);
    let evaluated: Vec<(f64, Result<f64>)> = radii
        .par_iter()
        .map(|&r| (r, frac_p_laplacian_radial(profile.profile(), r, k).map(|s| s.value)))
        .collect();

    let mut failures = Vec::new();
    let mut rs = Vec::new();
    let mut vs = Vec::new();
    for (r, v) in evaluated {
        match v {
            Ok(v) if v != 0.0 => {
                rs.push(r);
                vs.push(v);
            }
            Ok(_) => failures.push((r, "operator value is exactly zero".to_string())),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    if rs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable radii, failures: {failures:?}",
            rs.len()
        )));
    }
    let x: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.abs().ln()).collect();
    let slopes = local_slopes(&x, &y);
    let (fitted, log_coefficient) = match regime {
        DecayRegime::Critical => {
            let beta = golden_min(|b| critical_residual(&x, &y, b).0, predicted - 3.0, predicted + 3.0);
            (beta, Some(critical_residual(&x, &y, beta).1))
        }
        _ => (linear_fit(&x, &y).0, None),
    };
    let threshold = slopes
        .iter()
        .position(|s| (s - predicted).abs() <= LOCAL_SLOPE_TOL);
    let threshold_k = threshold.map(|i| rs[i]);
    let negative_beyond_k = threshold.is_some_and(|i| vs[i..].iter().all(|&v| v < 0.0));
    let envelope_constant = threshold.map(|i| {
        (i..rs.len())
            .map(|j| {
                let base = vs[j].abs() * rs[j].powf(-predicted);
                if regime == DecayRegime::Critical {
                    base / rs[j].ln()
                } else {
                    base
                }
            })
            .fold(f64::INFINITY, f64::min)
    });
    let sign_changes = vs.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    Ok(RegimeReport {
        regime,
        sign_ok: vs[1..].iter().all(|&v| v < 0.0),
        radii: rs,
        values: vs,
        local_slopes: slopes,
        fitted_slope: fitted,
        predicted_slope: predicted,
        log_coefficient,
        envelope_ok: (fitted - predicted).abs() <= SLOPE_TOL,
        threshold_k,
        negative_beyond_k,
        envelope_constant,
        sign_changes,
        failures,
    })
}

/// `count` log-spaced radii spanning `[10, 1000]`.
pub fn default_radii(count: usize) -> Vec<f64> {
    let (lo, hi) = RADIUS_RANGE;
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}
