use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::nonlocal::{GridFunction, RadialProfile};

/// Least-squares power law `u ≈ C r^{-exponent}` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    /// `ln C`.
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Source of radial samples.
#[derive(Debug, Clone, Copy)]
pub enum DecaySource<'a> {
    Grid(&'a GridFunction),
    Profile(&'a RadialProfile),
}

/// Fraction of the half-width a grid window may reach.
pub const BOUNDARY_GUARD: f64 = 0.8;
pub const MIN_SAMPLES: usize = 8;
const PROFILE_SAMPLES: usize = 64;

/// Ordinary least squares `y ≈ slope·x + intercept`; returns
/// `(slope, intercept, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

/// Shell averages `(mean radius, mean value)` over shells of width `h`.
pub fn radial_average(u: &GridFunction) -> Vec<(f64, f64)> {
    let spec = u.spec();
    let h = spec.spacing();
    let mut shells: Vec<(f64, f64, usize)> = Vec::new();
    for (i, &v) in u.values().iter().enumerate() {
        let r = spec.radius(i);
        let s = (r / h).floor() as usize;
        if shells.len() <= s {
            shells.resize(s + 1, (0.0, 0.0, 0));
        }
        shells[s].0 += r;
        shells[s].1 += v;
        shells[s].2 += 1;
    }
    shells
        .into_iter()
        .filter(|s| s.2 > 0)
        .map(|(r, v, n)| (r / n as f64, v / n as f64))
        .collect()
}

/// Fits `log u` against `log r` on `window`.
pub fn fit_decay_exponent(source: DecaySource<'_>, window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("window ({lo}, {hi}) must satisfy 0 < r_min < r_max")));
    }
    let samples: Vec<(f64, f64)> = match source {
        DecaySource::Grid(u) => {
            let limit = BOUNDARY_GUARD * u.spec().half_width();
            if hi > limit {
                return Err(invalid(format!(
                    "window end {hi} exceeds {BOUNDARY_GUARD}·L = {limit} (boundary guard)"
                )));
            }
            radial_average(u)
                .into_iter()
                .filter(|&(r, _)| r >= lo && r <= hi)
                .collect()
        }
        DecaySource::Profile(p) => (0..PROFILE_SAMPLES)
            .map(|i| {
                let r = (lo.ln() + (hi / lo).ln() * i as f64 / (PROFILE_SAMPLES - 1) as f64).exp();
                (r, p.value(r))
            })
            .collect(),
    };
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} radial samples in window ({lo}, {hi}), need {MIN_SAMPLES}",
            samples.len()
        )));
    }
    if let Some(&(r, v)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::NonPositive(format!("sample {v} at r={r} in fit window")));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(DecayFit {
        exponent: -slope,
        intercept,
        r_squared,
        window,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::profile::build_power_profile;
    use crate::nonlocal::GridSpec;

    #[test]
    fn exact_power_law() {
        let spec = GridSpec::new(1, 50.0, 500).unwrap();
        let u = GridFunction::from_fn(spec, |x| x[0].abs().powi(-2));
        let f = fit_decay_exponent(DecaySource::Grid(&u), (2.0, 30.0)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-6);
        assert!(f.r_squared >= 1.0 - 1e-10);
    }

    #[test]
    fn power_profile_exponent() {
        let p = build_power_profile(1.3).unwrap();
        let f = fit_decay_exponent(DecaySource::Profile(p.profile()), (2.0, 100.0)).unwrap();
        assert!((f.exponent - 1.3).abs() < 1e-3);
    }

    #[test]
    fn guards() {
        let spec = GridSpec::new(1, 10.0, 40).unwrap();
        let u = GridFunction::from_fn(spec, |x| (-x[0].abs()).exp());
        assert!(fit_decay_exponent(DecaySource::Grid(&u), (1.0, 9.0)).is_err());
        assert!(matches!(
            fit_decay_exponent(DecaySource::Grid(&u), (1.0, 2.0)),
            Err(Error::InsufficientData(_))
        ));
        let z = GridFunction::from_fn(spec, |x| if x[0].abs() > 4.0 { 0.0 } else { 1.0 });
        assert!(matches!(fit_decay_exponent(DecaySource::Grid(&z), (1.0, 7.0)), Err(Error::NonPositive(_))));
    }
}
