use serde::Serialize;

use crate::error::{invalid, Result};
use crate::nonlocal::{PowerTail, RadialProfile};

/// `Υ`: a quartic cap in `|x|^2` on the unit ball, `|x|^{-α}` outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    alpha: f64,
    profile: RadialProfile,
}

/// Constants of `|∇Υ| <= C2 |x|^{-(α+1)}` and `|D²Υ| <= C3 |x|^{-(α+2)}` on `|x| > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBounds {
    pub c2: f64,
    pub c3: f64,
    pub samples: usize,
}

/// One-sided derivatives at the junction `|x| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionCheck {
    pub first_inner: f64,
    pub first_outer: f64,
    pub second_inner: f64,
    pub second_outer: f64,
    pub max_relative_gap: f64,
}

/// Builds `Υ` for tail exponent `alpha > 0`.
pub fn build_power_profile(alpha: f64) -> Result<PowerProfile> {
    PowerProfile::new(alpha)
}

impl PowerProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("tail exponent alpha={alpha} must be positive")));
        }
        // Second-order Taylor polynomial of q^{-α/2} at q = 1, q = |x|^2.
        let d1 = -0.5 * alpha;
        let d2 = 0.25 * alpha * (alpha + 2.0);
        let c = 0.5 * d2;
        let b = d1 - 2.0 * c;
        let a = 1.0 - d1 + c;
        let profile = RadialProfile::even_quartic(a, b, c, 1.0, Some(PowerTail { coeff: 1.0, alpha }))?;
        debug_assert!(profile.is_positive() && profile.is_decreasing());
        Ok(Self { alpha, profile })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn value(&self, r: f64) -> f64 {
        self.profile.value(r)
    }

    /// Sup of `|Υ'| r^{α+1}` and `max(|Υ''|, |Υ'|/r) r^{α+2}` over
    /// `samples` log-spaced radii in `(2, 2·10^3]`.
    pub fn derivative_bounds(&self, samples: usize) -> DerivativeBounds {
        let (lo, hi) = (2.0_f64.ln(), 2000.0_f64.ln());
        let mut c2 = 0.0_f64;
        let mut c3 = 0.0_f64;
        for i in 1..=samples {
            let r = (lo + (hi - lo) * i as f64 / samples as f64).exp();
            let d1 = self.profile.derivative(r);
            let d2 = self.profile.second_derivative(r);
            c2 = c2.max(d1.abs() * r.powf(self.alpha + 1.0));
            c3 = c3.max(d2.abs().max(d1.abs() / r) * r.powf(self.alpha + 2.0));
        }
        DerivativeBounds { c2, c3, samples }
    }

    /// Compares one-sided five-point differences of `Υ` at `r = 1`.
    pub fn junction_check(&self, h: f64) -> JunctionCheck {
        let f = |r: f64| self.profile.value(r);
        let inner: Vec<f64> = (0..5).map(|j| f(1.0 - j as f64 * h)).collect();
        // The tail starts just above 1; the node itself belongs to the cap,
        // so the outer stencil uses the tail formula at r = 1.
        let outer: Vec<f64> = (0..5).map(|j| (1.0 + j as f64 * h).powf(-self.alpha)).collect();
        let fwd1 = |v: &[f64]| (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
        let fwd2 = |v: &[f64]| (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3] + 11.0 * v[4]) / (12.0 * h * h);
        let first_inner = -fwd1(&inner);
        let first_outer = fwd1(&outer);
        let second_inner = fwd2(&inner);
        let second_outer = fwd2(&outer);
        let gap = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        JunctionCheck {
            first_inner,
            first_outer,
            second_inner,
            second_outer,
            max_relative_gap: gap(first_inner, first_outer).max(gap(second_inner, second_outer)),
        }
    }
}
