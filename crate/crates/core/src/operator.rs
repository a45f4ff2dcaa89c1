//! Pointwise evaluation of `(-Δ_p)^s u(x) = 2 P.V. ∫ Φ_p(u(x) - u(y)) |x - y|^{-(N+sp)} dy`
//! for grid functions and radial profiles.
//!
//! The weak form carries the symmetric double integral without a factor 2,
//! the strong form carries the explicit 2; [`weak_strong_residual`] checks
//! that the two agree under the duality pairing `Σ_i A_i φ_i h^N`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::nonlocal::angular::angular_kernel;
use crate::nonlocal::kernel::{phi_p, KernelParams};
use crate::nonlocal::{Discretization, GridFunction, RadialProfile};
use crate::quadrature::{integrate, Tolerance};
use crate::reduce::{pairwise_sum, par_map, TreeAccumulator};

/// Where an operator value was taken.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePoint {
    Grid { index: usize, coordinates: Vec<f64> },
    Radius(f64),
}

/// Operator value with its near/far split; `value = near_field + far_field`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSample {
    pub point: SamplePoint,
    pub value: f64,
    pub near_field: f64,
    pub far_field: f64,
}

impl OperatorSample {
    fn new(point: SamplePoint, near_field: f64, far_field: f64) -> Self {
        Self {
            point,
            value: near_field + far_field,
            near_field,
            far_field,
        }
    }
}

impl Discretization {
    /// `2 Σ_{j≠i} Φ(u_i - u_j) K_ij h^N`, with `j` and its mirror `2i - j`
    /// grouped whenever both lie in the box.
    pub(crate) fn near_field_raw(&self, u: &[f64], i: usize) -> f64 {
        let p = self.kernel().p();
        let spec = self.spec();
        let n = spec.dim();
        let m = spec.points_per_axis() as isize;
        let ui = u[i];
        let center = *self.multi(i);
        let strides = *self.strides();
        let mut acc = TreeAccumulator::new();
        for j in 0..u.len() {
            if j == i {
                continue;
            }
            let cj = self.multi(j);
            let mut mirror = 0usize;
            let mut inside = true;
            for a in 0..n {
                let r = 2 * center[a] as isize - cj[a] as isize;
                if r < 0 || r >= m {
                    inside = false;
                    break;
                }
                mirror += r as usize * strides[a];
            }
            let k = self.offset_kernel(self.offset_index(i, j));
            if inside {
                if j < mirror {
                    acc.add((phi_p(ui - u[j], p) + phi_p(ui - u[mirror], p)) * k);
                }
            } else {
                acc.add(phi_p(ui - u[j], p) * k);
            }
        }
        2.0 * spec.cell_volume() * acc.total()
    }

    pub(crate) fn far_field_raw(&self, u: &[f64], i: usize) -> f64 {
        2.0 * phi_p(u[i], self.kernel().p()) * self.tails()[i]
    }

    /// Operator sample at cell `i`.
    pub fn sample(&self, u: &GridFunction, i: usize) -> Result<OperatorSample> {
        if u.spec() != self.spec() {
            return Err(Error::GridMismatch);
        }
        if i >= u.len() {
            return Err(Error::IndexOutOfRange { index: i, len: u.len() });
        }
        let x = self.spec().point(i);
        let v = u.values();
        Ok(OperatorSample::new(
            SamplePoint::Grid {
                index: i,
                coordinates: x[..self.spec().dim()].to_vec(),
            },
            self.near_field_raw(v, i),
            self.far_field_raw(v, i),
        ))
    }

    /// Operator values `A_i` at every cell.
    pub fn apply(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if u.spec() != self.spec() {
            return Err(Error::GridMismatch);
        }
        Ok(self.apply_raw(u.values()))
    }

    pub(crate) fn apply_raw(&self, u: &[f64]) -> Vec<f64> {
        par_map(u.len(), |i| self.near_field_raw(u, i) + self.far_field_raw(u, i))
    }

    /// `|form(u,φ) - Σ_i A_i φ_i h^N| / max(1, |form(u,φ)|)`.
    pub fn weak_strong_residual(&self, u: &GridFunction, phi: &GridFunction) -> Result<f64> {
        let weak = self.nonlinear_form(u, phi)?;
        let strong = self.apply(u)?;
        let pairing: Vec<f64> = strong.iter().zip(phi.values()).map(|(a, f)| a * f).collect();
        let dual = pairwise_sum(&pairing) * self.spec().cell_volume();
        Ok((weak - dual).abs() / weak.abs().max(1.0))
    }
}

/// `(-Δ_p)^s u` at grid cell `i`.
pub fn frac_p_laplacian_at(u: &GridFunction, i: usize, k: &KernelParams) -> Result<OperatorSample> {
    if i >= u.len() {
        return Err(Error::IndexOutOfRange { index: i, len: u.len() });
    }
    Discretization::new(*u.spec(), *k)?.sample(u, i)
}

/// Discrepancy between the weak form and the strong form paired with `phi`.
pub fn weak_strong_residual(u: &GridFunction, phi: &GridFunction, k: &KernelParams) -> Result<f64> {
    u.check_same_grid(phi)?;
    Discretization::new(*u.spec(), *k)?.weak_strong_residual(u, phi)
}

const RADIAL_TOL: Tolerance = Tolerance::new(1e-10, 1e-8);

/// Largest supported radius as a multiple of the last profile node.
pub const RADIAL_RANGE_FACTOR: f64 = 1e3;

/// `Φ_p(a) + Φ_p(b)` for `a >= 0 >= b`, given `a + b` accurately.
fn paired_phi(a: f64, b: f64, sum: f64, p: f64) -> f64 {
    if p == 2.0 {
        return sum;
    }
    let (aa, bb) = (a.abs(), b.abs());
    if aa == 0.0 && bb == 0.0 {
        return 0.0;
    }
    let q = p - 1.0;
    if bb >= aa {
        // |a|^q - |b|^q = |b|^q ((1 + (|a|-|b|)/|b|)^q - 1), |a| - |b| = a + b
        bb.powf(q) * (q * (sum / bb).ln_1p()).exp_m1()
    } else {
        -(aa.powf(q) * (q * (-sum / aa).ln_1p()).exp_m1())
    }
}

/// `(-Δ_p)^s Υ` at radius `r` for a positive decreasing radial profile.
///
/// Panels `(0, r/2)` and `(3r/2, ∞)` make up the far field. The middle
/// panel pairs `ρ = r ± t` and is the near field.
pub fn frac_p_laplacian_radial(prof: &RadialProfile, r: f64, k: &KernelParams) -> Result<OperatorSample> {
    if !(prof.is_positive() && prof.is_decreasing()) {
        return Err(invalid("radial operator needs a positive, decreasing profile"));
    }
    let (r0, rk) = (prof.first_radius(), prof.last_radius());
    if !(r >= r0 && r > 0.0 && r <= RADIAL_RANGE_FACTOR * rk) {
        return Err(invalid(format!(
            "radius {r} outside supported range [{r0}, {}]",
            RADIAL_RANGE_FACTOR * rk
        )));
    }
    let n = k.dim();
    let p = k.p();
    let sp = k.sp();
    let e = k.kernel_exponent();
    let knots = [r0, rk];
    let weight = |rho: f64| -> Result<f64> { Ok(angular_kernel(r, rho, k)? * rho.powi(n as i32 - 1)) };
    let fail = std::cell::Cell::new(None::<Error>);
    let guard = |res: Result<f64>| match res {
        Ok(v) => v,
        Err(err) => {
            fail.set(Some(err));
            0.0
        }
    };

    // (0, r/2)
    let inner_breaks: Vec<f64> = knots.iter().copied().filter(|&b| b > 0.0 && b < 0.5 * r).collect();
    let inner = integrate(
        |rho| guard(weight(rho).map(|w| phi_p(prof.diff(r, rho), p) * w)),
        0.0,
        0.5 * r,
        &inner_breaks,
        RADIAL_TOL,
    );

    // (3r/2, ∞) with ρ = (3r/2) τ^{-1/sp}
    let r3 = 1.5 * r;
    let outer_breaks: Vec<f64> = knots
        .iter()
        .filter(|&&b| b > r3)
        .map(|&b| (r3 / b).powf(sp))
        .collect();
    let outer = integrate(
        |tau: f64| {
            if tau <= 0.0 {
                return 0.0;
            }
            let rho = r3 * tau.powf(-1.0 / sp);
            let jac = rho / (sp * tau);
            guard(weight(rho).map(|w| phi_p(prof.diff(r, rho), p) * w * jac))
        },
        0.0,
        1.0,
        &outer_breaks,
        RADIAL_TOL,
    );

    // (r/2, 3r/2) paired around r, t = (r/2) τ^2
    let mid_breaks: Vec<f64> = knots
        .iter()
        .map(|&b| (b - r).abs())
        .filter(|&t| t > 0.0 && t < 0.5 * r)
        .map(|t| (2.0 * t / r).sqrt())
        .collect();
    let middle = integrate(
        |tau: f64| {
            let t = 0.5 * r * tau * tau;
            if t == 0.0 {
                return 0.0;
            }
            let a = prof.diff(r, r + t);
            let b = prof.diff(r, r - t);
            let s2 = -prof.second_difference(r, t);
            let sum = paired_phi(a, b, s2, p);
            let dif = phi_p(a, p) - phi_p(b, p);
            let (wp, wm, dw) = if n == 1 {
                let sing = t.powf(-e);
                let (fp, fm) = ((2.0 * r + t).powf(-e), (2.0 * r - t).powf(-e));
                (sing + fp, sing + fm, fp - fm)
            } else {
                match (weight(r + t), weight(r - t)) {
                    (Ok(wp), Ok(wm)) => (wp, wm, wp - wm),
                    (Err(err), _) | (_, Err(err)) => {
                        fail.set(Some(err));
                        (0.0, 0.0, 0.0)
                    }
                }
            };
            (sum * 0.5 * (wp + wm) + dif * 0.5 * dw) * r * tau
        },
        0.0,
        1.0,
        &mid_breaks,
        RADIAL_TOL,
    );

    if let Some(err) = fail.take() {
        return Err(err);
    }
    for (name, q) in [("inner", &inner), ("outer", &outer), ("middle", &middle)] {
        if !q.converged {
            return Err(Error::Quadrature(format!(
                "{name} panel at r={r}: error estimate {:.3e} on value {:.3e}",
                q.error, q.value
            )));
        }
    }
    Ok(OperatorSample::new(
        SamplePoint::Radius(r),
        2.0 * middle.value,
        2.0 * pairwise_sum(&[inner.value, outer.value]),
    ))
}
