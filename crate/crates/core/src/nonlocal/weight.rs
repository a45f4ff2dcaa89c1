use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::nonlocal::grid::{GridFunction, GridSpec};
use crate::quadrature::{integrate, Tolerance};

/// Surface measure of the unit sphere in `R^N`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {dim} unsupported"),
    }
}

/// Radial extent beyond which `a e^{-r^2}` underflows any relevant scale.
const GAUSSIAN_CUTOFF: f64 = 40.0;

/// Coefficient `g` of the eigenproblem.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    /// `a e^{-|x|^2} - b`.
    GaussianBump { a: f64, b: f64 },
    /// `+a` inside `r1`, `-b` outside `r2`, smootherstep in between.
    /// `r2 = ∞` means `g ≡ a`.
    Ring { a: f64, b: f64, r1: f64, r2: f64 },
    /// `a·1_{|x|<r1} - b`.
    IndicatorMinus { a: f64, b: f64, r1: f64 },
    /// Tabulated on a grid: nearest cell inside the box, zero outside.
    Table(GridFunction),
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("weight parameter {name}={v} must be finite and nonnegative")))
    }
}

fn smootherstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

impl Weight {
    pub fn gaussian_bump(a: f64, b: f64) -> Result<Self> {
        check_nonneg("a", a)?;
        check_nonneg("b", b)?;
        Ok(Weight::GaussianBump { a, b })
    }

    pub fn ring(a: f64, b: f64, r1: f64, r2: f64) -> Result<Self> {
        check_nonneg("a", a)?;
        check_nonneg("b", b)?;
        if !(r1 > 0.0 && r1.is_finite()) {
            return Err(invalid(format!("ring inner radius r1={r1} must be positive")));
        }
        if r2.is_nan() || r2 <= r1 {
            return Err(invalid(format!("ring outer radius r2={r2} must exceed r1={r1}")));
        }
        Ok(Weight::Ring { a, b, r1, r2 })
    }

    pub fn indicator_minus(a: f64, b: f64, r1: f64) -> Result<Self> {
        check_nonneg("a", a)?;
        check_nonneg("b", b)?;
        if !(r1 > 0.0 && r1.is_finite()) {
            return Err(invalid(format!("indicator radius r1={r1} must be positive")));
        }
        Ok(Weight::IndicatorMinus { a, b, r1 })
    }

    /// Unit weight `g ≡ 1`.
    pub fn unit() -> Self {
        Weight::Ring {
            a: 1.0,
            b: 0.0,
            r1: 1.0,
            r2: f64::INFINITY,
        }
    }

    pub fn table(values: GridFunction) -> Self {
        Weight::Table(values)
    }

    /// `c·g` for `c > 0`; other signs go through [`Weight::sampled`].
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("weight scale {c} must be positive")));
        }
        Ok(match self {
            Weight::GaussianBump { a, b } => Weight::GaussianBump { a: c * a, b: c * b },
            Weight::Ring { a, b, r1, r2 } => Weight::Ring {
                a: c * a,
                b: c * b,
                r1: *r1,
                r2: *r2,
            },
            Weight::IndicatorMinus { a, b, r1 } => Weight::IndicatorMinus {
                a: c * a,
                b: c * b,
                r1: *r1,
            },
            Weight::Table(t) => Weight::Table(t.scaled(c)),
        })
    }

    /// Tabulates `c·g` on `spec`.
    pub fn sampled(&self, spec: &GridSpec, c: f64) -> Weight {
        let values = self.on_grid(spec).into_iter().map(|v| c * v).collect();
        Weight::Table(GridFunction::new(*spec, values).expect("weight values are finite"))
    }

    pub fn family(&self) -> &'static str {
        match self {
            Weight::GaussianBump { .. } => "gaussian_bump",
            Weight::Ring { .. } => "ring",
            Weight::IndicatorMinus { .. } => "indicator_minus",
            Weight::Table(_) => "table",
        }
    }

    /// Value at a radius, for the radially symmetric families.
    pub fn radial(&self, r: f64) -> Option<f64> {
        match *self {
            Weight::GaussianBump { a, b } => Some(a * (-r * r).exp() - b),
            Weight::Ring { a, b, r1, r2 } => {
                if r2.is_infinite() {
                    Some(a)
                } else {
                    Some(a - (a + b) * smootherstep((r - r1) / (r2 - r1)))
                }
            }
            Weight::IndicatorMinus { a, b, r1 } => Some(if r < r1 { a - b } else { -b }),
            Weight::Table(_) => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Weight::Table(t) => {
                let spec = t.spec();
                assert_eq!(x.len(), spec.dim(), "point dimension must match table grid");
                let h = spec.spacing();
                let m = spec.points_per_axis();
                let mut idx = [0usize; 3];
                for (axis, &c) in x.iter().enumerate() {
                    if c.abs() > spec.half_width() {
                        return 0.0;
                    }
                    let k = ((c + spec.half_width()) / h).floor();
                    idx[axis] = (k.max(0.0) as usize).min(m - 1);
                }
                t.values()[spec.flat_index(idx)]
            }
            w => {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                w.radial(r).expect("radial family")
            }
        }
    }

    /// Values at all cell centres of `spec`.
    pub fn on_grid(&self, spec: &GridSpec) -> Vec<f64> {
        if let Weight::Table(t) = self {
            if t.spec() == spec {
                return t.values().to_vec();
            }
        }
        (0..spec.len())
            .map(|i| {
                let x = spec.point(i);
                self.eval(&x[..spec.dim()])
            })
            .collect()
    }

    pub fn positive_part(&self, x: &[f64]) -> f64 {
        self.eval(x).max(0.0)
    }

    pub fn negative_part(&self, x: &[f64]) -> f64 {
        (-self.eval(x)).max(0.0)
    }

    /// Bound on `sup |g|`, exact for the closed-form families.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            Weight::GaussianBump { a, b } | Weight::IndicatorMinus { a, b, .. } => (a - b).abs().max(b),
            Weight::Ring { a, b, r2, .. } => {
                if r2.is_infinite() {
                    a
                } else {
                    a.max(b)
                }
            }
            Weight::Table(ref t) => t.max_abs(),
        }
    }

    /// `sup g_-`, the `‖g_2‖_∞`-type constant.
    pub fn negative_sup(&self) -> f64 {
        match *self {
            Weight::GaussianBump { b, .. } => b,
            Weight::Ring { b, r2, .. } => {
                if r2.is_infinite() {
                    0.0
                } else {
                    b
                }
            }
            Weight::IndicatorMinus { a, b, .. } => b.max(b - a),
            Weight::Table(ref t) => t.values().iter().fold(0.0, |m, &v| m.max(-v)),
        }
    }

    /// `sup g_+`.
    pub fn positive_sup(&self) -> f64 {
        match *self {
            Weight::GaussianBump { a, b } | Weight::IndicatorMinus { a, b, .. } => (a - b).max(0.0),
            Weight::Ring { a, .. } => a,
            Weight::Table(ref t) => t.values().iter().fold(0.0, |m, &v| m.max(v)),
        }
    }

    /// Radius beyond which `g < -delta`, if one exists.
    pub fn negative_beyond(&self, delta: f64) -> Option<f64> {
        match *self {
            Weight::GaussianBump { a, b } => {
                if b <= delta {
                    None
                } else if a <= b - delta {
                    Some(0.0)
                } else {
                    Some((a / (b - delta)).ln().sqrt())
                }
            }
            Weight::Ring { a, b, r1, r2 } => {
                if r2.is_infinite() || b <= delta {
                    None
                } else if a < -delta {
                    Some(0.0)
                } else {
                    // g is monotone on [r1, r2]; bisect for g = -delta.
                    let (mut lo, mut hi) = (r1, r2);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if self.radial(mid).unwrap() < -delta {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    Some(hi)
                }
            }
            Weight::IndicatorMinus { a, b, r1 } => {
                if b <= delta {
                    None
                } else if a - b < -delta {
                    Some(0.0)
                } else {
                    Some(r1)
                }
            }
            Weight::Table(_) => None,
        }
    }

    /// Fraction of the mass of `g_+` lying outside `[-L, L]^N`.
    ///
    /// For radial families this is bounded above by the mass outside the
    /// inscribed ball of radius `L`; an infinite positive mass gives 1.
    pub fn positive_mass_outside(&self, spec: &GridSpec) -> Result<f64> {
        let dim = spec.dim();
        let l = spec.half_width();
        let (outer, breaks): (f64, Vec<f64>) = match *self {
            Weight::Table(_) => return Ok(0.0),
            Weight::Ring { a, r2, .. } if r2.is_infinite() => return Ok(if a > 0.0 { 1.0 } else { 0.0 }),
            Weight::GaussianBump { a, b } => {
                if a <= b {
                    return Ok(0.0);
                }
                let rmax = if b > 0.0 {
                    (a / b).ln().sqrt()
                } else {
                    GAUSSIAN_CUTOFF
                };
                (rmax, vec![])
            }
            Weight::Ring { r1, r2, .. } => (r2, vec![r1]),
            Weight::IndicatorMinus { a, b, r1 } => {
                if a <= b {
                    return Ok(0.0);
                }
                (r1, vec![])
            }
        };
        let density = |r: f64| self.radial(r).unwrap().max(0.0) * r.powi(dim as i32 - 1);
        let tol = Tolerance::new(1e-300, 1e-12);
        let total = integrate(density, 0.0, outer, &breaks, tol);
        if !total.converged {
            return Err(crate::error::Error::Quadrature("positive weight mass".into()));
        }
        if total.value <= 0.0 {
            return Ok(0.0);
        }
        if l >= outer {
            return Ok(0.0);
        }
        let outside = integrate(density, l, outer, &breaks, tol);
        Ok((outside.value / total.value).clamp(0.0, 1.0))
    }

    /// Midpoint quadrature of `∫_box g`.
    pub fn box_integral(&self, spec: &GridSpec) -> f64 {
        crate::reduce::pairwise_sum(&self.on_grid(spec)) * spec.cell_volume()
    }
}
