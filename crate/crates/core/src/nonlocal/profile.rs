use crate::error::{invalid, Result};

/// Relative tolerance for tail/node continuity.
pub const TAIL_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Core {
    /// Monotone cubic Hermite through the nodes (Fritsch–Carlson slopes).
    Table {
        radii: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
    /// `a + b r^2 + c r^4` on `[0, cutoff]`.
    EvenQuartic { a: f64, b: f64, c: f64, cutoff: f64 },
}

/// Power tail `coeff · r^{-alpha}` beyond the last node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coeff: f64,
    pub alpha: f64,
}

/// Which analytic piece a radius falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Below,
    Segment(usize),
    Quartic,
    Tail,
    Zero,
}

/// Radially symmetric function: cubic core plus optional power tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    core: Core,
    tail: Option<PowerTail>,
    positive: bool,
    decreasing: bool,
}

fn pchip_slopes(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    if n == 2 {
        let d = (v[1] - v[0]) / (r[1] - r[0]);
        return vec![d, d];
    }
    let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Coefficients of `v0 + d0 s + c2 s^2 + c3 s^3` on one Hermite segment.
fn segment_coeffs(radii: &[f64], values: &[f64], slopes: &[f64], i: usize) -> [f64; 4] {
    let h = radii[i + 1] - radii[i];
    let delta = (values[i + 1] - values[i]) / h;
    let (d0, d1) = (slopes[i], slopes[i + 1]);
    [
        values[i],
        d0,
        (3.0 * delta - 2.0 * d0 - d1) / h,
        (d0 + d1 - 2.0 * delta) / (h * h),
    ]
}

/// `(1+x)^{-a} + (1-x)^{-a} - 2` for `0 <= x <= 1/2`, by its even series.
fn tail_second_difference(alpha: f64, x: f64) -> f64 {
    let x2 = x * x;
    let mut term = alpha * (alpha + 1.0) * 0.5 * x2;
    let mut sum = 0.0_f64;
    let mut k = 1.0_f64;
    while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
        sum += term;
        let n = 2.0 * k;
        term *= (alpha + n) * (alpha + n + 1.0) / ((n + 1.0) * (n + 2.0)) * x2;
        k += 1.0;
        if k > 400.0 || term == 0.0 {
            break;
        }
    }
    2.0 * sum
}

impl RadialProfile {
    /// Hermite table through `(radii, values)` with an optional tail.
    pub fn from_nodes(radii: Vec<f64>, values: Vec<f64>, tail: Option<PowerTail>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(invalid("profile needs at least two nodes with one value each"));
        }
        if radii[0] <= 0.0 || radii.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("profile nodes must be finite with r0 > 0"));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("profile radii must be strictly increasing"));
        }
        if let Some(t) = tail {
            check_tail(t, *radii.last().unwrap(), *values.last().unwrap())?;
        }
        let slopes = pchip_slopes(&radii, &values);
        let positive = values.iter().all(|&v| v >= 0.0) && tail.is_none_or(|t| t.coeff >= 0.0);
        let decreasing = values.windows(2).all(|w| w[1] <= w[0])
            && match tail {
                Some(t) => t.coeff >= 0.0,
                None => *values.last().unwrap() >= 0.0,
            };
        Ok(Self {
            core: Core::Table { radii, values, slopes },
            tail,
            positive,
            decreasing,
        })
    }

    /// Hermite table whose tail exponent is `alpha` and whose coefficient is
    /// chosen to match the last node.
    pub fn with_matched_tail(radii: Vec<f64>, values: Vec<f64>, alpha: f64) -> Result<Self> {
        let (rk, vk) = match (radii.last(), values.last()) {
            (Some(&r), Some(&v)) => (r, v),
            _ => return Err(invalid("profile needs nodes")),
        };
        let coeff = vk * rk.powf(alpha);
        Self::from_nodes(radii, values, Some(PowerTail { coeff, alpha }))
    }

    /// `a + b r^2 + c r^4` on `[0, cutoff]`, then the tail.
    pub fn even_quartic(a: f64, b: f64, c: f64, cutoff: f64, tail: Option<PowerTail>) -> Result<Self> {
        if !(cutoff > 0.0) || ![a, b, c, cutoff].iter().all(|v| v.is_finite()) {
            return Err(invalid("quartic core needs finite coefficients and positive cutoff"));
        }
        let q = cutoff * cutoff;
        let at_cut = a + q * (b + c * q);
        if let Some(t) = tail {
            check_tail(t, cutoff, at_cut)?;
        }
        let decreasing = b <= 0.0 && b + 2.0 * c * q <= 0.0 && tail.is_none_or(|t| t.coeff >= 0.0);
        let positive = at_cut >= 0.0 && a >= 0.0 && (decreasing || {
            // Minimum of the quadratic in q over [0, cutoff^2].
            let qs = if c > 0.0 { (-b / (2.0 * c)).clamp(0.0, q) } else { 0.0 };
            a + qs * (b + c * qs) >= 0.0
        }) && tail.is_none_or(|t| t.coeff >= 0.0);
        Ok(Self {
            core: Core::EvenQuartic { a, b, c, cutoff },
            tail,
            positive,
            decreasing,
        })
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn is_decreasing(&self) -> bool {
        self.decreasing
    }

    pub fn tail(&self) -> Option<PowerTail> {
        self.tail
    }

    /// Smallest tabulated radius (0 for a quartic core).
    pub fn first_radius(&self) -> f64 {
        match &self.core {
            Core::Table { radii, .. } => radii[0],
            Core::EvenQuartic { .. } => 0.0,
        }
    }

    /// Radius where the tail begins.
    pub fn last_radius(&self) -> f64 {
        match &self.core {
            Core::Table { radii, .. } => *radii.last().unwrap(),
            Core::EvenQuartic { cutoff, .. } => *cutoff,
        }
    }

    fn piece(&self, r: f64) -> Piece {
        match &self.core {
            Core::Table { radii, .. } => {
                let last = *radii.last().unwrap();
                if r < radii[0] {
                    Piece::Below
                } else if r <= last {
                    let i = radii.partition_point(|&x| x <= r).saturating_sub(1);
                    Piece::Segment(i.min(radii.len() - 2))
                } else if self.tail.is_some() {
                    Piece::Tail
                } else {
                    Piece::Zero
                }
            }
            Core::EvenQuartic { cutoff, .. } => {
                if r <= *cutoff {
                    Piece::Quartic
                } else if self.tail.is_some() {
                    Piece::Tail
                } else {
                    Piece::Zero
                }
            }
        }
    }

    /// Derivatives `[f, f', f'', f''']` at `r`.
    fn jet(&self, r: f64) -> [f64; 4] {
        match (self.piece(r), &self.core) {
            (Piece::Below, Core::Table { values, .. }) => [values[0], 0.0, 0.0, 0.0],
            (Piece::Segment(i), Core::Table { radii, values, slopes }) => {
                let [v0, d0, c2, c3] = segment_coeffs(radii, values, slopes, i);
                let s = r - radii[i];
                [
                    v0 + s * (d0 + s * (c2 + s * c3)),
                    d0 + s * (2.0 * c2 + 3.0 * c3 * s),
                    2.0 * c2 + 6.0 * c3 * s,
                    6.0 * c3,
                ]
            }
            (Piece::Quartic, Core::EvenQuartic { a, b, c, .. }) => {
                let q = r * r;
                [
                    a + q * (b + c * q),
                    r * (2.0 * b + 4.0 * c * q),
                    2.0 * b + 12.0 * c * q,
                    24.0 * c * r,
                ]
            }
            (Piece::Tail, _) => {
                let t = self.tail.unwrap();
                let v = t.coeff * r.powf(-t.alpha);
                let a = t.alpha;
                [
                    v,
                    -a * v / r,
                    a * (a + 1.0) * v / (r * r),
                    -a * (a + 1.0) * (a + 2.0) * v / (r * r * r),
                ]
            }
            _ => [0.0; 4],
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r)[0]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.jet(r)[1]
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        self.jet(r)[2]
    }

    /// `value(a) - value(b)`, avoiding cancellation when `a` and `b` share
    /// a piece.
    pub fn diff(&self, a: f64, b: f64) -> f64 {
        let pa = self.piece(a);
        if pa != self.piece(b) {
            return self.value(a) - self.value(b);
        }
        let t = b - a;
        match pa {
            Piece::Below | Piece::Zero => 0.0,
            Piece::Segment(_) => {
                let [_, d1, d2, d3] = self.jet(a);
                -t * (d1 + t * (0.5 * d2 + t * d3 / 6.0))
            }
            Piece::Quartic => {
                let Core::EvenQuartic { b: cb, c: cc, .. } = self.core else { unreachable!() };
                let (qa, qb) = (a * a, b * b);
                // qa - qb = -(t)(a + b) is exact up to one rounding.
                -t * (a + b) * (cb + cc * (qa + qb))
            }
            Piece::Tail => {
                let tail = self.tail.unwrap();
                -tail.coeff * a.powf(-tail.alpha) * (-tail.alpha * (t / a).ln_1p()).exp_m1()
            }
        }
    }

    /// `value(r+t) + value(r-t) - 2 value(r)` for `0 < t <= r/2`, accurate
    /// for small `t` when `r ± t` share a piece.
    pub fn second_difference(&self, r: f64, t: f64) -> f64 {
        let (lo, mid, hi) = (self.piece(r - t), self.piece(r), self.piece(r + t));
        if lo == mid && mid == hi && t <= 0.5 * r {
            match mid {
                Piece::Below | Piece::Zero => return 0.0,
                Piece::Segment(_) => return self.jet(r)[2] * t * t,
                Piece::Quartic => {
                    let Core::EvenQuartic { b, c, .. } = self.core else { unreachable!() };
                    return t * t * (2.0 * b + c * (12.0 * r * r + 2.0 * t * t));
                }
                Piece::Tail => {
                    let tail = self.tail.unwrap();
                    return tail.coeff * r.powf(-tail.alpha) * tail_second_difference(tail.alpha, t / r);
                }
            }
        }
        -(self.diff(r, r + t) + self.diff(r, r - t))
    }

    /// The profile `r ↦ self(factor · r)`.
    pub fn dilate(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid(format!("dilation factor {factor} must be positive")));
        }
        let tail = self.tail.map(|t| PowerTail {
            coeff: t.coeff * factor.powf(-t.alpha),
            alpha: t.alpha,
        });
        let core = match &self.core {
            Core::Table { radii, values, slopes } => Core::Table {
                radii: radii.iter().map(|r| r / factor).collect(),
                values: values.clone(),
                slopes: slopes.iter().map(|d| d * factor).collect(),
            },
            Core::EvenQuartic { a, b, c, cutoff } => Core::EvenQuartic {
                a: *a,
                b: b * factor * factor,
                c: c * factor.powi(4),
                cutoff: cutoff / factor,
            },
        };
        Ok(Self {
            core,
            tail,
            positive: self.positive,
            decreasing: self.decreasing,
        })
    }

    /// The profile `t · self` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("amplitude {t} must be positive")));
        }
        let tail = self.tail.map(|tl| PowerTail {
            coeff: t * tl.coeff,
            alpha: tl.alpha,
        });
        let core = match &self.core {
            Core::Table { radii, values, slopes } => Core::Table {
                radii: radii.clone(),
                values: values.iter().map(|v| t * v).collect(),
                slopes: slopes.iter().map(|d| t * d).collect(),
            },
            Core::EvenQuartic { a, b, c, cutoff } => Core::EvenQuartic {
                a: t * a,
                b: t * b,
                c: t * c,
                cutoff: *cutoff,
            },
        };
        Ok(Self {
            core,
            tail,
            positive: self.positive,
            decreasing: self.decreasing,
        })
    }
}

fn check_tail(t: PowerTail, rk: f64, vk: f64) -> Result<()> {
    if !(t.alpha > 0.0 && t.alpha.is_finite() && t.coeff.is_finite()) {
        return Err(invalid("tail exponent must be positive and coefficient finite"));
    }
    let tv = t.coeff * rk.powf(-t.alpha);
    if (tv - vk).abs() > TAIL_MATCH_TOL * vk.abs().max(1.0) {
        return Err(invalid(format!(
            "tail value {tv} at r_K={rk} does not match node value {vk}"
        )));
    }
    Ok(())
}
