//! Interaction of a box point with the complement of the box,
//! `T(x) = ∫_{R^N \ [-L,L]^N} |x - y|^{-(N+sp)} dy`.
//!
//! The divergence theorem applied to `(y - x)|y - x|^{-(N+sp)}` turns the
//! exterior volume integral into a sum over the box faces,
//! `T(x) = (1/sp) Σ_f a_f ∫_f |y - x|^{-(N+sp)} dA`, where `a_f` is the
//! distance from `x` to the plane of face `f`.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::nonlocal::grid::GridSpec;
use crate::nonlocal::kernel::KernelParams;
use crate::nonlocal::weight::sphere_area;
use crate::quadrature::{integrate, Tolerance};
use crate::reduce::pairwise_sum;

const FACE_TOL: Tolerance = Tolerance::new(1e-300, 1e-13);

/// `a^{-sp} ∫_{θ1}^{θ2} cos^{sp} θ dθ`, the 2D face term.
fn segment_face(a: f64, t1: f64, t2: f64, sp: f64) -> Result<f64> {
    let (th1, th2) = ((t1 / a).atan(), (t2 / a).atan());
    let q = integrate(|th: f64| th.cos().powf(sp), th1, th2, &[0.0], FACE_TOL);
    if !q.converged {
        return Err(Error::Quadrature("2D exterior face".into()));
    }
    Ok(a.powf(-sp) * q.value)
}

/// 3D face term over the rectangle `[t1,t2]×[u1,u2]` (containing the
/// origin) at height `a`, in polar coordinates around the foot point.
fn rectangle_face(a: f64, t: (f64, f64), u: (f64, f64), sp: f64) -> Result<f64> {
    let (t1, t2) = t;
    let (u1, u2) = u;
    let reach = |psi: f64| {
        let (c, s) = (psi.cos(), psi.sin());
        let mut r = f64::INFINITY;
        if c > 0.0 {
            r = r.min(t2 / c);
        } else if c < 0.0 {
            r = r.min(t1 / c);
        }
        if s > 0.0 {
            r = r.min(u2 / s);
        } else if s < 0.0 {
            r = r.min(u1 / s);
        }
        r
    };
    let e = 0.5 * (1.0 + sp);
    let inner = |psi: f64| {
        let r = reach(psi);
        -(-e * (r * r / (a * a)).ln_1p()).exp_m1()
    };
    let wrap = |v: f64| if v < 0.0 { v + 2.0 * PI } else { v };
    let mut corners = [
        wrap(u1.atan2(t1)),
        wrap(u1.atan2(t2)),
        wrap(u2.atan2(t1)),
        wrap(u2.atan2(t2)),
    ];
    corners.sort_by(f64::total_cmp);
    let q = integrate(inner, 0.0, 2.0 * PI, &corners, FACE_TOL);
    if !q.converged {
        return Err(Error::Quadrature("3D exterior face".into()));
    }
    Ok(a.powf(-sp) / (1.0 + sp) * q.value)
}

/// Exact exterior tail at a point strictly inside `[-L, L]^N`.
pub fn exterior_tail(x: &[f64], half_width: f64, k: &KernelParams) -> Result<f64> {
    let n = k.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            kernel: n,
            grid: x.len(),
        });
    }
    if x.iter().any(|c| !(c.abs() < half_width)) {
        return Err(invalid("exterior tail needs a point strictly inside the box"));
    }
    let sp = k.sp();
    let l = half_width;
    let mut terms = Vec::with_capacity(2 * n);
    for axis in 0..n {
        for a in [l - x[axis], l + x[axis]] {
            let term = match n {
                1 => a.powf(-sp),
                2 => {
                    let o = x[1 - axis];
                    segment_face(a, -l - o, l - o, sp)?
                }
                _ => {
                    let others: Vec<f64> = (0..3).filter(|&j| j != axis).map(|j| x[j]).collect();
                    rectangle_face(
                        a,
                        (-l - others[0], l - others[0]),
                        (-l - others[1], l - others[1]),
                        sp,
                    )?
                }
            };
            terms.push(term);
        }
    }
    Ok(pairwise_sum(&terms) / sp)
}

/// Tail of the complement of the inscribed ball of radius `d`,
/// `|S^{N-1}| d^{-sp} / sp`; an upper bound for [`exterior_tail`] when
/// `d` is the distance to the boundary.
pub fn inscribed_ball_tail(d: f64, k: &KernelParams) -> f64 {
    sphere_area(k.dim()) * d.powf(-k.sp()) / k.sp()
}

/// Tails at every cell centre, computed once per symmetry class of the grid.
pub fn exterior_tails(spec: &GridSpec, k: &KernelParams) -> Result<Vec<f64>> {
    if spec.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            kernel: k.dim(),
            grid: spec.dim(),
        });
    }
    let m = spec.points_per_axis();
    let n = spec.dim();
    let key = |flat: usize| {
        let idx = spec.multi_index(flat);
        let mut folded = [0usize; 3];
        for a in 0..n {
            folded[a] = idx[a].min(m - 1 - idx[a]);
        }
        folded[..n].sort_unstable();
        folded
    };
    let mut classes: Vec<[usize; 3]> = (0..spec.len()).map(key).collect();
    classes.sort_unstable();
    classes.dedup();
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        classes
            .par_iter()
            .map(|c| {
                let x: Vec<f64> = (0..n).map(|a| spec.axis_coordinate(c[a])).collect();
                exterior_tail(&x, spec.half_width(), k)
            })
            .collect()
    };
    let mut table = HashMap::with_capacity(classes.len());
    for (c, v) in classes.into_iter().zip(values) {
        table.insert(c, v?);
    }
    Ok((0..spec.len()).map(|i| table[&key(i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(1/sp) ∮ ρ(ω)^{-sp} dω` with `ρ` the ray length to the boundary.
    fn ray_oracle_2d(x: [f64; 2], l: f64, sp: f64, n: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let th = 2.0 * PI * (i as f64 + 0.5) / n as f64;
            let (c, s) = (th.cos(), th.sin());
            let rx = if c > 0.0 { (l - x[0]) / c } else { (-l - x[0]) / c };
            let ry = if s > 0.0 { (l - x[1]) / s } else { (-l - x[1]) / s };
            acc += rx.min(ry).powf(-sp);
        }
        acc * 2.0 * PI / n as f64 / sp
    }

    fn ray_oracle_3d(x: [f64; 3], l: f64, sp: f64, n: usize) -> f64 {
        // Midpoint in cos(polar angle) and azimuth.
        let mut acc = 0.0;
        for i in 0..n {
            let ct = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            let st = (1.0 - ct * ct).sqrt();
            for j in 0..2 * n {
                let ph = PI * (j as f64 + 0.5) / n as f64;
                let d = [st * ph.cos(), st * ph.sin(), ct];
                let mut r = f64::INFINITY;
                for a in 0..3 {
                    if d[a] > 0.0 {
                        r = r.min((l - x[a]) / d[a]);
                    } else if d[a] < 0.0 {
                        r = r.min((-l - x[a]) / d[a]);
                    }
                }
                acc += r.powf(-sp);
            }
        }
        acc * (2.0 / n as f64) * (PI / n as f64) / sp
    }

    #[test]
    fn one_dimensional_closed_form() {
        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        let t = exterior_tail(&[0.5], 2.0, &k).unwrap();
        assert!((t - (1.5f64.powf(-1.0) + 2.5f64.powf(-1.0))).abs() < 1e-15);
    }

    #[test]
    fn two_dimensional_matches_ray_oracle() {
        let k = KernelParams::new(2, 0.4, 1.7).unwrap();
        for x in [[0.0, 0.0], [0.7, -0.2], [0.95, 0.9]] {
            let t = exterior_tail(&x, 1.0, &k).unwrap();
            let o = ray_oracle_2d(x, 1.0, k.sp(), 400_000);
            assert!((t - o).abs() < 1e-7 * o, "{t} vs {o}");
        }
    }

    #[test]
    fn three_dimensional_matches_ray_oracle() {
        let k = KernelParams::new(3, 0.5, 2.0).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.5, -0.3, 0.1]] {
            let t = exterior_tail(&x, 1.0, &k).unwrap();
            let o = ray_oracle_3d(x, 1.0, k.sp(), 1000);
            assert!((t - o).abs() < 2e-4 * o, "{t} vs {o}");
        }
    }

    #[test]
    fn ball_tail_is_an_upper_bound() {
        let k = KernelParams::new(2, 0.5, 2.0).unwrap();
        let spec = GridSpec::new(2, 1.0, 8).unwrap();
        let tails = exterior_tails(&spec, &k).unwrap();
        for (i, t) in tails.iter().enumerate() {
            assert!(*t < inscribed_ball_tail(spec.distance_to_boundary(i), &k));
        }
    }

    #[test]
    fn symmetry_classes_agree_with_direct() {
        let k = KernelParams::new(3, 0.3, 2.5).unwrap();
        let spec = GridSpec::new(3, 1.5, 5).unwrap();
        let tails = exterior_tails(&spec, &k).unwrap();
        for i in [0, 7, 31, 62, 124] {
            let x = spec.point(i);
            let direct = exterior_tail(&x, 1.5, &k).unwrap();
            assert!((tails[i] - direct).abs() <= 1e-13 * direct);
        }
    }
}
