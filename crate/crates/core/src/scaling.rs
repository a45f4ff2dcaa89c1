//! Radius studies for `μ_1(B_R, g)` under the matched points-per-radius
//! protocol: the box is `[-cR, cR]^N` with `2c·ppr` points per axis, so
//! grids for different radii are exact dilations of each other.

use std::time::Instant;

use serde::Serialize;

use crate::eigen::{dirichlet_mu1, linear_spectrum_oracle_in, minimize_rayleigh, SolverOptions, WeightedProblem, DENSE_BUDGET};
use crate::error::{invalid, Error, Result};
use crate::nonlocal::{Discretization, GridFunction, GridSpec, KernelParams, Weight};

/// Relative slack on the scaling bound `μ_1(B_R,1) R^{sp} <= μ_1(B_1,1)`.
pub const SCALING_SLACK: f64 = 0.03;
/// Largest tolerated fraction of the mass of `g_+` outside the box.
pub const MASS_OUTSIDE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub points_per_radius: usize,
    /// Box half-width as a multiple of `R`; at least 2.
    pub box_factor: f64,
    pub solver: SolverOptions,
    /// Fill `runtime_seconds`; off by default so outputs stay reproducible.
    pub record_timings: bool,
    /// Compare `p = 2` rows with the dense oracle when it fits the budget.
    pub dense_check: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            points_per_radius: 32,
            box_factor: 2.0,
            solver: SolverOptions::default(),
            record_timings: false,
            dense_check: true,
        }
    }
}

impl StudyOptions {
    fn validate(&self) -> Result<()> {
        if self.points_per_radius == 0 {
            return Err(invalid("points_per_radius must be positive"));
        }
        if !(self.box_factor >= 2.0 && self.box_factor.is_finite()) {
            return Err(invalid(format!("box_factor {} must be at least 2", self.box_factor)));
        }
        self.solver.validate()
    }

    /// Grid for radius `r`: half-width `cR`, `2c·ppr` points per axis.
    pub fn grid_for(&self, dim: usize, r: f64) -> Result<GridSpec> {
        let m = (2.0 * self.box_factor * self.points_per_radius as f64).round() as usize;
        GridSpec::new(dim, self.box_factor * r, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub radius: f64,
    pub mu1: f64,
    /// `μ_1 R^{sp}` (unit weight) or `μ_1 R^{sp-N}` (nonexistence study).
    pub mu1_scaled: f64,
    pub points_per_radius: usize,
    pub runtime_seconds: Option<f64>,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub oracle_mu1: Option<f64>,
    /// `⟦φ_R⟧^p / ∫ g |φ_R|^p` for the fixed bump (nonexistence study).
    pub bump_bound: Option<f64>,
    /// `∫ g |φ_R|^p` (nonexistence study).
    pub bump_weighted_integral: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub rows: Vec<StudyRow>,
    pub unit_ball_mu1: f64,
    /// Every `μ_1 R^{sp} <= 1.03 μ_1(B_1)`.
    pub bounded_by_unit_ball: bool,
    /// `μ_1 R^{sp}` nonincreasing up to the same 3% slack.
    pub scaled_nonincreasing: bool,
    pub aborted: Option<String>,
}

fn sorted_radii(radii: &[f64], min: f64) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Err(invalid("at least one radius is required"));
    }
    if radii.iter().any(|&r| !(r >= min && r.is_finite())) {
        return Err(invalid(format!("radii must be finite and at least {min}")));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    Ok(rs)
}

fn solve_row(
    r: f64,
    g: &Weight,
    k: &KernelParams,
    opts: &StudyOptions,
    scale_power: f64,
) -> Result<StudyRow> {
    let spec = opts.grid_for(k.dim(), r)?;
    let t0 = Instant::now();
    let pair = dirichlet_mu1(r, g, k, &spec, &opts.solver)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let oracle_mu1 = if opts.dense_check && k.p() == 2.0 {
        let active = (0..spec.len()).filter(|&i| spec.radius(i) < r).count();
        if active <= DENSE_BUDGET {
            Some(linear_spectrum_oracle_in(g, k, &spec, 1, Some(r))?[0].lambda)
        } else {
            None
        }
    } else {
        None
    };
    Ok(StudyRow {
        radius: r,
        mu1: pair.lambda,
        mu1_scaled: pair.lambda * r.powf(scale_power),
        points_per_radius: opts.points_per_radius,
        runtime_seconds: opts.record_timings.then_some(elapsed),
        converged: pair.converged,
        residual: pair.residual,
        iterations: pair.iterations,
        oracle_mu1,
        bump_bound: None,
        bump_weighted_integral: None,
    })
}

/// `μ_1(B_R, 1) R^{sp}` across radii, against `μ_1(B_1, 1)`.
pub fn mu1_scaling_study(k: &KernelParams, radii: &[f64], opts: &StudyOptions) -> Result<ScalingStudy> {
    opts.validate()?;
    let rs = sorted_radii(radii, 1.0)?;
    let g = Weight::unit();
    let unit = solve_row(1.0, &g, k, opts, k.sp())?;
    let mut rows = Vec::with_capacity(rs.len());
    let mut aborted = None;
    for &r in &rs {
        if r == 1.0 {
            rows.push(unit.clone());
            continue;
        }
        match solve_row(r, &g, k, opts, k.sp()) {
            Ok(row) => rows.push(row),
            Err(e) => {
                aborted = Some(format!("R={r}: {e}"));
                break;
            }
        }
    }
    let cap = unit.mu1 * (1.0 + SCALING_SLACK);
    Ok(ScalingStudy {
        bounded_by_unit_ball: rows.iter().all(|row| row.mu1_scaled <= cap),
        scaled_nonincreasing: rows
            .windows(2)
            .all(|w| w[1].mu1_scaled <= w[0].mu1_scaled * (1.0 + SCALING_SLACK)),
        unit_ball_mu1: unit.mu1,
        rows,
        aborted,
    })
}

/// `(1 - |x|^2)_+^4`: `φ(0) = 1`, supported in the closed unit ball.
pub fn unit_bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    (1.0 - r2).max(0.0).powi(4)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceStudy {
    pub rows: Vec<StudyRow>,
    /// `∫_box g` on each row's box.
    pub box_integrals: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `μ_1 <= ⟦φ_R⟧^p / ∫ g|φ_R|^p` at every row.
    pub dominated_by_bound: bool,
    /// Successive differences of `∫ g|φ_R|^p`.
    pub bump_integral_increments: Vec<f64>,
    /// Increments shrink in magnitude.
    pub bump_integral_cauchy: bool,
    /// `max μ_1 R^{sp-N}`, a bound for the scaled sequence.
    pub scaled_constant: f64,
    /// Full-box principal eigenvalue on the largest grid, if computed.
    pub full_box_lambda: Option<f64>,
    /// Radii where the full-box eigenvalue exceeds `μ_1(B_R, g)`, which a
    /// true eigenvalue on `R^N` could not do.
    pub inconsistent_radii: Vec<f64>,
    pub aborted: Option<String>,
}

/// `μ_1(B_R, g)` across radii for `sp > N` and `∫ g > 0`.
pub fn nonexistence_trend_study(
    g: &Weight,
    k: &KernelParams,
    radii: &[f64],
    opts: &StudyOptions,
    full_box_check: bool,
) -> Result<NonexistenceStudy> {
    opts.validate()?;
    if k.sp() <= k.dim() as f64 {
        return Err(invalid(format!("nonexistence study needs sp > N (sp = {}, N = {})", k.sp(), k.dim())));
    }
    let rs = sorted_radii(radii, f64::MIN_POSITIVE)?;
    // Validate every box before solving anything.
    let mut box_integrals = Vec::with_capacity(rs.len());
    for &r in &rs {
        let spec = opts.grid_for(k.dim(), r)?;
        let outside = g.positive_mass_outside(&spec)?;
        if outside > MASS_OUTSIDE_TOL {
            return Err(Error::NotAdmissible(format!(
                "fraction {outside:.3e} of the positive weight mass lies outside the box for R={r}"
            )));
        }
        let integral = g.box_integral(&spec);
        if !(integral > 0.0) {
            return Err(Error::NotAdmissible(format!("∫_box g = {integral:.6e} <= 0 for R={r}")));
        }
        box_integrals.push(integral);
    }

    let scale_power = k.sp() - k.dim() as f64;
    let mut rows = Vec::with_capacity(rs.len());
    let mut aborted = None;
    for &r in &rs {
        let row = solve_row(r, g, k, opts, scale_power).and_then(|mut row| {
            let spec = opts.grid_for(k.dim(), r)?;
            let phi = GridFunction::from_fn(spec, |x| {
                let y: Vec<f64> = x.iter().map(|c| c / r).collect();
                unit_bump(&y)
            });
            let pb = WeightedProblem::new(Discretization::new(spec, *k)?, g);
            let weighted = pb.constraint(&phi)?;
            row.bump_weighted_integral = Some(weighted);
            row.bump_bound = Some(pb.rayleigh_quotient(&phi)?);
            Ok(row)
        });
        match row {
            Ok(row) => rows.push(row),
            Err(e) => {
                aborted = Some(format!("R={r}: {e}"));
                break;
            }
        }
    }

    let increments: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].bump_weighted_integral.unwrap() - w[0].bump_weighted_integral.unwrap())
        .collect();
    let full_box_lambda = if full_box_check && aborted.is_none() {
        let spec = opts.grid_for(k.dim(), *rs.last().unwrap())?;
        minimize_rayleigh(g, k, &spec, &opts.solver).ok().map(|e| e.lambda)
    } else {
        None
    };
    let inconsistent_radii = match full_box_lambda {
        Some(l) => rows.iter().filter(|row| l > row.mu1).map(|row| row.radius).collect(),
        None => Vec::new(),
    };
    Ok(NonexistenceStudy {
        strictly_decreasing: rows.windows(2).all(|w| w[1].mu1 < w[0].mu1),
        dominated_by_bound: rows
            .iter()
            .all(|row| row.bump_bound.is_some_and(|b| b > 0.0 && row.mu1 <= b)),
        bump_integral_cauchy: increments.windows(2).all(|w| w[1].abs() < w[0].abs()),
        bump_integral_increments: increments,
        scaled_constant: rows.iter().map(|r| r.mu1_scaled).fold(0.0, f64::max),
        box_integrals,
        full_box_lambda,
        inconsistent_radii,
        rows,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> StudyOptions {
        StudyOptions {
            points_per_radius: 12,
            ..StudyOptions::default()
        }
    }

    #[test]
    fn matched_grids_are_dilations() {
        let o = quick();
        let a = o.grid_for(1, 1.0).unwrap();
        let b = o.grid_for(1, 3.0).unwrap();
        assert_eq!(a.points_per_axis(), b.points_per_axis());
        assert!((b.spacing() - 3.0 * a.spacing()).abs() < 1e-15);
    }

    #[test]
    fn unit_weight_scaling_is_exact_under_rescaling() {
        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        let st = mu1_scaling_study(&k, &[1.0, 2.0, 4.0], &quick()).unwrap();
        assert!(st.bounded_by_unit_ball);
        for row in &st.rows {
            assert!((row.mu1_scaled / st.unit_ball_mu1 - 1.0).abs() < 1e-6);
            let o = row.oracle_mu1.unwrap();
            assert!((row.mu1 / o - 1.0).abs() < 1e-6);
            assert!(row.runtime_seconds.is_none());
        }
    }

    #[test]
    fn nonexistence_requires_sp_above_n() {
        let k = KernelParams::new(1, 0.4, 2.0).unwrap();
        let g = Weight::gaussian_bump(1.0, 0.01).unwrap();
        assert!(nonexistence_trend_study(&g, &k, &[2.0], &quick(), false).is_err());
    }

    #[test]
    fn nonexistence_refuses_negative_box_integral() {
        let k = KernelParams::new(1, 0.9, 2.0).unwrap();
        let g = Weight::gaussian_bump(1.0, 0.5).unwrap();
        assert!(matches!(
            nonexistence_trend_study(&g, &k, &[4.0], &quick(), false),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn bump_is_normalized() {
        assert_eq!(unit_bump(&[0.0, 0.0]), 1.0);
        assert_eq!(unit_bump(&[1.0]), 0.0);
    }
}
