//! Experiment execution and exit-code policy.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{load_config, ConfigError, Study, ValidConfig};
use super::export::{export, Cell, Plot, ReferenceSlope, Report, Table};
use crate::decay::{
    barrier_comparison_check, build_power_profile, fit_decay_exponent, radial_average, verify_decay_regimes,
    BarrierOptions, DecaySource, PowerProfile,
};
use crate::eigen::{
    default_m_shift, dirichlet_mu1, linear_spectrum_oracle, minimize_rayleigh, picone_defect_with, EigenPair,
};
use crate::error::Error;
use crate::nonlocal::{Discretization, GridFunction, GridSpec, KernelParams, Weight};
use crate::scaling::{mu1_scaling_study, nonexistence_trend_study, unit_bump, StudyRow};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Failure = 1,
    Validation = 2,
    NonConvergence = 3,
    Budget = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Self::Budget,
            Error::StepRuleFailure { .. } => Self::NonConvergence,
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::GridMismatch
            | Error::NotAdmissible(_)
            | Error::EmptyConstraintSet(_)
            | Error::DegenerateConstraint(_) => Self::Validation,
            _ => Self::Failure,
        }
    }

    fn from_config_error(e: &ConfigError) -> Self {
        if e.budget {
            Self::Budget
        } else {
            Self::Validation
        }
    }
}

/// Outcome of a `run` invocation.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit: ExitCode,
    pub message: String,
    pub output_dir: Option<PathBuf>,
    pub report: Option<Report>,
}

/// Parses and validates without running anything.
pub fn validate(path: &Path) -> (ExitCode, String) {
    match load_config(path) {
        Ok(cfg) => (ExitCode::Success, format!("{}: valid {} configuration", path.display(), cfg.experiment.name())),
        Err(e) => (ExitCode::from_config_error(&e), e.to_string()),
    }
}

/// Loads, runs and exports one experiment on a pool of `workers` threads
/// (`None` keeps the current pool).
pub fn run(path: &Path, out: Option<&Path>, workers: Option<usize>) -> RunOutcome {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            return RunOutcome {
                exit: ExitCode::from_config_error(&e),
                message: e.to_string(),
                output_dir: None,
                report: None,
            }
        }
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone());
    let result = match workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cfg)),
            Err(e) => {
                return RunOutcome {
                    exit: ExitCode::Failure,
                    message: format!("cannot start worker pool: {e}"),
                    output_dir: None,
                    report: None,
                }
            }
        },
        None => execute(&cfg),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            return RunOutcome {
                exit: ExitCode::from_error(&e),
                message: format!("{}: {e}", cfg.experiment.name()),
                output_dir: None,
                report: None,
            }
        }
    };
    if let Err(e) = export(&report, &cfg, &dir) {
        return RunOutcome {
            exit: ExitCode::Failure,
            message: format!("cannot write results to {}: {e}", dir.display()),
            output_dir: None,
            report: Some(report),
        };
    }
    let (exit, message) = if let Some(a) = &report.aborted {
        (ExitCode::NonConvergence, format!("study aborted: {a}"))
    } else if !report.unconverged.is_empty() {
        (ExitCode::NonConvergence, format!("solver did not converge: {}", report.unconverged.join(", ")))
    } else {
        (ExitCode::Success, format!("wrote {}", dir.display()))
    };
    RunOutcome {
        exit,
        message,
        output_dir: Some(dir),
        report: Some(report),
    }
}

/// Runs the configured experiment and collects its results in memory.
pub fn execute(cfg: &ValidConfig) -> crate::Result<Report> {
    let mut rep = Report::default();
    let k = &cfg.kernel;
    match &cfg.study {
        Study::Seminorm { trials } => seminorm(&mut rep, cfg, *trials)?,
        Study::OperatorEval { bump_radius, alpha } => operator_eval(&mut rep, cfg, *bump_radius, *alpha)?,
        Study::Eigen => {
            let pair = minimize_rayleigh(weight(cfg), k, &grid(cfg), &cfg.solver)?;
            record_pair(&mut rep, "eigen", &pair);
        }
        Study::Dirichlet { radius } => {
            let pair = dirichlet_mu1(*radius, weight(cfg), k, &grid(cfg), &cfg.solver)?;
            rep.set("radius", radius);
            record_pair(&mut rep, "dirichlet", &pair);
        }
        Study::Spectrum { count } => spectrum(&mut rep, cfg, *count)?,
        Study::Picone { trials, m_shift } => picone(&mut rep, cfg, *trials, *m_shift)?,
        Study::DecayRegimes { alpha, radii } => decay_regimes(&mut rep, k, *alpha, radii)?,
        Study::DecayFit { window } => {
            let pair = minimize_rayleigh(weight(cfg), k, &grid(cfg), &cfg.solver)?;
            record_pair(&mut rep, "eigen", &pair);
            decay_fit(&mut rep, k, &pair.eigenfunction, *window)?;
        }
        Study::BarrierCheck {
            window,
            regime_radii,
            window_max,
            amplitude,
        } => {
            let g = weight(cfg);
            let pair = minimize_rayleigh(g, k, &grid(cfg), &cfg.solver)?;
            record_pair(&mut rep, "eigen", &pair);
            decay_fit(&mut rep, k, &pair.eigenfunction, *window)?;
            let opts = BarrierOptions {
                regime_radii: regime_radii.clone(),
                window_max: *window_max,
                amplitude: *amplitude,
            };
            barrier(&mut rep, k, g, &pair, &opts)?;
        }
        Study::ScalingStudy { radii, options } => {
            let st = mu1_scaling_study(k, radii, options)?;
            let mut t = Table::new("scaling_study", &["R", "mu1", "mu1_times_R_sp", "points_per_radius", "runtime_s"]);
            for row in &st.rows {
                t.push(study_cells(row));
                if !row.converged {
                    rep.unconverged.push(format!("R={}", row.radius));
                }
            }
            let oracle_gap = st
                .rows
                .iter()
                .filter_map(|r| r.oracle_mu1.map(|o| (r.mu1 / o - 1.0).abs()))
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            rep.set("unit_ball_mu1", st.unit_ball_mu1);
            rep.set("rows", rows_json(&st.rows));
            rep.set("max_oracle_relative_gap", oracle_gap);
            rep.check("bounded_by_unit_ball", st.bounded_by_unit_ball);
            rep.check("scaled_nonincreasing", st.scaled_nonincreasing);
            if let Some(g) = oracle_gap {
                rep.check("dense_oracle_agreement", g <= 1e-6);
            }
            rep.aborted = st.aborted;
            rep.plots.push(Plot {
                title: format!("mu1(B_R) R^sp, N={} s={} p={}", k.dim(), k.s(), k.p()),
                table: t.name.clone(),
                x: "R",
                y: vec!["mu1_times_R_sp"],
                log_log: false,
                reference_slopes: Vec::new(),
            });
            rep.plots.push(Plot {
                title: "mu1(B_R)".into(),
                table: t.name.clone(),
                x: "R",
                y: vec!["mu1"],
                log_log: true,
                reference_slopes: vec![ReferenceSlope {
                    label: "-sp".into(),
                    slope: -k.sp(),
                    anchor: (1.0, st.unit_ball_mu1),
                }],
            });
            rep.tables.push(t);
        }
        Study::NonexistenceStudy {
            radii,
            options,
            full_box_check,
        } => {
            let st = nonexistence_trend_study(weight(cfg), k, radii, options, *full_box_check)?;
            let mut t = Table::new(
                "nonexistence_study",
                &[
                    "R",
                    "mu1",
                    "mu1_times_R_sp_minus_n",
                    "points_per_radius",
                    "runtime_s",
                    "bump_bound",
                    "bump_weighted_integral",
                ],
            );
            for row in &st.rows {
                let mut cells = study_cells(row);
                cells.push(row.bump_bound.into());
                cells.push(row.bump_weighted_integral.into());
                t.push(cells);
                if !row.converged {
                    rep.unconverged.push(format!("R={}", row.radius));
                }
            }
            rep.set("rows", rows_json(&st.rows));
            rep.set("box_integrals", &st.box_integrals);
            rep.set("bump_integral_increments", &st.bump_integral_increments);
            rep.set("scaled_constant", st.scaled_constant);
            rep.set("full_box_lambda", st.full_box_lambda);
            rep.set("inconsistent_radii", &st.inconsistent_radii);
            rep.check("strictly_decreasing", st.strictly_decreasing);
            rep.check("dominated_by_bound", st.dominated_by_bound);
            rep.check("bump_integral_cauchy", st.bump_integral_cauchy);
            rep.aborted = st.aborted;
            rep.plots.push(Plot {
                title: "mu1(B_R, g) against the test-function bound".into(),
                table: t.name.clone(),
                x: "R",
                y: vec!["mu1", "bump_bound"],
                log_log: true,
                reference_slopes: Vec::new(),
            });
            rep.tables.push(t);
        }
    }
    Ok(rep)
}

fn grid(cfg: &ValidConfig) -> GridSpec {
    cfg.grid.expect("validated config carries a grid")
}

fn weight(cfg: &ValidConfig) -> &Weight {
    cfg.weight.as_ref().expect("validated config carries a weight")
}

fn study_cells(row: &StudyRow) -> Vec<Cell> {
    vec![
        row.radius.into(),
        row.mu1.into(),
        row.mu1_scaled.into(),
        row.points_per_radius.into(),
        row.runtime_seconds.into(),
    ]
}

fn rows_json(rows: &[StudyRow]) -> serde_json::Value {
    serde_json::to_value(rows).unwrap_or_default()
}

fn random_function(spec: GridSpec, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> crate::Result<GridFunction> {
    let values = (0..spec.len()).map(|_| rng.random_range(lo..hi)).collect();
    GridFunction::new(spec, values)
}

fn seminorm(rep: &mut Report, cfg: &ValidConfig, trials: usize) -> crate::Result<()> {
    let spec = grid(cfg);
    let disc = Discretization::new(spec, cfg.kernel)?;
    let p = cfg.kernel.p();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new("seminorm", &["trial", "seminorm", "box_box", "exterior", "homogeneity_error"]);
    let mut worst = 0.0_f64;
    for trial in 0..trials {
        let u = random_function(spec, &mut rng, -1.0, 1.0)?;
        let parts = disc.form_parts(&u, &u)?;
        let s = parts.total();
        let mut err = 0.0_f64;
        for scale in [0.5, 2.0, 3.0] {
            let st = disc.seminorm(&u.scaled(scale))?;
            err = err.max((st - scale.powf(p) * s).abs() / (scale.powf(p) * s));
        }
        worst = worst.max(err);
        t.push(vec![trial.into(), s.into(), parts.box_box.into(), parts.exterior.into(), err.into()]);
    }
    rep.set("trials", trials);
    rep.set("max_homogeneity_error", worst);
    rep.check("homogeneity", worst <= 1e-10);
    rep.tables.push(t);
    Ok(())
}

fn operator_eval(rep: &mut Report, cfg: &ValidConfig, bump_radius: f64, alpha: Option<f64>) -> crate::Result<()> {
    let spec = grid(cfg);
    let disc = Discretization::new(spec, cfg.kernel)?;
    let u = match alpha {
        Some(a) => {
            let prof = PowerProfile::new(a)?;
            GridFunction::from_fn(spec, |x| prof.value(x.iter().map(|c| c * c).sum::<f64>().sqrt()))
        }
        None => GridFunction::from_fn(spec, |x| {
            let y: Vec<f64> = x.iter().map(|c| c / bump_radius).collect();
            unit_bump(&y)
        }),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phi = random_function(spec, &mut rng, -1.0, 1.0)?;
    let residual = disc.weak_strong_residual(&u, &phi)?;
    let mut t = Table::new("operator_eval", &["index", "r", "value", "near_field", "far_field"]);
    for i in 0..spec.len() {
        let s = disc.sample(&u, i)?;
        t.push(vec![i.into(), spec.radius(i).into(), s.value.into(), s.near_field.into(), s.far_field.into()]);
    }
    rep.set("function", if alpha.is_some() { "power_profile" } else { "bump" });
    rep.set("alpha", alpha);
    rep.set("bump_radius", bump_radius);
    rep.set("weak_strong_residual", residual);
    if cfg.kernel.p() == 2.0 {
        rep.check("weak_strong_consistency", residual <= 1e-10);
    }
    rep.plots.push(Plot {
        title: "operator values".into(),
        table: t.name.clone(),
        x: "r",
        y: vec!["value"],
        log_log: false,
        reference_slopes: Vec::new(),
    });
    rep.tables.push(t);
    Ok(())
}

fn record_pair(rep: &mut Report, label: &str, pair: &EigenPair) {
    rep.set("lambda", pair.lambda);
    rep.set("residual", pair.residual);
    rep.set("iterations", pair.iterations);
    rep.set("converged", pair.converged);
    rep.set("constraint_value", pair.constraint_value);
    rep.set("branch", pair.branch);
    let trace_monotone = pair.trace.windows(2).all(|w| w[1].1 <= w[0].1);
    rep.check("trace_monotone", trace_monotone);
    rep.check("sign_constant", pair.eigenfunction.values().iter().all(|&v| v >= 0.0));
    if !pair.converged {
        rep.unconverged.push(label.to_string());
    }
    let mut trace = Table::new(&format!("{label}_trace"), &["iteration", "rayleigh_quotient"]);
    for &(it, f) in &pair.trace {
        trace.push(vec![it.into(), f.into()]);
    }
    let mut radial = Table::new(&format!("{label}_radial"), &["r", "value"]);
    for (r, v) in radial_average(&pair.eigenfunction) {
        radial.push(vec![r.into(), v.into()]);
    }
    rep.plots.push(Plot {
        title: format!("{label} Rayleigh quotient"),
        table: trace.name.clone(),
        x: "iteration",
        y: vec!["rayleigh_quotient"],
        log_log: false,
        reference_slopes: Vec::new(),
    });
    rep.plots.push(Plot {
        title: format!("{label} eigenfunction, radial mean"),
        table: radial.name.clone(),
        x: "r",
        y: vec!["value"],
        log_log: true,
        reference_slopes: Vec::new(),
    });
    rep.tables.push(trace);
    rep.tables.push(radial);
    rep.dumps.push(("eigenfunction".to_string(), pair.eigenfunction.clone()));
}

fn spectrum(rep: &mut Report, cfg: &ValidConfig, count: usize) -> crate::Result<()> {
    let modes = linear_spectrum_oracle(weight(cfg), &cfg.kernel, &grid(cfg), count)?;
    let mut t = Table::new("spectrum", &["index", "lambda", "relative_residual"]);
    for (i, m) in modes.iter().enumerate() {
        t.push(vec![i.into(), m.lambda.into(), m.relative_residual.into()]);
        rep.dumps.push((format!("mode_{i}"), m.vector.clone()));
    }
    rep.set("lambdas", modes.iter().map(|m| m.lambda).collect::<Vec<_>>());
    rep.check("strictly_ordered", modes.windows(2).all(|w| w[1].lambda > w[0].lambda));
    if let Some(m) = modes.first() {
        rep.check("first_mode_sign_constant", m.vector.values().iter().all(|&v| v > 0.0));
    }
    rep.tables.push(t);
    Ok(())
}

fn picone(rep: &mut Report, cfg: &ValidConfig, trials: usize, m_shift: Option<f64>) -> crate::Result<()> {
    let spec = grid(cfg);
    let disc = Discretization::new(spec, cfg.kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new("picone", &["trial", "defect", "seminorm_v", "relative_defect"]);
    let mut worst = f64::INFINITY;
    for trial in 0..trials {
        let u = random_function(spec, &mut rng, 0.05, 1.0)?;
        let v = random_function(spec, &mut rng, 0.05, 1.0)?;
        let m = m_shift.unwrap_or_else(|| default_m_shift(&u));
        let d = picone_defect_with(&disc, &u, &v, m)?;
        let sv = disc.seminorm(&v)?;
        worst = worst.min(d / sv);
        t.push(vec![trial.into(), d.into(), sv.into(), (d / sv).into()]);
    }
    let u = random_function(spec, &mut rng, 0.05, 1.0)?;
    let v = u.scaled(2.0);
    let sv = disc.seminorm(&v)?;
    let mut prop = Table::new("picone_proportional", &["m_shift", "relative_defect"]);
    let mut seq = Vec::new();
    for e in 1..=8 {
        let m = 10f64.powi(-2 * e);
        let d = picone_defect_with(&disc, &u, &v, m)? / sv;
        seq.push(d.abs());
        prop.push(vec![m.into(), d.into()]);
    }
    rep.set("min_relative_defect", worst);
    rep.set("proportional_final", seq.last().copied());
    rep.check("defect_nonnegative", worst >= -1e-10);
    rep.check("proportional_vanishes", seq.windows(2).all(|w| w[1] <= w[0]) && seq.last().is_some_and(|&d| d < 1e-10));
    rep.tables.push(t);
    rep.tables.push(prop);
    Ok(())
}

fn decay_regimes(rep: &mut Report, k: &KernelParams, alpha: f64, radii: &[f64]) -> crate::Result<()> {
    let prof = build_power_profile(alpha)?;
    let bounds = prof.derivative_bounds(1000);
    let junction = prof.junction_check(1e-3);
    let r = verify_decay_regimes(alpha, k, radii)?;
    let mut t = Table::new("decay_regimes", &["r", "op_value", "abs_value", "local_slope"]);
    for (i, (&x, &v)) in r.radii.iter().zip(&r.values).enumerate() {
        t.push(vec![x.into(), v.into(), v.abs().into(), r.local_slopes.get(i).copied().into()]);
    }
    rep.set("alpha", alpha);
    rep.set("derivative_bounds", json!({"c2": bounds.c2, "c3": bounds.c3, "samples": bounds.samples}));
    rep.set("junction_gap", junction.max_relative_gap);
    rep.set("report", &r);
    rep.check("envelope", r.envelope_ok);
    rep.check("junction_c2", junction.max_relative_gap < 1e-6);
    if r.regime == crate::decay::DecayRegime::Above {
        rep.check("sign", r.sign_ok);
        rep.check("negative_beyond_k", r.negative_beyond_k);
    }
    let anchor = (r.radii[0], r.values[0].abs());
    rep.plots.push(Plot {
        title: format!("|(-Δp)^s Υ|, α={alpha}"),
        table: t.name.clone(),
        x: "r",
        y: vec!["abs_value"],
        log_log: true,
        reference_slopes: vec![ReferenceSlope {
            label: "predicted".into(),
            slope: r.predicted_slope,
            anchor,
        }],
    });
    rep.tables.push(t);
    Ok(())
}

fn decay_fit(rep: &mut Report, k: &KernelParams, u: &GridFunction, window: (f64, f64)) -> crate::Result<()> {
    let fit = fit_decay_exponent(DecaySource::Grid(u), window)?;
    let target = k.decay_exponent();
    let rel = (fit.exponent - target).abs() / target;
    rep.set("decay_fit", fit);
    rep.set("decay_target", target);
    rep.set("decay_relative_error", rel);
    rep.check("decay_exponent_within_15pct", rel <= 0.15);
    Ok(())
}

fn barrier(rep: &mut Report, k: &KernelParams, g: &Weight, pair: &EigenPair, opts: &BarrierOptions) -> crate::Result<()> {
    let g2 = g.negative_sup();
    let b = barrier_comparison_check(&pair.eigenfunction, g2, pair.lambda, k, opts)?;
    let prof = PowerProfile::new(b.alpha)?;
    let mut t = Table::new("barrier", &["r", "value", "barrier"]);
    for (r, v) in radial_average(&pair.eigenfunction) {
        if r > b.k1 && r <= b.window.1 {
            t.push(vec![r.into(), v.into(), (b.amplitude * prof.value(b.r_used * r)).into()]);
        }
    }
    rep.set("g2_sup", g2);
    rep.set("negative_beyond", g.negative_beyond(0.5 * g2));
    rep.set("barrier", &b);
    rep.check("barrier", b.passed);
    rep.plots.push(Plot {
        title: "eigenfunction against the lower barrier".into(),
        table: t.name.clone(),
        x: "r",
        y: vec!["value", "barrier"],
        log_log: true,
        reference_slopes: vec![ReferenceSlope {
            label: "-(N+sp)/(p-1)".into(),
            slope: -b.alpha,
            anchor: (b.window.1, b.amplitude * prof.value(b.r_used * b.window.1)),
        }],
    });
    rep.tables.push(t);
    Ok(())
}
