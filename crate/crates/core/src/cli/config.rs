//! Strict JSON experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decay::default_radii;
use crate::eigen::{SolverOptions, DENSE_BUDGET};
use crate::error::Error;
use crate::nonlocal::{GridSpec, KernelParams, Weight};
use crate::scaling::StudyOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Seminorm,
    OperatorEval,
    Eigen,
    Dirichlet,
    Spectrum,
    Picone,
    DecayRegimes,
    DecayFit,
    BarrierCheck,
    ScalingStudy,
    NonexistenceStudy,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Seminorm => "seminorm",
            Self::OperatorEval => "operator-eval",
            Self::Eigen => "eigen",
            Self::Dirichlet => "dirichlet",
            Self::Spectrum => "spectrum",
            Self::Picone => "picone",
            Self::DecayRegimes => "decay-regimes",
            Self::DecayFit => "decay-fit",
            Self::BarrierCheck => "barrier-check",
            Self::ScalingStudy => "scaling-study",
            Self::NonexistenceStudy => "nonexistence-study",
        }
    }

    fn needs_grid(self) -> bool {
        !matches!(self, Self::DecayRegimes | Self::ScalingStudy | Self::NonexistenceStudy)
    }

    fn needs_weight(self) -> bool {
        matches!(
            self,
            Self::Eigen | Self::Dirichlet | Self::Spectrum | Self::DecayFit | Self::BarrierCheck | Self::NonexistenceStudy
        )
    }

    fn uses_solver(self) -> bool {
        matches!(
            self,
            Self::Eigen
                | Self::Dirichlet
                | Self::DecayFit
                | Self::BarrierCheck
                | Self::ScalingStudy
                | Self::NonexistenceStudy
        )
    }

    fn study_keys(self) -> &'static [&'static str] {
        match self {
            Self::Seminorm => &["trials"],
            Self::OperatorEval => &["bump_radius", "alpha"],
            Self::Eigen => &[],
            Self::Spectrum => &["count"],
            Self::Dirichlet => &["radius"],
            Self::Picone => &["trials", "m_shift"],
            Self::DecayRegimes => &["alpha", "regime_radii"],
            Self::DecayFit => &["window"],
            Self::BarrierCheck => &["window", "regime_radii", "window_max", "amplitude"],
            Self::ScalingStudy => &["radii", "points_per_radius", "box_factor", "record_timings", "dense_check"],
            Self::NonexistenceStudy => &[
                "radii",
                "points_per_radius",
                "box_factor",
                "record_timings",
                "dense_check",
                "full_box_check",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSection {
    GaussianBump { a: f64, b: f64 },
    Ring { a: f64, b: f64, r1: f64, r2: Option<f64> },
    IndicatorMinus { a: f64, b: f64, r1: f64 },
    Unit,
}

impl WeightSection {
    pub fn build(self) -> crate::Result<Weight> {
        match self {
            Self::GaussianBump { a, b } => Weight::gaussian_bump(a, b),
            Self::Ring { a, b, r1, r2 } => Weight::ring(a, b, r1, r2.unwrap_or(f64::INFINITY)),
            Self::IndicatorMinus { a, b, r1 } => Weight::indicator_minus(a, b, r1),
            Self::Unit => Ok(Weight::unit()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub trials: Option<usize>,
    pub m_shift: Option<f64>,
    pub bump_radius: Option<f64>,
    pub alpha: Option<f64>,
    pub count: Option<usize>,
    pub radius: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub points_per_radius: Option<usize>,
    pub box_factor: Option<f64>,
    pub record_timings: Option<bool>,
    pub dense_check: Option<bool>,
    pub full_box_check: Option<bool>,
    pub regime_radii: Option<Vec<f64>>,
    pub window: Option<[f64; 2]>,
    pub window_max: Option<f64>,
    pub amplitude: Option<f64>,
}

impl StudySection {
    fn present(&self) -> Vec<&'static str> {
        let flags = [
            ("trials", self.trials.is_some()),
            ("m_shift", self.m_shift.is_some()),
            ("bump_radius", self.bump_radius.is_some()),
            ("alpha", self.alpha.is_some()),
            ("count", self.count.is_some()),
            ("radius", self.radius.is_some()),
            ("radii", self.radii.is_some()),
            ("points_per_radius", self.points_per_radius.is_some()),
            ("box_factor", self.box_factor.is_some()),
            ("record_timings", self.record_timings.is_some()),
            ("dense_check", self.dense_check.is_some()),
            ("full_box_check", self.full_box_check.is_some()),
            ("regime_radii", self.regime_radii.is_some()),
            ("window", self.window.is_some()),
            ("window_max", self.window_max.is_some()),
            ("amplitude", self.amplitude.is_some()),
        ];
        flags.iter().filter(|f| f.1).map(|f| f.0).collect()
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Configuration file as written by the user.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kernel: KernelParams,
    pub grid: Option<GridSection>,
    pub weight: Option<WeightSection>,
    pub solver: Option<SolverOptions>,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

/// Experiment-specific parameters after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    Seminorm { trials: usize },
    OperatorEval { bump_radius: f64, alpha: Option<f64> },
    Eigen,
    Dirichlet { radius: f64 },
    Spectrum { count: usize },
    Picone { trials: usize, m_shift: Option<f64> },
    DecayRegimes { alpha: f64, radii: Vec<f64> },
    DecayFit { window: (f64, f64) },
    BarrierCheck {
        window: (f64, f64),
        regime_radii: Vec<f64>,
        window_max: Option<f64>,
        amplitude: Option<f64>,
    },
    ScalingStudy { radii: Vec<f64>, options: StudyOptions },
    NonexistenceStudy { radii: Vec<f64>, options: StudyOptions, full_box_check: bool },
}

/// A configuration that passed every check; nothing heavy has run yet.
#[derive(Debug, Clone)]
pub struct ValidConfig {
    pub experiment: Experiment,
    pub kernel: KernelParams,
    pub grid: Option<GridSpec>,
    pub weight: Option<Weight>,
    pub solver: SolverOptions,
    pub study: Study,
    pub output: PathBuf,
    pub seed: u64,
    pub sha256: String,
}

/// Diagnostic anchored to a line of the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
    /// Budget violations map to their own exit code.
    pub budget: bool,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.path, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.path, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

struct Anchor<'a> {
    path: &'a str,
    text: &'a str,
}

impl Anchor<'_> {
    /// Line of the first occurrence of `"key"`, 1-based.
    fn line_of(&self, key: &str) -> Option<usize> {
        let needle = format!("\"{key}\"");
        self.text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.to_string(),
            line: self.line_of(key),
            column: None,
            message: format!("{key}: {}", message.into()),
            budget: false,
        }
    }

    fn wrap(&self, key: &str, e: Error) -> ConfigError {
        let budget = matches!(e, Error::BudgetExceeded { .. });
        ConfigError { budget, ..self.err(key, e.to_string()) }
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Parses and validates `text`; `path` only labels diagnostics.
pub fn parse_config(text: &str, path: &str) -> Result<ValidConfig, ConfigError> {
    let raw: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
        path: path.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        budget: false,
    })?;
    let at = Anchor { path, text };
    let exp = raw.experiment;
    let k = raw.kernel;

    let grid = match (exp.needs_grid(), raw.grid) {
        (true, None) => return Err(at.err("grid", format!("required by experiment {}", exp.name()))),
        (false, Some(_)) => {
            return Err(at.err("grid", format!("not used by experiment {}; the study derives its grids", exp.name())))
        }
        (true, Some(g)) => {
            if g.dim != k.dim() {
                return Err(at.err("dim", format!("grid has N={} but kernel has N={}", g.dim, k.dim())));
            }
            Some(GridSpec::new(g.dim, g.half_width, g.points_per_axis).map_err(|e| at.wrap("grid", e))?)
        }
        (false, None) => None,
    };
    let weight = match (exp.needs_weight(), raw.weight) {
        (true, None) => return Err(at.err("weight", format!("required by experiment {}", exp.name()))),
        (false, Some(_)) => return Err(at.err("weight", format!("not used by experiment {}", exp.name()))),
        (true, Some(w)) => Some(w.build().map_err(|e| at.wrap("weight", e))?),
        (false, None) => None,
    };
    if raw.solver.is_some() && !exp.uses_solver() {
        return Err(at.err("solver", format!("not used by experiment {}", exp.name())));
    }
    let mut solver = raw.solver.unwrap_or_default();
    if solver.seed != 0 && solver.seed != raw.seed {
        return Err(at.err("seed", "solver.seed conflicts with the top-level seed"));
    }
    solver.seed = raw.seed;
    solver.validate().map_err(|e| at.wrap("solver", e))?;

    let allowed = exp.study_keys();
    if let Some(bad) = raw.study.present().into_iter().find(|key| !allowed.contains(key)) {
        return Err(at.err(bad, format!("not a parameter of experiment {}", exp.name())));
    }
    let st = raw.study;
    let check_radii = |key: &str, rs: &[f64], min: f64| -> Result<(), ConfigError> {
        if rs.is_empty() || rs.iter().any(|&r| !(r >= min && r.is_finite())) {
            return Err(at.err(key, format!("needs a nonempty list of finite values >= {min}")));
        }
        Ok(())
    };
    let check_window = |w: [f64; 2]| -> Result<(f64, f64), ConfigError> {
        let half = grid.map(|g| g.half_width()).unwrap_or(f64::INFINITY);
        if !(w[0] > 0.0 && w[0] < w[1] && w[1] <= 0.8 * half) {
            return Err(at.err("window", format!("needs 0 < r_min < r_max <= 0.8 L = {}", 0.8 * half)));
        }
        Ok((w[0], w[1]))
    };
    let study_options = |exp_min: f64| -> Result<(Vec<f64>, StudyOptions), ConfigError> {
        let radii = st.radii.clone().ok_or_else(|| at.err("study", "radii are required"))?;
        check_radii("radii", &radii, exp_min)?;
        let mut o = StudyOptions {
            solver: solver.clone(),
            ..StudyOptions::default()
        };
        if let Some(n) = st.points_per_radius {
            o.points_per_radius = n;
        }
        if let Some(c) = st.box_factor {
            o.box_factor = c;
        }
        o.record_timings = st.record_timings.unwrap_or(false);
        o.dense_check = st.dense_check.unwrap_or(true);
        if o.points_per_radius == 0 {
            return Err(at.err("points_per_radius", "must be positive"));
        }
        if !(o.box_factor >= 2.0 && o.box_factor.is_finite()) {
            return Err(at.err("box_factor", "must be at least 2"));
        }
        for &r in &radii {
            o.grid_for(k.dim(), r).map_err(|e| at.wrap("points_per_radius", e))?;
        }
        Ok((radii, o))
    };

    let study = match exp {
        Experiment::Seminorm => Study::Seminorm { trials: st.trials.unwrap_or(20) },
        Experiment::OperatorEval => {
            let half = grid.unwrap().half_width();
            let bump_radius = st.bump_radius.unwrap_or(0.5 * half);
            if !positive(bump_radius) {
                return Err(at.err("bump_radius", "must be positive"));
            }
            if st.alpha.is_some_and(|a| !positive(a)) {
                return Err(at.err("alpha", "must be positive"));
            }
            Study::OperatorEval { bump_radius, alpha: st.alpha }
        }
        Experiment::Eigen => Study::Eigen,
        Experiment::Dirichlet => {
            let radius = st.radius.ok_or_else(|| at.err("study", "radius is required"))?;
            if !positive(radius) || 2.0 * radius > grid.unwrap().half_width() {
                return Err(at.err("radius", "needs 0 < R <= L/2"));
            }
            Study::Dirichlet { radius }
        }
        Experiment::Spectrum => {
            if k.p() != 2.0 {
                return Err(at.err("exponent_p", format!("spectrum requires p=2, got p={}", k.p())));
            }
            let m = grid.unwrap().len();
            if m > DENSE_BUDGET {
                return Err(at.wrap(
                    "grid",
                    Error::BudgetExceeded {
                        what: "dense oracle size",
                        needed: m,
                        limit: DENSE_BUDGET,
                    },
                ));
            }
            let count = st.count.unwrap_or(4);
            if count == 0 || count > m {
                return Err(at.err("count", format!("must lie in 1..={m}")));
            }
            Study::Spectrum { count }
        }
        Experiment::Picone => {
            if st.m_shift.is_some_and(|m| !positive(m)) {
                return Err(at.err("m_shift", "must be positive"));
            }
            Study::Picone {
                trials: st.trials.unwrap_or(100),
                m_shift: st.m_shift,
            }
        }
        Experiment::DecayRegimes => {
            let alpha = st.alpha.ok_or_else(|| at.err("study", "alpha is required"))?;
            if !positive(alpha) {
                return Err(at.err("alpha", "must be positive"));
            }
            let radii = st.regime_radii.clone().unwrap_or_else(|| default_radii(12));
            check_radii("regime_radii", &radii, 10.0)?;
            if radii.iter().any(|&r| r > 1e3) {
                return Err(at.err("regime_radii", "radii must lie in [10, 1000]"));
            }
            Study::DecayRegimes { alpha, radii }
        }
        Experiment::DecayFit => Study::DecayFit {
            window: check_window(st.window.ok_or_else(|| at.err("study", "window is required"))?)?,
        },
        Experiment::BarrierCheck => {
            let window = check_window(st.window.ok_or_else(|| at.err("study", "window is required"))?)?;
            let regime_radii = st.regime_radii.clone().unwrap_or_else(|| default_radii(12));
            check_radii("regime_radii", &regime_radii, 10.0)?;
            if st.amplitude.is_some_and(|a| !positive(a)) {
                return Err(at.err("amplitude", "must be positive"));
            }
            if st.window_max.is_some_and(|w| !positive(w)) {
                return Err(at.err("window_max", "must be positive"));
            }
            Study::BarrierCheck {
                window,
                regime_radii,
                window_max: st.window_max,
                amplitude: st.amplitude,
            }
        }
        Experiment::ScalingStudy => {
            let (radii, options) = study_options(1.0)?;
            Study::ScalingStudy { radii, options }
        }
        Experiment::NonexistenceStudy => {
            if k.sp() <= k.dim() as f64 {
                return Err(at.err("order_s", format!("nonexistence study needs sp > N, got sp={}", k.sp())));
            }
            let (radii, options) = study_options(f64::MIN_POSITIVE)?;
            Study::NonexistenceStudy {
                radii,
                options,
                full_box_check: st.full_box_check.unwrap_or(true),
            }
        }
    };

    Ok(ValidConfig {
        experiment: exp,
        kernel: k,
        grid,
        weight,
        solver,
        study,
        output: raw.output,
        seed: raw.seed,
        sha256: Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ValidConfig, ConfigError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: label.clone(),
        line: None,
        column: None,
        message: format!("cannot read configuration: {e}"),
        budget: false,
    })?;
    parse_config(&text, &label)
}
