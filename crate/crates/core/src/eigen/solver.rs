use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::rayleigh::{Branch, WeightedProblem};
use crate::error::{invalid, Error, Result};
use crate::nonlocal::kernel::phi_p;
use crate::nonlocal::{Discretization, GridFunction, GridSpec, KernelParams, Weight};
use crate::reduce::pairwise_sum;

/// Starting point of the descent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Seeded random positive values on a centred sub-bump.
    #[default]
    RandomPositive,
    /// The deterministic sub-bump itself.
    Bump,
    #[serde(skip)]
    Provided(GridFunction),
}

/// Options of the projected gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Step tried when no Barzilai–Borwein estimate exists yet.
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Stop when the relative decrease stays below this for `patience` steps.
    pub tolerance: f64,
    pub patience: usize,
    pub seed: u64,
    pub init: Init,
    pub branch: Branch,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            initial_step: 1e-2,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            tolerance: 1e-12,
            patience: 20,
            seed: 0,
            init: Init::RandomPositive,
            branch: Branch::Positive,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be positive"));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(invalid("initial_step must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid("shrink factor must lie in (0,1)"));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(invalid("sufficient_decrease must lie in (0,1)"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.patience == 0 {
            return Err(invalid("patience must be positive"));
        }
        Ok(())
    }
}

/// Eigenvalue estimate with its normalized eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub eigenfunction: GridFunction,
    /// `∫ g |u|^p`, `±1` up to rounding.
    pub constraint_value: f64,
    /// `h^N max_i |A_i - λ g_i Φ_p(u_i)|`: the weak-form defect probed with
    /// every cell indicator.
    pub residual: f64,
    pub iterations: usize,
    /// `(iteration, ⟦u⟧^p / |∫ g|u|^p|)` after every accepted step.
    pub trace: Vec<(usize, f64)>,
    pub converged: bool,
    pub branch: Branch,
}

const MAX_BACKTRACKS: usize = 60;

struct Iterate {
    u: Vec<f64>,
    f: f64,
    grad: Vec<f64>,
}

pub(crate) struct Descent<'a> {
    pb: &'a WeightedProblem,
    active: Option<Vec<bool>>,
    sign: f64,
}

impl<'a> Descent<'a> {
    fn is_active(&self, i: usize) -> bool {
        self.active.as_ref().is_none_or(|m| m[i])
    }

    /// Rescales `u` to `|∫ g|u|^p| = 1`; `None` if the constraint has the wrong sign.
    fn normalize(&self, mut u: Vec<f64>) -> Option<(Vec<f64>, f64)> {
        let w = self.pb.constraint_raw(&u) * self.sign;
        if !(w > 0.0 && w.is_finite()) {
            return None;
        }
        let c = w.powf(-1.0 / self.pb.disc.kernel().p());
        u.iter_mut().for_each(|v| *v *= c);
        let s = self.pb.disc.seminorm_raw(&u);
        let w = self.pb.constraint_raw(&u) * self.sign;
        Some((u, s / w))
    }

    fn gradient(&self, u: &[f64], f: f64) -> Vec<f64> {
        let w = self.pb.constraint_raw(u);
        let a = self.pb.disc.apply_raw(u);
        // Gradient of S/|W| = sign · ∇(S/W); S = f·|W|.
        let s = f * w.abs();
        let hn = self.pb.disc.spec().cell_volume();
        self.pb
            .gradient_from(u, &a, s, w, self.active.as_deref())
            .into_iter()
            .map(|gi| self.sign * gi / hn)
            .collect()
    }

    fn at(&self, u: Vec<f64>) -> Option<Iterate> {
        let (u, f) = self.normalize(u)?;
        let grad = self.gradient(&u, f);
        Some(Iterate { u, f, grad })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>())
}

fn initial_guess(spec: &GridSpec, opts: &SolverOptions, radius: Option<f64>) -> Vec<f64> {
    let support = radius.unwrap_or(spec.half_width()).min(spec.half_width()) * 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..spec.len())
        .map(|i| {
            let r = spec.radius(i);
            let bump = (1.0 - (r / support).powi(2)).max(0.0);
            match opts.init {
                Init::RandomPositive => bump * rng.random_range(0.5..1.0),
                _ => bump,
            }
        })
        .collect()
}

/// Projected gradient descent on `⟦u⟧^p / |∫ g|u|^p|` over the chosen branch.
pub(crate) fn descend(pb: &WeightedProblem, opts: &SolverOptions, radius: Option<f64>) -> Result<EigenPair> {
    opts.validate()?;
    let spec = *pb.disc.spec();
    let sign = opts.branch.sign();
    let active = radius.map(|r| (0..spec.len()).map(|i| spec.radius(i) < r).collect::<Vec<bool>>());
    let solver = Descent { pb, active, sign };

    let mut u0 = match &opts.init {
        Init::Provided(f) => {
            if f.spec() != &spec {
                return Err(Error::GridMismatch);
            }
            f.values().to_vec()
        }
        _ => initial_guess(&spec, opts, radius),
    };
    for (i, v) in u0.iter_mut().enumerate() {
        if !solver.is_active(i) {
            *v = 0.0;
        }
    }
    let start = match solver.at(u0) {
        Some(it) => it,
        None => {
            // Fall back to the cells where the weight has the requested sign.
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
            let u: Vec<f64> = (0..spec.len())
                .map(|i| {
                    if solver.is_active(i) && sign * pb.g[i] > 0.0 {
                        rng.random_range(0.5..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            if u.iter().all(|&v| v == 0.0) {
                return Err(Error::EmptyConstraintSet(format!(
                    "no grid cell where the weight has the {:?} sign",
                    opts.branch
                )));
            }
            solver
                .at(u)
                .ok_or_else(|| Error::EmptyConstraintSet("fallback start is degenerate".into()))?
        }
    };

    let mut cur = start;
    let mut trace = vec![(0, cur.f)];
    let mut step = opts.initial_step;
    let mut calm = 0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iterations {
        iterations = it;
        let g2 = dot(&cur.grad, &cur.grad);
        if g2 == 0.0 {
            converged = true;
            break;
        }
        let mut alpha = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = cur.u.iter().zip(&cur.grad).map(|(u, g)| u - alpha * g).collect();
            if let Some((u, f)) = solver.normalize(trial) {
                if f <= cur.f - opts.sufficient_decrease * alpha * g2 {
                    accepted = Some((u, f));
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        let Some((u, f)) = accepted else {
            // No descent left above rounding: a stationary point.
            if alpha * g2 <= 64.0 * f64::EPSILON * cur.f.abs() || calm > 0 {
                converged = true;
                break;
            }
            return Err(Error::StepRuleFailure { iteration: it });
        };
        let grad = solver.gradient(&u, f);
        // Barzilai–Borwein step for the next iteration.
        let s: Vec<f64> = u.iter().zip(&cur.u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 { dot(&s, &s) / sy } else { alpha * 2.0 };
        let decrease = (cur.f - f) / f.abs().max(f64::MIN_POSITIVE);
        cur = Iterate { u, f, grad };
        trace.push((it, cur.f));
        if decrease < opts.tolerance {
            calm += 1;
            if calm >= opts.patience {
                converged = true;
                break;
            }
        } else {
            calm = 0;
        }
    }

    finish(&solver, cur.u, trace, iterations, converged, opts.branch)
}

fn finish(
    solver: &Descent<'_>,
    u: Vec<f64>,
    trace: Vec<(usize, f64)>,
    iterations: usize,
    converged: bool,
    branch: Branch,
) -> Result<EigenPair> {
    let pb = solver.pb;
    let spec = *pb.disc.spec();
    let abs: Vec<f64> = u.iter().map(|v| v.abs()).collect();
    let (u, f) = solver
        .normalize(abs)
        .ok_or_else(|| Error::DegenerateConstraint("final iterate lost its constraint sign".into()))?;
    let lambda = solver.sign * f;
    let p = pb.disc.kernel().p();
    let a = pb.disc.apply_raw(&u);
    let hn = spec.cell_volume();
    let residual = (0..u.len())
        .filter(|&i| solver.is_active(i))
        .map(|i| (a[i] - lambda * pb.g[i] * phi_p(u[i], p)).abs())
        .fold(0.0, f64::max)
        * hn;
    let constraint_value = pb.constraint_raw(&u);
    Ok(EigenPair {
        lambda,
        eigenfunction: GridFunction::new(spec, u)?,
        constraint_value,
        residual,
        iterations,
        trace,
        converged,
        branch,
    })
}

/// Principal eigenvalue on the box by constrained Rayleigh-quotient descent.
pub fn minimize_rayleigh(g: &Weight, k: &KernelParams, spec: &GridSpec, opts: &SolverOptions) -> Result<EigenPair> {
    opts.validate()?;
    let pb = WeightedProblem::new(Discretization::new(*spec, *k)?, g);
    descend(&pb, opts, None)
}

/// Same descent over grid functions vanishing on `|x| >= radius`.
pub fn minimize_rayleigh_in_ball(
    g: &Weight,
    k: &KernelParams,
    spec: &GridSpec,
    radius: f64,
    opts: &SolverOptions,
) -> Result<EigenPair> {
    opts.validate()?;
    if !(radius > 0.0) {
        return Err(invalid(format!("ball radius {radius} must be positive")));
    }
    let pb = WeightedProblem::new(Discretization::new(*spec, *k)?, g);
    descend(&pb, opts, Some(radius))
}

/// Dirichlet eigenvalue `μ_1(B_R, g)`.
///
/// Needs `[-2R, 2R]^N` inside the box and at least one cell of `B_R` where
/// `g > 0`.
pub fn dirichlet_mu1(radius: f64, g: &Weight, k: &KernelParams, spec: &GridSpec, opts: &SolverOptions) -> Result<EigenPair> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("ball radius {radius} must be positive")));
    }
    if spec.half_width() < 2.0 * radius {
        return Err(invalid(format!(
            "box half-width {} leaves less than R={radius} margin around B_R",
            spec.half_width()
        )));
    }
    let gv = g.on_grid(spec);
    if !(0..spec.len()).any(|i| spec.radius(i) < radius && gv[i] > 0.0) {
        return Err(Error::NotAdmissible(format!("g <= 0 on every grid cell of B_{radius}")));
    }
    let opts = SolverOptions {
        branch: Branch::Positive,
        ..opts.clone()
    };
    minimize_rayleigh_in_ball(g, k, spec, radius, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (GridSpec, KernelParams) {
        (GridSpec::new(1, 4.0, 64).unwrap(), KernelParams::new(1, 0.5, 2.0).unwrap())
    }

    #[test]
    fn trace_is_monotone_and_constraint_kept() {
        let (spec, _) = small();
        let k = KernelParams::new(1, 0.5, 1.5).unwrap();
        let g = Weight::indicator_minus(1.0, 0.0, 1.0).unwrap();
        let e = minimize_rayleigh(&g, &k, &spec, &SolverOptions::default()).unwrap();
        assert!(e.converged);
        assert!(e.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!((e.constraint_value - 1.0).abs() <= 1e-12);
        assert!(e.eigenfunction.values().iter().all(|&v| v >= 0.0));
        assert!(e.lambda > 0.0);
    }

    #[test]
    fn weight_scaling_rescales_lambda() {
        let (spec, k) = small();
        let g = Weight::gaussian_bump(1.0, 0.0).unwrap();
        let a = minimize_rayleigh(&g, &k, &spec, &SolverOptions::default()).unwrap();
        let b = minimize_rayleigh(&g.scaled(4.0).unwrap(), &k, &spec, &SolverOptions::default()).unwrap();
        assert!((b.lambda * 4.0 / a.lambda - 1.0).abs() <= 1e-8, "{} {}", a.lambda, b.lambda);
    }

    #[test]
    fn branches_swap_under_negation() {
        let (spec, k) = small();
        let g = Weight::gaussian_bump(1.0, 0.3).unwrap();
        let neg = g.sampled(&spec, -1.0);
        let opts = SolverOptions::default();
        let plus_of_neg = minimize_rayleigh(&neg, &k, &spec, &opts).unwrap();
        let minus = minimize_rayleigh(
            &g,
            &k,
            &spec,
            &SolverOptions {
                branch: Branch::Negative,
                ..opts
            },
        )
        .unwrap();
        assert!(minus.lambda < 0.0);
        assert!((plus_of_neg.lambda + minus.lambda).abs() <= 1e-8 * minus.lambda.abs());
    }

    #[test]
    fn empty_constraint_set_is_reported() {
        let (spec, k) = small();
        let g = Weight::indicator_minus(0.0, 1.0, 1.0).unwrap();
        let err = minimize_rayleigh(&g, &k, &spec, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyConstraintSet(_)));
    }

    #[test]
    fn dirichlet_domain_monotonicity() {
        let spec = GridSpec::new(1, 4.0, 128).unwrap();
        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        let opts = SolverOptions::default();
        let a = dirichlet_mu1(1.0, &Weight::unit(), &k, &spec, &opts).unwrap();
        let b = dirichlet_mu1(2.0, &Weight::unit(), &k, &spec, &opts).unwrap();
        assert!(a.lambda >= b.lambda);
        let out = spec.len() / 2 + 40;
        assert_eq!(a.eigenfunction.values()[out], 0.0);
    }

    #[test]
    fn rejects_inadmissible_weight() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        let g = Weight::ring(0.0, 1.0, 0.5, 1.0).unwrap();
        let err = dirichlet_mu1(1.0, &g, &k, &spec, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotAdmissible(_)));
    }
}
