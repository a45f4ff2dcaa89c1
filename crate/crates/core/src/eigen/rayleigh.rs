use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlocal::kernel::phi_p;
use crate::nonlocal::seminorm::weighted_lp_raw;
use crate::nonlocal::{Discretization, GridFunction, KernelParams, Weight};

/// Sign of the constraint `∫ g |u|^p = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// A discretization paired with weight values on the same grid.
#[derive(Debug, Clone)]
pub struct WeightedProblem {
    pub(crate) disc: Discretization,
    pub(crate) g: Vec<f64>,
}

impl WeightedProblem {
    pub fn new(disc: Discretization, weight: &Weight) -> Self {
        let g = weight.on_grid(disc.spec());
        Self { disc, g }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn weight_values(&self) -> &[f64] {
        &self.g
    }

    pub(crate) fn constraint_raw(&self, u: &[f64]) -> f64 {
        let spec = self.disc.spec();
        weighted_lp_raw(u, &self.g, self.disc.kernel().p(), spec.cell_volume())
    }

    /// `∫ g |u|^p`.
    pub fn constraint(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        Ok(self.constraint_raw(u.values()))
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.spec() != self.disc.spec() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `⟦u⟧^p / ∫ g|u|^p`; negative when the constraint integral is.
    pub fn rayleigh_quotient(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        let w = self.constraint_raw(u.values());
        if w == 0.0 {
            return Err(Error::DegenerateConstraint("∫ g|u|^p vanishes".into()));
        }
        Ok(self.disc.seminorm_raw(u.values()) / w)
    }

    /// Quotient on a requested branch; errors when `u` lies on the other one.
    pub fn rayleigh_quotient_on(&self, u: &GridFunction, branch: Branch) -> Result<f64> {
        let q = self.rayleigh_quotient(u)?;
        let w = self.constraint_raw(u.values());
        if w * branch.sign() <= 0.0 {
            return Err(Error::DegenerateConstraint(format!(
                "∫ g|u|^p = {w:.6e} has the wrong sign for the {branch:?} branch"
            )));
        }
        Ok(q)
    }

    /// `(p/W)[A(u) - RQ·g·Φ_p(u)] h^N` with `W = ∫ g|u|^p`.
    pub fn rayleigh_gradient(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let v = u.values();
        let w = self.constraint_raw(v);
        if w == 0.0 {
            return Err(Error::DegenerateConstraint("∫ g|u|^p vanishes".into()));
        }
        let s = self.disc.seminorm_raw(v);
        let a = self.disc.apply_raw(v);
        let grad = self.gradient_from(v, &a, s, w, None);
        GridFunction::new(*u.spec(), grad)
    }

    /// Gradient of `S/W` from precomputed pieces, zeroed off `active`.
    pub(crate) fn gradient_from(&self, u: &[f64], a: &[f64], s: f64, w: f64, active: Option<&[bool]>) -> Vec<f64> {
        let p = self.disc.kernel().p();
        let hn = self.disc.spec().cell_volume();
        let rq = s / w;
        let scale = p / w * hn;
        (0..u.len())
            .map(|i| {
                if active.is_some_and(|m| !m[i]) {
                    0.0
                } else {
                    scale * (a[i] - rq * self.g[i] * phi_p(u[i], p))
                }
            })
            .collect()
    }
}

/// `⟦u⟧^p / ∫ g|u|^p`.
pub fn rayleigh_quotient(u: &GridFunction, g: &Weight, k: &KernelParams) -> Result<f64> {
    WeightedProblem::new(Discretization::new(*u.spec(), *k)?, g).rayleigh_quotient(u)
}

/// Grid gradient of [`rayleigh_quotient`].
pub fn rayleigh_gradient(u: &GridFunction, g: &Weight, k: &KernelParams) -> Result<GridFunction> {
    WeightedProblem::new(Discretization::new(*u.spec(), *k)?, g).rayleigh_gradient(u)
}
