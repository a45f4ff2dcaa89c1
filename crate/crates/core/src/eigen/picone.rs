use crate::error::{invalid, Error, Result};
use crate::nonlocal::{Discretization, GridFunction, KernelParams};

/// Default regularization `1e-6 · max u`.
pub fn default_m_shift(u: &GridFunction) -> f64 {
    1e-6 * u.values().iter().fold(0.0_f64, |m, &v| m.max(v))
}

/// `⟦v⟧^p - form(u, v^p / (u + m)^{p-1})`, nonnegative by the discrete
/// Picone inequality for `u, v >= 0`.
pub fn picone_defect(u: &GridFunction, v: &GridFunction, k: &KernelParams, m_shift: f64) -> Result<f64> {
    u.check_same_grid(v)?;
    let disc = Discretization::new(*u.spec(), *k)?;
    picone_defect_with(&disc, u, v, m_shift)
}

/// [`picone_defect`] on a prebuilt discretization.
pub fn picone_defect_with(disc: &Discretization, u: &GridFunction, v: &GridFunction, m_shift: f64) -> Result<f64> {
    u.check_same_grid(v)?;
    if !(m_shift > 0.0 && m_shift.is_finite()) {
        return Err(invalid(format!("m_shift={m_shift} must be positive")));
    }
    if let Some(i) = v.values().iter().position(|&x| x < 0.0) {
        return Err(Error::NonPositive(format!("v is negative at cell {i}")));
    }
    if let Some(i) = u.values().iter().position(|&x| x < 0.0) {
        return Err(Error::NonPositive(format!("u is negative at cell {i}")));
    }
    let p = disc.kernel().p();
    let w = GridFunction::new(
        *u.spec(),
        u.values()
            .iter()
            .zip(v.values())
            .map(|(&ui, &vi)| vi.powf(p) / (ui + m_shift).powf(p - 1.0))
            .collect(),
    )?;
    Ok(disc.seminorm(v)? - disc.nonlinear_form(u, &w)?)
}
