use crate::error::{invalid, Error, Result};
use crate::nonlocal::kernel::KernelParams;
use crate::quadrature::{integrate, Tolerance};
use std::f64::consts::PI;

const ANGULAR_TOL: Tolerance = Tolerance::new(1e-300, 1e-12);

/// Spherical average of the kernel, `J(r, ρ) = ∫_{S^{N-1}} |r e_1 - ρ ω|^{-(N+sp)} dω`.
pub fn angular_kernel(r: f64, rho: f64, k: &KernelParams) -> Result<f64> {
    if !(r > 0.0 && rho > 0.0 && r.is_finite() && rho.is_finite()) {
        return Err(invalid(format!("radii r={r}, rho={rho} must be positive and finite")));
    }
    if r == rho {
        return Err(invalid(format!("angular kernel is singular at r = rho = {r}")));
    }
    let n = k.dim();
    let e = k.kernel_exponent();
    if n == 1 {
        return Ok((r - rho).abs().powf(-e) + (r + rho).powf(-e));
    }
    let gap = (r - rho) * (r - rho);
    let prod = 4.0 * r * rho;
    let half = -0.5 * e;
    let (measure, sin_pow) = if n == 2 { (2.0, 0) } else { (2.0 * PI, 1) };
    let f = |th: f64| {
        let s = (0.5 * th).sin();
        let base = (gap + prod * s * s).powf(half);
        if sin_pow == 0 {
            base
        } else {
            base * th.sin()
        }
    };
    // The integrand peaks within θ_c ~ |r - ρ| / sqrt(rρ) of the pole.
    let theta_c = 2.0 * ((r - rho).abs() / prod.sqrt()).min(1.0).asin();
    let mut breaks = Vec::new();
    let mut b = theta_c;
    while b < PI {
        breaks.push(b);
        b *= 4.0;
    }
    let q = integrate(f, 0.0, PI, &breaks, ANGULAR_TOL);
    if !q.converged {
        return Err(Error::Quadrature(format!("angular kernel at r={r}, rho={rho}")));
    }
    Ok(measure * q.value)
}
