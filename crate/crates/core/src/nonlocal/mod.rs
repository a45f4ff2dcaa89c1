//! Kernel parameters, grids, weights, radial profiles and the quadrature of
//! the Gagliardo seminorm and the nonlinear form.

pub mod angular;
pub mod exterior;
pub mod grid;
pub mod kernel;
pub mod profile;
pub mod seminorm;
pub mod weight;

pub use angular::angular_kernel;
pub use exterior::{exterior_tail, exterior_tails, inscribed_ball_tail};
pub use grid::{point_budget, Extension, GridFunction, GridSpec, BUDGET_ENV, DEFAULT_POINT_BUDGET};
pub use kernel::{KernelParams, Regime};
pub use profile::{PowerTail, RadialProfile};
pub use seminorm::{gagliardo_seminorm_p, nonlinear_form, weighted_lp_integral, Discretization, FormParts};
pub use weight::{sphere_area, Weight};
