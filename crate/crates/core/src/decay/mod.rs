//! Power-like barrier profiles, the decay regimes of their fractional
//! p-Laplacian, the barrier comparison and tail-exponent fits.

pub mod barrier;
pub mod fit;
pub mod profile;
pub mod regimes;

pub use barrier::{barrier_comparison_check, BarrierOptions, BarrierReport};
pub use fit::{fit_decay_exponent, linear_fit, radial_average, DecayFit, DecaySource, BOUNDARY_GUARD};
pub use profile::{build_power_profile, DerivativeBounds, JunctionCheck, PowerProfile};
pub use regimes::{classify, default_radii, predicted_slope, verify_decay_regimes, DecayRegime, RegimeReport};
