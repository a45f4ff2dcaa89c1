//! Principal eigenvalues by constrained Rayleigh-quotient descent, the dense
//! `p = 2` reference spectrum and the Picone defect.

pub mod oracle;
pub mod picone;
pub mod rayleigh;
pub mod solver;

pub use oracle::{linear_spectrum_oracle, linear_spectrum_oracle_in, LinearMode, DENSE_BUDGET};
pub use picone::{default_m_shift, picone_defect, picone_defect_with};
pub use rayleigh::{rayleigh_gradient, rayleigh_quotient, Branch, WeightedProblem};
pub use solver::{dirichlet_mu1, minimize_rayleigh, minimize_rayleigh_in_ball, EigenPair, Init, SolverOptions};
