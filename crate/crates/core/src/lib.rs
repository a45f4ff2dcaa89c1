//! Numerical laboratory for the weighted fractional p-Laplacian eigenproblem
//! `(-Δ_p)^s u = λ g |u|^{p-2} u` on `R^N`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decay;
pub mod eigen;
pub mod error;
pub mod nonlocal;
pub mod operator;
pub mod quadrature;
pub mod reduce;
pub mod scaling;

pub use error::{Error, Result};
