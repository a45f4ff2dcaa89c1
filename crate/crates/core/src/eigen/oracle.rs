//! Dense generalized eigensolver for `p = 2`, used as a reference for the
//! descent solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::nonlocal::{Discretization, GridFunction, GridSpec, KernelParams, Weight};

/// Largest system the dense oracle will assemble.
pub const DENSE_BUDGET: usize = 4096;

/// One generalized eigenpair `A v = λ B v` with `v^T B v = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMode {
    pub lambda: f64,
    pub vector: GridFunction,
    /// `‖A v - λ B v‖_∞ / ‖A v‖_∞`.
    pub relative_residual: f64,
}

/// Seminorm matrix `A` and weight diagonal `B` restricted to `cells`.
fn assemble(disc: &Discretization, g: &[f64], cells: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    let hn = disc.spec().cell_volume();
    let n = cells.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let full = disc.spec().len();
    for (r, &i) in cells.iter().enumerate() {
        let mut diag = 0.0;
        for j in 0..full {
            if j != i {
                diag += disc.kernel_between(i, j);
            }
        }
        a[(r, r)] = 2.0 * hn * hn * diag + 2.0 * hn * disc.tails()[i];
        for (c, &j) in cells.iter().enumerate() {
            if c != r {
                a[(r, c)] = -2.0 * hn * hn * disc.kernel_between(i, j);
            }
        }
    }
    let b = cells.iter().map(|&i| g[i] * hn).collect();
    (a, b)
}

/// Lowest `count` positive generalized eigenvalues of the discrete `p = 2`
/// problem, optionally restricted to cells with `|x| < radius`.
pub fn linear_spectrum_oracle_in(
    g: &Weight,
    k: &KernelParams,
    spec: &GridSpec,
    count: usize,
    radius: Option<f64>,
) -> Result<Vec<LinearMode>> {
    if k.p() != 2.0 {
        return Err(invalid(format!("spectrum requires p=2, got p={}", k.p())));
    }
    let cells: Vec<usize> = (0..spec.len())
        .filter(|&i| radius.is_none_or(|r| spec.radius(i) < r))
        .collect();
    if cells.len() > DENSE_BUDGET {
        return Err(Error::BudgetExceeded {
            what: "dense oracle size",
            needed: cells.len(),
            limit: DENSE_BUDGET,
        });
    }
    let gv = g.on_grid(spec);
    if cells.iter().all(|&i| gv[i] <= 0.0) {
        return Err(Error::NotAdmissible("weight is <= 0 on every cell".into()));
    }
    let disc = Discretization::new(*spec, *k)?;
    let (a, b) = assemble(&disc, &gv, &cells);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("seminorm matrix is not positive definite".into()))?;
    let l = chol.l();
    let n = cells.len();
    // C = L^{-1} B L^{-T}; eigenvalues μ = 1/λ.
    let mut linv_b = DMatrix::<f64>::zeros(n, n);
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    for c in 0..n {
        for r in 0..n {
            linv_b[(r, c)] = linv[(r, c)] * b[c];
        }
    }
    let mut cmat = &linv_b * linv.transpose();
    cmat = (&cmat + cmat.transpose()) * 0.5;
    let eig = cmat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    order.truncate(count);

    let lt = l.transpose();
    let bvec = DVector::from_vec(b);
    let mut modes = Vec::with_capacity(order.len());
    for idx in order {
        let mu = eig.eigenvalues[idx];
        let w = eig.eigenvectors.column(idx).into_owned();
        let mut v = lt
            .solve_upper_triangular(&w)
            .ok_or_else(|| Error::Singular("triangular solve".into()))?
            / mu.sqrt();
        if v.sum() < 0.0 {
            v = -v;
        }
        let lambda = 1.0 / mu;
        let av = &a * &v;
        let bv = bvec.component_mul(&v);
        let res = (&av - bv * lambda).amax() / av.amax();
        let mut full = vec![0.0; spec.len()];
        for (r, &i) in cells.iter().enumerate() {
            full[i] = v[r];
        }
        modes.push(LinearMode {
            lambda,
            vector: GridFunction::new(*spec, full)?,
            relative_residual: res,
        });
    }
    Ok(modes)
}

/// Lowest `count` positive eigenvalues on the whole box.
pub fn linear_spectrum_oracle(g: &Weight, k: &KernelParams, spec: &GridSpec, count: usize) -> Result<Vec<LinearMode>> {
    linear_spectrum_oracle_in(g, k, spec, count, None)
}
