use crate::error::{Error, Result};
use crate::nonlocal::exterior::exterior_tails;
use crate::nonlocal::grid::{GridFunction, GridSpec};
use crate::nonlocal::kernel::{abs_pow, phi_p, KernelParams};
use crate::nonlocal::weight::Weight;
use crate::reduce::{pairwise_sum, par_map, TreeAccumulator};

/// Box×box and box×exterior contributions to a double integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormParts {
    pub box_box: f64,
    pub exterior: f64,
}

impl FormParts {
    pub fn total(&self) -> f64 {
        self.box_box + self.exterior
    }
}

/// Precomputed kernel data for one grid and one set of kernel parameters.
///
/// Holds `|h d|^{-(N+sp)}` for every absolute offset `d` and the exterior
/// tail at every cell. Building it is `O(M)` plus the tail quadratures;
/// every form evaluation is `O(M^2)`.
#[derive(Debug, Clone)]
pub struct Discretization {
    spec: GridSpec,
    kernel: KernelParams,
    offsets: Vec<f64>,
    tails: Vec<f64>,
    index: Vec<[usize; 3]>,
    strides: [usize; 3],
}

impl Discretization {
    pub fn new(spec: GridSpec, kernel: KernelParams) -> Result<Self> {
        if spec.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                kernel: kernel.dim(),
                grid: spec.dim(),
            });
        }
        let h = spec.spacing();
        let e = kernel.kernel_exponent();
        let offsets = (0..spec.len())
            .map(|f| {
                let d = spec.multi_index(f);
                let r2: f64 = d.iter().map(|&c| (c as f64 * h).powi(2)).sum();
                if f == 0 {
                    0.0
                } else {
                    r2.powf(-0.5 * e)
                }
            })
            .collect();
        let tails = exterior_tails(&spec, &kernel)?;
        let index = (0..spec.len()).map(|i| spec.multi_index(i)).collect();
        let m = spec.points_per_axis();
        let mut strides = [0usize; 3];
        let mut s = 1;
        for a in (0..spec.dim()).rev() {
            strides[a] = s;
            s *= m;
        }
        Ok(Self {
            spec,
            kernel,
            offsets,
            tails,
            index,
            strides,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Exterior tail `T(x_i)`.
    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    /// `|x_i - x_j|^{-(N+sp)}`, zero on the diagonal.
    #[inline]
    pub fn kernel_between(&self, i: usize, j: usize) -> f64 {
        self.offsets[self.offset_index(i, j)]
    }

    #[inline]
    pub(crate) fn offset_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.index[i], &self.index[j]);
        let mut f = 0;
        for axis in 0..self.spec.dim() {
            f += a[axis].abs_diff(b[axis]) * self.strides[axis];
        }
        f
    }

    #[inline]
    pub(crate) fn offset_kernel(&self, flat_offset: usize) -> f64 {
        self.offsets[flat_offset]
    }

    pub(crate) fn multi(&self, i: usize) -> &[usize; 3] {
        &self.index[i]
    }

    pub(crate) fn strides(&self) -> &[usize; 3] {
        &self.strides
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.spec() != &self.spec {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `Σ_{j>i} Φ(u_i - u_j)(φ_i - φ_j) K_ij` for one row.
    fn row(&self, u: &[f64], phi: &[f64], i: usize) -> f64 {
        let p = self.kernel.p();
        let mut acc = TreeAccumulator::new();
        let (ui, fi) = (u[i], phi[i]);
        if self.spec.dim() == 1 {
            for j in i + 1..u.len() {
                acc.add(phi_p(ui - u[j], p) * (fi - phi[j]) * self.offsets[j - i]);
            }
        } else {
            for j in i + 1..u.len() {
                acc.add(phi_p(ui - u[j], p) * (fi - phi[j]) * self.offsets[self.offset_index(i, j)]);
            }
        }
        acc.total()
    }

    /// Discrete weak form `∫∫ Φ(u(x)-u(y))(φ(x)-φ(y)) K dx dy` split into parts.
    pub fn form_parts(&self, u: &GridFunction, phi: &GridFunction) -> Result<FormParts> {
        self.check(u)?;
        self.check(phi)?;
        Ok(self.form_parts_raw(u.values(), phi.values()))
    }

    pub(crate) fn form_parts_raw(&self, u: &[f64], phi: &[f64]) -> FormParts {
        let p = self.kernel.p();
        let hn = self.spec.cell_volume();
        let rows = par_map(u.len(), |i| self.row(u, phi, i));
        let ext: Vec<f64> = (0..u.len())
            .map(|i| phi_p(u[i], p) * phi[i] * self.tails[i])
            .collect();
        FormParts {
            box_box: 2.0 * hn * hn * pairwise_sum(&rows),
            exterior: 2.0 * hn * pairwise_sum(&ext),
        }
    }

    pub fn nonlinear_form(&self, u: &GridFunction, phi: &GridFunction) -> Result<f64> {
        Ok(self.form_parts(u, phi)?.total())
    }

    /// `⟦u⟧_{s,p}^p`; the same code path as `nonlinear_form(u, u)`.
    pub fn seminorm(&self, u: &GridFunction) -> Result<f64> {
        self.nonlinear_form(u, u)
    }

    pub(crate) fn seminorm_raw(&self, u: &[f64]) -> f64 {
        self.form_parts_raw(u, u).total()
    }

    /// Reference ordered double sum `Σ_{i≠j}` evaluated naively; `O(M^2)`
    /// with no pairing, for testing.
    pub fn seminorm_ordered(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        let p = self.kernel.p();
        let hn = self.spec.cell_volume();
        let v = u.values();
        let mut bb = 0.0;
        let mut ext = 0.0;
        for i in 0..v.len() {
            for j in 0..v.len() {
                if i != j {
                    bb += abs_pow(v[i] - v[j], p) * self.kernel_between(i, j);
                }
            }
            ext += abs_pow(v[i], p) * self.tails[i];
        }
        Ok(hn * hn * bb + 2.0 * hn * ext)
    }
}

fn check_dims(u: &GridFunction, k: &KernelParams) -> Result<()> {
    if u.spec().dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            kernel: k.dim(),
            grid: u.spec().dim(),
        });
    }
    Ok(())
}

/// Discrete Gagliardo seminorm `⟦u⟧_{s,p}^p`.
pub fn gagliardo_seminorm_p(u: &GridFunction, k: &KernelParams) -> Result<f64> {
    check_dims(u, k)?;
    Discretization::new(*u.spec(), *k)?.seminorm(u)
}

/// Discrete weak form of the operator tested against `phi`.
pub fn nonlinear_form(u: &GridFunction, phi: &GridFunction, k: &KernelParams) -> Result<f64> {
    check_dims(u, k)?;
    u.check_same_grid(phi)?;
    Discretization::new(*u.spec(), *k)?.nonlinear_form(u, phi)
}

/// `Σ_i g(x_i)|u_i|^p h^N`.
pub fn weighted_lp_integral(u: &GridFunction, g: &Weight, k: &KernelParams) -> Result<f64> {
    check_dims(u, k)?;
    let gv = g.on_grid(u.spec());
    Ok(weighted_lp_raw(u.values(), &gv, k.p(), u.spec().cell_volume()))
}

pub(crate) fn weighted_lp_raw(u: &[f64], g: &[f64], p: f64, hn: f64) -> f64 {
    let terms: Vec<f64> = u.iter().zip(g).map(|(&ui, &gi)| gi * abs_pow(ui, p)).collect();
    pairwise_sum(&terms) * hn
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat(spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| (1.0 - x[0].abs()).max(0.0))
    }

    #[test]
    fn zero_function_has_zero_energy() {
        let spec = GridSpec::new(2, 1.0, 6).unwrap();
        let k = KernelParams::new(2, 0.5, 1.5).unwrap();
        assert_eq!(gagliardo_seminorm_p(&GridFunction::zeros(spec), &k).unwrap(), 0.0);
    }

    #[test]
    fn form_on_diagonal_is_seminorm_bitwise() {
        let spec = GridSpec::new(2, 1.0, 8).unwrap();
        let k = KernelParams::new(2, 0.3, 2.7).unwrap();
        let u = GridFunction::from_fn(spec, |x| (x[0] + 2.0 * x[1]).sin() * (1.0 - x[0] * x[0]));
        let d = Discretization::new(spec, k).unwrap();
        assert_eq!(d.seminorm(&u).unwrap().to_bits(), d.nonlinear_form(&u, &u).unwrap().to_bits());
    }

    #[test]
    fn pair_sum_matches_ordered_sum() {
        for (n, m) in [(1, 12), (2, 5), (3, 3)] {
            let spec = GridSpec::new(n, 1.5, m).unwrap();
            let k = KernelParams::new(n, 0.4, 1.8).unwrap();
            let u = GridFunction::from_fn(spec, |x| x.iter().map(|c| (3.0 * c).cos()).sum());
            let d = Discretization::new(spec, k).unwrap();
            let a = d.seminorm(&u).unwrap();
            let b = d.seminorm_ordered(&u).unwrap();
            assert!((a - b).abs() <= 1e-13 * a, "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn form_is_linear_and_symmetric_at_p2() {
        let spec = GridSpec::new(1, 2.0, 40).unwrap();
        let k = KernelParams::new(1, 0.6, 2.0).unwrap();
        let d = Discretization::new(spec, k).unwrap();
        let u = GridFunction::from_fn(spec, |x| (-x[0] * x[0]).exp());
        let f1 = GridFunction::from_fn(spec, |x| x[0].sin());
        let f2 = GridFunction::from_fn(spec, |x| x[0] * x[0]);
        let combo = f1.combine(2.5, &f2, -0.7).unwrap();
        let lhs = d.nonlinear_form(&u, &combo).unwrap();
        let rhs = 2.5 * d.nonlinear_form(&u, &f1).unwrap() - 0.7 * d.nonlinear_form(&u, &f2).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
        let a = d.nonlinear_form(&u, &f2).unwrap();
        let b = d.nonlinear_form(&f2, &u).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn hat_seminorm_approaches_continuum_value() {
        // ⟦hat⟧^2 for N=1, s=1/2: 8 ln 2 (Fourier side: ∫ sin^4 t / t^3 = ln 2).
        let exact = 8.0 * std::f64::consts::LN_2;
        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        let mut errs = Vec::new();
        for m in [64, 128, 256] {
            let u = hat(GridSpec::new(1, 2.0, m).unwrap());
            errs.push((gagliardo_seminorm_p(&u, &k).unwrap() - exact).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        assert!(errs[2] < 2e-2 * exact, "{errs:?}");
    }

    #[test]
    fn weighted_integral_with_unit_weight() {
        let spec = GridSpec::new(1, 2.0, 64).unwrap();
        let k = KernelParams::new(1, 0.5, 3.0).unwrap();
        let u = hat(spec);
        let plain: f64 = u.values().iter().map(|v| v.powi(3)).sum::<f64>() * spec.cell_volume();
        let w = weighted_lp_integral(&u, &Weight::unit(), &k).unwrap();
        assert!((w - plain).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = GridSpec::new(1, 1.0, 4).unwrap();
        let k = KernelParams::new(2, 0.5, 2.0).unwrap();
        let u = GridFunction::zeros(spec);
        assert!(matches!(gagliardo_seminorm_p(&u, &k), Err(Error::DimensionMismatch { .. })));
    }
}
