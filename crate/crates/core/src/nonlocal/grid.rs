use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default ceiling on the number of grid points `M = m^N`.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 16;

/// Environment variable overriding [`DEFAULT_POINT_BUDGET`].
pub const BUDGET_ENV: &str = "FRACEIG_BUDGET";

/// Current point budget, honouring `FRACEIG_BUDGET`.
pub fn point_budget() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_POINT_BUDGET)
}

/// Uniform cell-centred grid on the box `[-L, L]^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.dim, raw.half_width, raw.points_per_axis)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            dim: g.dim,
            half_width: g.half_width,
            points_per_axis: g.points_per_axis,
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::with_budget(dim, half_width, points_per_axis, point_budget())
    }

    pub fn with_budget(dim: usize, half_width: f64, points_per_axis: usize, budget: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("grid dimension {dim} must be 1, 2 or 3")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid(format!("half width L={half_width} must be positive and finite")));
        }
        if points_per_axis == 0 {
            return Err(invalid("points per axis must be positive"));
        }
        let total = (points_per_axis as u128).pow(dim as u32);
        if total > budget as u128 {
            return Err(Error::BudgetExceeded {
                what: "grid points",
                needed: usize::try_from(total).unwrap_or(usize::MAX),
                limit: budget,
            });
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of points `M`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Row-major multi-index (last axis fastest); unused axes are 0.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        let mut out = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % m;
            rest /= m;
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let m = self.points_per_axis;
        (0..self.dim).fold(0, |acc, axis| acc * m + idx[axis])
    }

    /// Cell-centre coordinate along one axis: `-L + (i + 1/2) h`.
    pub fn axis_coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.axis_coordinate(idx[axis]);
        }
        x
    }

    pub fn radius(&self, flat: usize) -> f64 {
        let x = self.point(flat);
        x.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Euclidean distance from cell centre `flat` to the box boundary.
    pub fn distance_to_boundary(&self, flat: usize) -> f64 {
        let x = self.point(flat);
        (0..self.dim)
            .map(|a| self.half_width - x[a].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Same grid with the box scaled by `factor` (matched points per axis).
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.half_width * factor, self.points_per_axis)
    }
}

/// Tag for the extension convention; only zero extension exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    #[default]
    ZeroOutsideBox,
}

/// Finitely supported grid function, identically zero outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(invalid(format!(
                "grid function has {} values, grid has {} points",
                values.len(),
                spec.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value {} at index {i}", values[i])));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    /// Samples `f` at the cell centres. Panics if `f` returns a non-finite value.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(spec: GridSpec, f: F) -> Self {
        let values: Vec<f64> = (0..spec.len())
            .map(|i| {
                let x = spec.point(i);
                f(&x[..spec.dim()])
            })
            .collect();
        Self::new(spec, values).expect("sampled function must be finite")
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn extension(&self) -> Extension {
        Extension::ZeroOutsideBox
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.spec, self.values.iter().map(|v| t * v).collect()).expect("scaling keeps values finite")
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect()).expect("map must keep values finite")
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Shifts values by whole cells along each axis; cells shifted in from
    /// outside are zero.
    pub fn shifted(&self, offset: [isize; 3]) -> Self {
        let spec = self.spec;
        let m = spec.points_per_axis() as isize;
        let mut out = vec![0.0; spec.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let idx = spec.multi_index(i);
            let mut target = [0usize; 3];
            let mut inside = true;
            for a in 0..spec.dim() {
                let t = idx[a] as isize + offset[a];
                if t < 0 || t >= m {
                    inside = false;
                    break;
                }
                target[a] = t as usize;
            }
            if inside {
                out[spec.flat_index(target)] = v;
            }
        }
        Self { spec, values: out }
    }
}
