use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Position of `s·p` relative to the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Dimension `N`, fractional order `s` and exponent `p` of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct KernelParams {
    dim_n: usize,
    order_s: f64,
    exponent_p: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    dim_n: usize,
    order_s: f64,
    exponent_p: f64,
}

impl TryFrom<RawKernel> for KernelParams {
    type Error = crate::Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        KernelParams::new(raw.dim_n, raw.order_s, raw.exponent_p)
    }
}

impl From<KernelParams> for RawKernel {
    fn from(k: KernelParams) -> Self {
        RawKernel {
            dim_n: k.dim_n,
            order_s: k.order_s,
            exponent_p: k.exponent_p,
        }
    }
}

impl KernelParams {
    pub fn new(dim_n: usize, order_s: f64, exponent_p: f64) -> Result<Self> {
        if !(1..=3).contains(&dim_n) {
            return Err(invalid(format!("dimension N={dim_n} must be 1, 2 or 3")));
        }
        if !(order_s > 0.0 && order_s < 1.0) {
            return Err(invalid(format!("order s={order_s} must lie in (0,1)")));
        }
        if !(exponent_p > 1.0 && exponent_p.is_finite()) {
            return Err(invalid(format!("exponent p={exponent_p} must be a finite real > 1")));
        }
        Ok(Self {
            dim_n,
            order_s,
            exponent_p,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim_n
    }

    pub fn s(&self) -> f64 {
        self.order_s
    }

    pub fn p(&self) -> f64 {
        self.exponent_p
    }

    pub fn sp(&self) -> f64 {
        self.order_s * self.exponent_p
    }

    /// Kernel exponent `N + sp` in `|x-y|^{-(N+sp)}`.
    pub fn kernel_exponent(&self) -> f64 {
        self.dim_n as f64 + self.sp()
    }

    pub fn regime(&self) -> Regime {
        let n = self.dim_n as f64;
        let sp = self.sp();
        if (sp - n).abs() <= 1e-12 * n {
            Regime::Critical
        } else if sp < n {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        }
    }

    /// Fractional Sobolev exponent `pN/(N-sp)`; `None` when `sp >= N`.
    pub fn critical_exponent(&self) -> Option<f64> {
        match self.regime() {
            Regime::Subcritical => {
                let n = self.dim_n as f64;
                Some(self.exponent_p * n / (n - self.sp()))
            }
            _ => None,
        }
    }

    /// Algebraic decay rate `(N+sp)/(p-1)` of positive principal eigenfunctions.
    pub fn decay_exponent(&self) -> f64 {
        self.kernel_exponent() / (self.exponent_p - 1.0)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.dim_n, self.order_s, p)
    }

    /// `Φ_p(t) = |t|^{p-2} t`.
    #[inline]
    pub fn phi(&self, t: f64) -> f64 {
        phi_p(t, self.exponent_p)
    }

    /// `|t|^p`.
    #[inline]
    pub fn abs_pow(&self, t: f64) -> f64 {
        abs_pow(t, self.exponent_p)
    }
}

#[inline]
pub(crate) fn phi_p(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if t == 0.0 {
        0.0
    } else if p == 3.0 {
        t.abs() * t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

#[inline]
pub(crate) fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else if p == 3.0 {
        let a = t.abs();
        a * a * a
    } else {
        t.abs().powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let k = KernelParams::new(3, 0.5, 2.0).unwrap();
        assert_eq!(k.sp(), 1.0);
        assert_eq!(k.regime(), Regime::Subcritical);
        assert!((k.critical_exponent().unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(k.decay_exponent(), 4.0);

        let k = KernelParams::new(1, 0.5, 2.0).unwrap();
        assert_eq!(k.regime(), Regime::Critical);
        assert_eq!(k.critical_exponent(), None);

        let k = KernelParams::new(1, 0.75, 2.0).unwrap();
        assert_eq!(k.regime(), Regime::Supercritical);
        assert_eq!(k.critical_exponent(), None);
        assert_eq!(k.decay_exponent(), 2.5);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(KernelParams::new(1, 0.0, 2.0).is_err());
        assert!(KernelParams::new(1, 1.0, 2.0).is_err());
        assert!(KernelParams::new(1, 0.5, 1.0).is_err());
        assert!(KernelParams::new(0, 0.5, 2.0).is_err());
        assert!(KernelParams::new(4, 0.5, 2.0).is_err());
        assert!(KernelParams::new(1, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn strict_deserialization() {
        let ok: KernelParams = serde_json::from_str(r#"{"dim_n":1,"order_s":0.5,"exponent_p":3}"#).unwrap();
        assert_eq!(ok.p(), 3.0);
        assert!(serde_json::from_str::<KernelParams>(r#"{"dim_n":1,"order_s":0.5,"exponent_p":3,"x":1}"#).is_err());
        assert!(serde_json::from_str::<KernelParams>(r#"{"dim_n":1,"order_s":1.5,"exponent_p":3}"#).is_err());
    }

    #[test]
    fn phi_zero_is_finite_for_small_p() {
        assert_eq!(phi_p(0.0, 1.5), 0.0);
        assert_eq!(phi_p(-2.0, 3.0), -4.0);
        assert!((phi_p(4.0, 1.5) - 2.0).abs() < 1e-15);
    }
}
