//! Integration engines with explicit error accounting.
//!
//! - [`time`]: Mellin-type time integrals `∫₀^∞ f(t) t^{-1-s/2} dt`.
//! - [`region`]: integrals of a function over a finite-measure region.
//! - [`pair`]: double integrals over `A × B` of kernels singular on the diagonal.
//! - [`gk`]: the adaptive Gauss–Kronrod engine underneath.
//! - [`mc`]: seeded, stratified Monte Carlo with counter-based streams.

pub mod gk;
pub mod mc;
pub mod pair;
pub mod region;
pub mod time;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use pair::{integrate_pair, PairKernel};
pub use region::integrate_region;
pub use time::{integrate_time, integrate_time_range, Approach, TailClass};

/// Tolerances and budgets shared by all integrators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Split point of time integrals: `[0, t_split]` and `[t_split, ∞)`.
    pub t_split: f64,
    /// Bisection budget of each adaptive call.
    pub max_subdiv: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Pairs closer than this are excluded from pair integrals (and accounted
    /// for in the error bound).
    pub diag_cutoff: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            t_split: 1.0,
            max_subdiv: 60,
            mc_samples: 200_000,
            seed: 0,
            diag_cutoff: 1e-3,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(invalid("tolerances must be positive"));
        }
        if !positive(self.t_split) {
            return Err(invalid("t_split must be positive"));
        }
        if !positive(self.diag_cutoff) {
            return Err(invalid("diag_cutoff must be positive"));
        }
        if self.max_subdiv == 0 {
            return Err(invalid("max_subdiv must be at least 1"));
        }
        if self.mc_samples < 1000 {
            return Err(invalid("mc_samples must be at least 1000"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_diag_cutoff(mut self, eps: f64) -> Self {
        self.diag_cutoff = eps;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adaptive,
    Mc,
}

/// A quadrature value with a bound on its error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
    pub n_evals: u64,
}

impl IntegralEstimate {
    pub fn exact(value: f64) -> Self {
        IntegralEstimate {
            value,
            error_bound: 0.0,
            method: Method::Adaptive,
            n_evals: 0,
        }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    /// Sum of two estimates; error bounds add, and the method is `Mc` if
    /// either part is.
    pub fn plus(self, other: IntegralEstimate) -> Self {
        IntegralEstimate {
            value: self.value + other.value,
            error_bound: self.error_bound + other.error_bound,
            method: if self.method == Method::Mc || other.method == Method::Mc {
                Method::Mc
            } else {
                Method::Adaptive
            },
            n_evals: self.n_evals + other.n_evals,
        }
    }

    pub fn minus(self, other: IntegralEstimate) -> Self {
        self.plus(other.scaled(-1.0))
    }

    pub fn scaled(self, c: f64) -> Self {
        IntegralEstimate {
            value: c * self.value,
            error_bound: c.abs() * self.error_bound,
            ..self
        }
    }

    pub fn with_extra_error(mut self, e: f64) -> Self {
        self.error_bound += e.abs();
        self
    }

    /// Whether `target` lies within the error bound (times `k`).
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.error_bound
    }
}

/// Pairwise sum in a fixed order, independent of how the terms were produced.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            ordered_sum(a) + ordered_sum(b)
        }
    }
}

pub(crate) fn sum_estimates(parts: &[IntegralEstimate]) -> IntegralEstimate {
    let values: Vec<f64> = parts.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = parts.iter().map(|p| p.error_bound).collect();
    IntegralEstimate {
        value: ordered_sum(&values),
        error_bound: ordered_sum(&errors),
        method: if parts.iter().any(|p| p.method == Method::Mc) {
            Method::Mc
        } else {
            Method::Adaptive
        },
        n_evals: parts.iter().map(|p| p.n_evals).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        QuadConfig::default().validate().unwrap();
        let bad = QuadConfig {
            mc_samples: 10,
            ..QuadConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ordered_sum_is_order_fixed() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(ordered_sum(&v), ordered_sum(&v));
        assert_eq!(ordered_sum(&[]), 0.0);
    }
}
