//! Time integrals of the form `∫₀^∞ f(t) t^{-1-s/2} dt`.
//!
//! The integral is taken in `u = ln t`, where the integrand becomes
//! `f(eᵘ) e^{-su/2}`. Small times are covered decade by decade until the
//! contributions die out; large times run up to a horizon `T`, past which the
//! declared tail class supplies an analytic remainder.

use super::gk::{self, GkResult};
use super::{IntegralEstimate, Method, QuadConfig};
use crate::error::{invalid, Error, Result};

const LN10: f64 = std::f64::consts::LN_10;
/// Smallest time ever visited by the decade scan.
const T_FLOOR: f64 = 1e-300;

/// How `f(t) − L` approaches zero at large times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Approach {
    /// `|f(t) − L| ~ c t^{-α}`.
    Power(f64),
    /// `|f(t) − L| ≲ c e^{-λt}`.
    Exponential(f64),
}

/// Large-time behaviour of the integrand, declared by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    /// `|f(t)| ≤ |f(T)| e^{-rate (t − T)}` for `t ≥ T`.
    ExpDecay { rate: f64 },
    /// `f(t) → value` as `t → ∞`.
    Limit { value: f64, approach: Approach },
}

impl TailClass {
    /// Horizon used when the caller does not supply one.
    pub fn default_horizon(&self, s: f64, quad: &QuadConfig) -> f64 {
        let base = 4.0 * quad.t_split.max(1.0 / s);
        match self {
            TailClass::ExpDecay { rate } | TailClass::Limit { approach: Approach::Exponential(rate), .. } => {
                base.max(30.0 / rate)
            }
            TailClass::Limit { approach: Approach::Power(_), .. } => base,
        }
    }
}

/// `∫₀^∞ f(t) t^{-1-s/2} dt` with the default horizon.
pub fn integrate_time<F: Fn(f64) -> f64>(f: F, s: f64, quad: &QuadConfig, tail: TailClass) -> Result<IntegralEstimate> {
    let horizon = tail.default_horizon(s, quad);
    integrate_time_range(f, s, quad, tail, None, horizon)
}

/// `∫_{lo}^∞ f(t) t^{-1-s/2} dt` (with `lo = 0` when `None`), integrating
/// numerically up to `horizon` and analytically beyond.
pub fn integrate_time_range<F: Fn(f64) -> f64>(
    f: F,
    s: f64,
    quad: &QuadConfig,
    tail: TailClass,
    lo: Option<f64>,
    horizon: f64,
) -> Result<IntegralEstimate> {
    if !(s > 0.0 && s < 2.0) {
        return Err(invalid(format!("time integral needs s in (0, 2), got {s}")));
    }
    quad.validate()?;
    let t_split = quad.t_split;
    let horizon = horizon.max(t_split);
    let g = |u: f64| {
        let t = u.exp();
        f(t) * (-0.5 * s * u).exp()
    };
    let mut value_parts = Vec::new();
    let mut error = 0.0;
    let mut evals = 0u64;
    let mut fail: Option<String> = None;

    let mut run = |a: f64, b: f64, parts: &mut Vec<f64>, error: &mut f64| -> f64 {
        let r: GkResult = gk::adaptive(&g, a, b, quad.abs_tol * 1e-2, quad.rel_tol * 0.1, quad.max_subdiv);
        evals += r.evals as u64;
        if !r.converged && fail.is_none() {
            fail = Some(format!("time integral on [e^{a:.2}, e^{b:.2}] did not converge"));
        }
        parts.push(r.value);
        *error += r.error;
        r.value
    };

    let u_split = t_split.ln();
    let u_far = horizon.ln();

    match lo {
        Some(t0) => {
            if !(t0 > 0.0) {
                return Err(invalid("lower time limit must be positive"));
            }
            let u0 = t0.ln();
            if u0 < u_far {
                let mut a = u0;
                while a < u_far {
                    let b = (a + LN10).min(u_far);
                    run(a, b, &mut value_parts, &mut error);
                    a = b;
                }
            }
        }
        None => {
            // Head: decades below t_split until negligible.
            let mut b = u_split;
            let mut total = 0.0f64;
            let mut prev = f64::INFINITY;
            let mut k = 0;
            loop {
                let a = b - LN10;
                let seg = run(a, b, &mut value_parts, &mut error);
                total += seg;
                k += 1;
                let small = seg.abs() <= 1e-3 * quad.rel_tol * total.abs()
                    || (seg.abs() <= 1e-3 * quad.abs_tol && total.abs() <= quad.abs_tol);
                if k >= 3 && small && seg.abs() <= prev {
                    // remainder bounded by a geometric continuation of the last decade
                    error += 2.0 * seg.abs();
                    break;
                }
                prev = seg.abs();
                b = a;
                if b.exp() < T_FLOOR {
                    return Err(Error::Precision {
                        message: "time integrand does not decay as t → 0".into(),
                        achieved: seg.abs(),
                        partial: Some(total),
                    });
                }
            }
            // Middle: t_split .. horizon.
            let mut a = u_split;
            while a < u_far {
                let bb = (a + LN10).min(u_far);
                run(a, bb, &mut value_parts, &mut error);
                a = bb;
            }
        }
    }

    // Analytic tail beyond the horizon.
    let t_far = horizon.max(lo.unwrap_or(0.0));
    let f_far = f(t_far);
    let pow = t_far.powf(-0.5 * s);
    match tail {
        TailClass::ExpDecay { rate } => {
            error += f_far.abs() * pow / (t_far * rate);
        }
        TailClass::Limit { value: l, approach } => {
            value_parts.push(l * (2.0 / s) * pow);
            let rem = match approach {
                Approach::Power(alpha) => (f_far - l) * pow / (alpha + 0.5 * s),
                Approach::Exponential(lambda) => (f_far - l) * pow / (t_far * lambda),
            };
            value_parts.push(rem);
            error += 0.25 * rem.abs();
        }
    }

    let value = super::ordered_sum(&value_parts);
    if let Some(message) = fail {
        return Err(Error::Precision {
            message,
            achieved: error,
            partial: Some(value),
        });
    }
    Ok(IntegralEstimate {
        value,
        error_bound: error,
        method: Method::Adaptive,
        n_evals: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn constant_tail_from_one() {
        // ∫₁^∞ t^{-1.25} dt = 4
        let tail = TailClass::Limit { value: 1.0, approach: Approach::Exponential(1.0) };
        let r = integrate_time_range(|_| 1.0, 0.5, &quad(), tail, Some(1.0), 1.0).unwrap();
        assert_relative_eq!(r.value, 4.0, max_relative = 1e-8);
        let r = integrate_time_range(|_| 1.0, 0.5, &quad(), tail, Some(1.0), 100.0).unwrap();
        assert_relative_eq!(r.value, 4.0, max_relative = 1e-8);
    }

    #[test]
    fn incomplete_gamma_on_unit_interval() {
        // ∫₀¹ e^{-1/t} t^{-1.25} dt = Γ(1/4, 1) = 0.246255529193499 (mpmath)
        let q = quad();
        let r = integrate_time_range(
            |t| if t < 1.0 { (-1.0 / t).exp() } else { 0.0 },
            0.5,
            &q,
            TailClass::ExpDecay { rate: 1.0 },
            None,
            1.0,
        )
        .unwrap();
        assert_relative_eq!(r.value, 0.246255529193499, max_relative = 1e-9);
    }

    #[test]
    fn gamma_function_identity() {
        // ∫₀^∞ (1 − e^{-t}) t^{-1-s/2} dt = −Γ(−s/2) = Γ(1−s/2)/(s/2)
        for s in [0.2, 0.5, 1.0, 1.6] {
            let r = integrate_time(
                |t: f64| -(-t).exp_m1(),
                s,
                &quad(),
                TailClass::Limit { value: 1.0, approach: Approach::Exponential(1.0) },
            )
            .unwrap();
            let exact = statrs::function::gamma::gamma(1.0 - s / 2.0) / (s / 2.0);
            assert_relative_eq!(r.value, exact, max_relative = 1e-8);
            assert!(r.error_bound < 1e-6 * exact);
        }
    }

    #[test]
    fn euclidean_kernel_mellin_transform() {
        // ∫₀^∞ (4πt)^{-1/2} e^{-1/4t} t^{-1-s/2} dt = 4^{(1+s)/2} Γ((1+s)/2) / (4π)^{1/2}
        let s = 0.5;
        let f = |t: f64| (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-0.25 / t).exp();
        let tail = TailClass::Limit { value: 0.0, approach: Approach::Power(0.5) };
        let r = integrate_time_range(f, s, &quad(), tail, None, 1e6).unwrap();
        let exact = 4f64.powf(0.75) * statrs::function::gamma::gamma(0.75) / (4.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(r.value, exact, max_relative = 1e-8);
    }

    #[test]
    fn divergent_head_is_reported() {
        let tail = TailClass::ExpDecay { rate: 1.0 };
        let err = integrate_time(|_| 1.0, 0.5, &quad(), tail).unwrap_err();
        assert!(matches!(err, Error::Precision { .. }));
    }

    #[test]
    fn rejects_bad_order() {
        let tail = TailClass::ExpDecay { rate: 1.0 };
        assert!(integrate_time(|_| 0.0, 2.5, &quad(), tail).is_err());
    }
}
