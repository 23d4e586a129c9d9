//! Heat kernels of the model manifolds and semigroup quantities built on them.
//!
//! All kernels are densities with respect to the model measure; on Gaussian
//! space that is γ, not Lebesgue measure.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::models::{section, ManifoldModel, ModelKind, Point, Region};
use crate::quadrature::gk;
use crate::quadrature::{region::integrate_region, Approach, IntegralEstimate, Method, QuadConfig, TailClass};

/// Below this rescaled time the S² kernel switches to its short-time form.
const SPHERE_SHORT_TIME: f64 = 1e-4;
const SPHERE_MAX_TERMS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelEval {
    pub value: f64,
    pub truncation_error: f64,
}

impl HeatKernelEval {
    fn exact(value: f64) -> Self {
        HeatKernelEval {
            value,
            truncation_error: 0.0,
        }
    }
}

/// `H(x, y, t)` with truncation below `tol` where a series is involved.
pub fn heat_kernel(model: &ManifoldModel, x: &Point, y: &Point, t: f64, tol: f64) -> Result<HeatKernelEval> {
    model.check_point(x)?;
    model.check_point(y)?;
    check_time(t)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    kernel_raw(model, &x.0, &y.0, t, tol)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(())
}

pub(crate) fn kernel_raw(model: &ManifoldModel, x: &[f64], y: &[f64], t: f64, tol: f64) -> Result<HeatKernelEval> {
    match model.kind() {
        ModelKind::FlatTorus { lengths } => {
            let mut value = 1.0;
            let mut rel = 0.0;
            for (i, l) in lengths.iter().enumerate() {
                let h = periodic_1d(crate::models::wrap_centered(x[i] - y[i], *l), *l, t, tol);
                value *= h.value;
                rel += h.truncation_error / h.value.max(f64::MIN_POSITIVE);
            }
            Ok(HeatKernelEval {
                value,
                truncation_error: value * rel,
            })
        }
        ModelKind::GaussianSpace { .. } => Ok(HeatKernelEval::exact(mehler(x, y, t))),
        _ => radial_kernel(model, model.dist_unchecked(x, y), t, tol),
    }
}

/// The kernel as a function of distance, for isotropic models.
pub fn radial_kernel(model: &ManifoldModel, r: f64, t: f64, tol: f64) -> Result<HeatKernelEval> {
    check_time(t)?;
    match model.kind() {
        ModelKind::Euclidean { n } => Ok(HeatKernelEval::exact(euclidean(*n, r, t))),
        ModelKind::FlatTorus { lengths } if lengths.len() == 1 => Ok(periodic_1d(r, lengths[0], t, tol)),
        ModelKind::Sphere { n: 1, radius } => Ok(periodic_1d(r, 2.0 * PI * radius, t, tol)),
        ModelKind::Sphere { radius, .. } => sphere2(r, *radius, t, tol),
        ModelKind::Hyperbolic3 => Ok(HeatKernelEval::exact(hyperbolic3(r, t))),
        _ => Err(invalid(format!("{} has no radial heat kernel", model.label()))),
    }
}

pub(crate) fn euclidean(n: usize, r: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-(n as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// Heat kernel of the circle of length `l` at separation `d`.
pub(crate) fn periodic_1d(d: f64, l: f64, t: f64, tol: f64) -> HeatKernelEval {
    let t_theta = l * l / (4.0 * PI);
    let tol = tol.clamp(1e-300, 0.5);
    if t <= t_theta {
        let pre = (4.0 * PI * t).powf(-0.5);
        let kmax = ((4.0 * t * (1.0 / tol).ln()).sqrt() / l).ceil() as i64 + 2;
        let mut terms: Vec<f64> = (-kmax..=kmax)
            .map(|k| {
                let z = d + k as f64 * l;
                pre * (-z * z / (4.0 * t)).exp()
            })
            .collect();
        terms.sort_by(f64::total_cmp);
        let value: f64 = terms.iter().sum();
        // first omitted image is at distance ≥ (kmax − 1/2)·l
        let z = (kmax as f64 - 0.5) * l;
        let q = (-z * l / (2.0 * t)).exp();
        let err = 2.0 * pre * (-z * z / (4.0 * t)).exp() / (1.0 - q).max(0.5);
        HeatKernelEval {
            value,
            truncation_error: err,
        }
    } else {
        let w = 2.0 * PI / l;
        let mut sum = 0.0;
        let mut terms = Vec::new();
        let mut k = 1usize;
        loop {
            let lam = (w * k as f64).powi(2);
            let damp = (-lam * t).exp();
            if damp < tol * 1e-3 {
                break;
            }
            terms.push(2.0 * damp * (w * k as f64 * d).cos());
            k += 1;
        }
        for v in terms.iter().rev() {
            sum += v;
        }
        let lam = (w * k as f64).powi(2);
        let q = (-(2.0 * k as f64 + 1.0) * w * w * t).exp();
        let err = 2.0 * (-lam * t).exp() / (1.0 - q).max(0.5) / l;
        HeatKernelEval {
            value: (1.0 + sum) / l,
            truncation_error: err,
        }
    }
}

/// Heat kernel of the round sphere S²(R) at geodesic distance `d`.
pub(crate) fn sphere2(d: f64, radius: f64, t: f64, tol: f64) -> Result<HeatKernelEval> {
    let tau = t / (radius * radius);
    let psi = (d / radius).clamp(0.0, PI);
    let short = || {
        let ratio = if psi < 1e-8 { 1.0 } else { psi / psi.sin() };
        let value = (4.0 * PI * t).recip() * ratio.sqrt() * (-d * d / (4.0 * t)).exp() * (1.0 + tau / 3.0);
        HeatKernelEval {
            value,
            truncation_error: value * (tau * psi * psi + tau * tau),
        }
    };
    if tau < SPHERE_SHORT_TIME {
        return Ok(short());
    }
    let tol = tol.clamp(1e-300, 0.5);
    let lmax = (((1.0 / tol).ln() / tau).sqrt().ceil() as usize + 10).min(SPHERE_MAX_TERMS);
    let x = psi.cos();
    let (mut p_prev, mut p_cur) = (1.0, x);
    let mut sum = 1.0;
    let mut mass = 1.0;
    for l in 1..=lmax {
        let lf = l as f64;
        let term = (2.0 * lf + 1.0) * p_cur * (-lf * (lf + 1.0) * tau).exp();
        sum += term;
        mass += term.abs();
        let p_next = ((2.0 * lf + 1.0) * x * p_cur - lf * p_prev) / (lf + 1.0);
        p_prev = p_cur;
        p_cur = p_next;
    }
    let norm = 4.0 * PI * radius * radius;
    // Far from the diagonal at small τ the series cancels down to rounding
    // noise; the short-time form is then far more accurate in absolute terms.
    let noise = 1e-15 * mass / norm;
    if tau < 0.1 {
        let st = short();
        if st.value < 100.0 * noise {
            return Ok(HeatKernelEval {
                value: st.value,
                truncation_error: st.truncation_error.max(st.value * tau),
            });
        }
    }
    let lf = lmax as f64 + 1.0;
    let err = (-lf * (lf + 1.0) * tau).exp() * (1.0 + 1.0 / tau) / norm;
    if err > tol.max(1e-15 * sum.abs() / norm) && lmax == SPHERE_MAX_TERMS {
        return Err(Error::Precision {
            message: format!("Legendre series of S² not converged at t = {t:.3e}; use the short-time form"),
            achieved: err,
            partial: Some(sum / norm),
        });
    }
    Ok(HeatKernelEval {
        value: sum / norm,
        truncation_error: err,
    })
}

/// `H(r, t)·|S_r|`; on H³ the product is formed in log space since both
/// factors leave the floating-point range separately.
pub(crate) fn kernel_on_sphere(model: &ManifoldModel, r: f64, t: f64, tol: f64) -> Result<f64> {
    if let ModelKind::Hyperbolic3 = model.kind() {
        // (4πt)^{-3/2} · 4π ρ sinh ρ · e^{-t-ρ²/4t}
        let log_sinh = if r < 20.0 { r.sinh().ln() } else { r - std::f64::consts::LN_2 + (-(-2.0 * r).exp()).ln_1p() };
        let v = -1.5 * (4.0 * PI * t).ln() + (4.0 * PI * r).ln() + log_sinh - t - r * r / (4.0 * t);
        return Ok(v.exp());
    }
    Ok(radial_kernel(model, r, t, tol)?.value * model.sphere_area(r))
}

/// `(4πt)^{-3/2} (ρ / sinh ρ) e^{-t - ρ²/4t}`, evaluated in log space.
pub(crate) fn hyperbolic3(rho: f64, t: f64) -> f64 {
    let log_ratio = if rho < 1e-4 {
        -rho * rho / 6.0
    } else {
        // ln(ρ / sinh ρ) = ln ρ − ρ − ln((1 − e^{−2ρ})/2)
        rho.ln() - rho - (-(-2.0 * rho).exp_m1() / 2.0).ln()
    };
    (-1.5 * (4.0 * PI * t).ln() + log_ratio - t - rho * rho / (4.0 * t)).exp()
}

/// Mehler kernel with respect to the standard Gaussian measure.
pub(crate) fn mehler(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len() as f64;
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let dxy: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let one_minus = -(-2.0 * t).exp_m1();
    // e^{-2t}(|x|²+|y|²) − 2e^{-t}⟨x,y⟩ = e^{-t}(|x−y|² + (e^{-t}−1)(|x|²+|y|²))
    let num = (-t).exp() * (dxy + (-t).exp_m1() * (xx + yy));
    one_minus.powf(-n / 2.0) * (-num / (2.0 * one_minus)).exp()
}

/// Large-time behaviour of `t ↦ H(x, y, t)` on the model.
pub fn tail_class(model: &ManifoldModel) -> TailClass {
    match model.kind() {
        ModelKind::Euclidean { n } => TailClass::Limit {
            value: 0.0,
            approach: Approach::Power(*n as f64 / 2.0),
        },
        ModelKind::Hyperbolic3 => TailClass::Limit {
            value: 0.0,
            approach: Approach::Exponential(1.0),
        },
        _ => TailClass::Limit {
            value: 1.0 / model.volume_class().finite().expect("finite volume"),
            approach: Approach::Exponential(spectral_gap(model).expect("compact or Gaussian model")),
        },
    }
}

/// First nonzero eigenvalue of `−Δ` (of the Ornstein–Uhlenbeck operator on Gaussian space).
pub fn spectral_gap(model: &ManifoldModel) -> Option<f64> {
    match model.kind() {
        ModelKind::FlatTorus { lengths } => {
            let lmax = lengths.iter().cloned().fold(0.0, f64::max);
            Some((2.0 * PI / lmax).powi(2))
        }
        ModelKind::Sphere { n: 1, radius } => Some(1.0 / (radius * radius)),
        ModelKind::Sphere { radius, .. } => Some(2.0 / (radius * radius)),
        ModelKind::GaussianSpace { .. } => Some(1.0),
        _ => None,
    }
}

/// Time horizon beyond which `t ↦ H(x, y, t)` follows its declared tail,
/// for points at distance `d` (or the largest relevant distance).
pub fn time_horizon(model: &ManifoldModel, d: f64, s: f64, quad: &QuadConfig) -> f64 {
    let base = 4.0 * quad.t_split.max(1.0 / s);
    match model.kind() {
        ModelKind::Euclidean { .. } => base.max(1e6 * d * d),
        ModelKind::Hyperbolic3 => base.max(40.0 + 4.0 * d),
        ModelKind::GaussianSpace { .. } => base.max(40.0),
        _ => base.max(30.0 / spectral_gap(model).unwrap_or(1.0)),
    }
}

/// `𝓜(t, p) = ∫_M H(x, p, t) dμ(x)`.
pub fn heat_mass(model: &ManifoldModel, p: &Point, t: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    semigroup_indicator(model, &Region::FullSpace, p, t, quad)
}

/// `e^{tΔ}χ_A(p) = ∫_A H(x, p, t) dμ(x)`.
pub fn semigroup_indicator(
    model: &ManifoldModel,
    region: &Region,
    p: &Point,
    t: f64,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    model.check_point(p)?;
    check_time(t)?;
    quad.validate()?;
    crate::models::region_check(model, region)?;
    match model.kind() {
        ModelKind::FlatTorus { lengths } if lengths.len() > 1 => torus_product(model, lengths, region, &p.0, t, quad),
        ModelKind::GaussianSpace { n } => gaussian_indicator(model, *n, region, &p.0, t, quad),
        _ => shell_indicator(model, region, &p.0, t, quad),
    }
}

/// Radial integration over geodesic spheres about `p` using exact sections.
fn shell_indicator(model: &ManifoldModel, region: &Region, p: &[f64], t: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    let tol = quad.abs_tol * 1e-3;
    let sq = t.sqrt();
    let r_max = match model.kind() {
        ModelKind::Euclidean { .. } => 80.0 * sq,
        ModelKind::Hyperbolic3 => 4.0 * t + 80.0 * sq + 10.0,
        _ => model.diameter().expect("compact"),
    };
    let r_max = match model.diameter() {
        Some(d) => r_max.min(d),
        None => r_max,
    };
    let mut breaks = vec![0.0, r_max];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        breaks.push(k * sq);
    }
    if matches!(model.kind(), ModelKind::Hyperbolic3) {
        breaks.push(2.0 * t);
        breaks.push(4.0 * t);
    }
    breaks.extend(region.critical_radii(model, p));
    breaks.retain(|r| *r >= 0.0 && *r <= r_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut trunc = 0.0f64;
    let mut failure = None;
    let integrand = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let sec = match section(model, region, p, r) {
            Ok(s) => s.fraction(),
            Err(_) => f64::NAN,
        };
        if sec == 0.0 {
            return 0.0;
        }
        match kernel_on_sphere(model, r, t, tol) {
            Ok(v) => v * sec,
            Err(_) => f64::NAN,
        }
    };
    // Probe once for unsupported sections.
    if let Err(e) = section(model, region, p, breaks[breaks.len() - 1].max(1e-9) * 0.5) {
        return Err(e);
    }
    let r = gk::adaptive_points(&integrand, &breaks, quad.abs_tol, quad.rel_tol, quad.max_subdiv * 4);
    if !r.value.is_finite() {
        failure = Some("non-finite heat kernel values".to_string());
    }
    // Kernel truncation: bounded by tol times the region measure.
    if let Ok(m) = crate::models::region_measure(model, region) {
        if m.is_finite() {
            trunc = tol * m;
        }
    }
    // Euclidean and hyperbolic tails beyond r_max are below e^{-1600}.
    if let Some(message) = failure {
        return Err(Error::Precision {
            message,
            achieved: f64::INFINITY,
            partial: None,
        });
    }
    if !r.converged {
        return Err(Error::Precision {
            message: "radial semigroup quadrature did not converge".into(),
            achieved: r.error,
            partial: Some(r.value),
        });
    }
    Ok(IntegralEstimate {
        value: r.value,
        error_bound: r.error + trunc,
        method: Method::Adaptive,
        n_evals: r.evals as u64,
    })
}

/// Arc boxes (and the full torus) factor over the axes.
fn torus_product(
    model: &ManifoldModel,
    lengths: &[f64],
    region: &Region,
    p: &[f64],
    t: f64,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    let intervals: Vec<[f64; 2]> = match region {
        Region::FullSpace => lengths.iter().map(|l| [0.0, *l]).collect(),
        Region::Arc { intervals } => intervals.clone(),
        other => {
            let p = p.to_vec();
            return integrate_region(
                model,
                other,
                |x: &[f64]| kernel_raw(model, x, &p, t, quad.abs_tol * 1e-3).map(|h| h.value).unwrap_or(f64::NAN),
                quad,
            );
        }
    };
    let mut value = 1.0;
    let mut rel = 0.0;
    let mut evals = 0u64;
    for (i, ([a, b], l)) in intervals.iter().zip(lengths).enumerate() {
        let axis = ManifoldModel::flat_torus(vec![*l])?;
        let est = shell_indicator(&axis, &Region::arc(*a, *b), &[p[i]], t, quad)?;
        value *= est.value;
        rel += est.error_bound / est.value.abs().max(f64::MIN_POSITIVE);
        evals += est.n_evals;
    }
    Ok(IntegralEstimate {
        value,
        error_bound: value.abs() * rel,
        method: Method::Adaptive,
        n_evals: evals,
    })
}

fn gaussian_indicator(
    model: &ManifoldModel,
    n: usize,
    region: &Region,
    p: &[f64],
    t: f64,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    // x ↦ H(x, p, t) γ(x) is the normal density with mean e^{-t}p and variance 1 − e^{-2t}.
    let sigma = (-(-2.0 * t).exp_m1()).sqrt();
    let line = |iv: &crate::models::intervals::IntervalSet, pi: f64| {
        let m = (-t).exp() * pi;
        let lo = m - 40.0 * sigma;
        let hi = m + 40.0 * sigma;
        let f = |x: f64| mehler(&[x], &[pi], t) * (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let mut total = 0.0;
        let mut err = 0.0;
        let mut evals = 0;
        let mut converged = true;
        for &(a, b) in iv.pieces() {
            let (a, b) = (a.max(lo), b.min(hi));
            if b > a {
                let mut pts = vec![a, b];
                for k in -8..=8 {
                    let v = m + k as f64 * sigma;
                    if v > a && v < b {
                        pts.push(v);
                    }
                }
                pts.sort_by(f64::total_cmp);
                let r = gk::adaptive_points(&f, &pts, quad.abs_tol, quad.rel_tol, quad.max_subdiv * 4);
                total += r.value;
                err += r.error;
                evals += r.evals;
                converged &= r.converged;
            }
        }
        (total, err, evals, converged)
    };
    let axes: Option<Vec<crate::models::intervals::IntervalSet>> = if n == 1 {
        Some(vec![region.to_intervals(model)?])
    } else if region.is_full() {
        Some(vec![crate::models::intervals::IntervalSet::full(None); n])
    } else {
        None
    };
    match axes {
        Some(axes) => {
            let mut value = 1.0;
            let mut rel = 0.0;
            let mut evals = 0u64;
            for (i, iv) in axes.iter().enumerate() {
                let (v, e, ev, ok) = line(iv, p[i]);
                if !ok {
                    return Err(Error::Precision {
                        message: "Gaussian semigroup quadrature did not converge".into(),
                        achieved: e,
                        partial: Some(v),
                    });
                }
                value *= v;
                rel += e / v.abs().max(f64::MIN_POSITIVE);
                evals += ev as u64;
            }
            Ok(IntegralEstimate {
                value,
                error_bound: value.abs() * rel + quad.abs_tol,
                method: Method::Adaptive,
                n_evals: evals,
            })
        }
        None => {
            let p = p.to_vec();
            integrate_region(model, region, |x: &[f64]| mehler(x, &p, t), quad)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_on_diagonal() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let h = heat_kernel(&m, &Point::from([0.3]), &Point::from([0.3]), 1.0, 1e-12).unwrap();
        assert_relative_eq!(h.value, 0.28209479177387814, epsilon = 1e-15);
    }

    #[test]
    fn hyperbolic_closed_form() {
        // (4π)^{-3/2} / sinh(1) · e^{-1.25}; mpmath gives 0.00547274077637340
        assert_relative_eq!(hyperbolic3(1.0, 1.0), 0.00547274077637340, max_relative = 1e-13);
        assert_relative_eq!(hyperbolic3(0.0, 1.0), (4.0 * PI).powf(-1.5) * (-1.0f64).exp(), max_relative = 1e-14);
        // log-space evaluation stays finite far out
        assert!(hyperbolic3(800.0, 100.0) > 0.0 || hyperbolic3(800.0, 100.0) == 0.0);
        assert!(hyperbolic3(50.0, 30.0).is_finite());
    }

    #[test]
    fn torus_long_time_limit() {
        let m = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let h = heat_kernel(&m, &Point::from([0.1]), &Point::from([2.0]), 100.0, 1e-14).unwrap();
        assert!((h.value - 1.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn theta_duality_at_the_switch() {
        let l = 2.0 * PI;
        let t_theta = l * l / (4.0 * PI);
        for d in [0.0, 0.7, 2.0, 3.1] {
            let below = periodic_1d(d, l, t_theta * (1.0 - 1e-12), 1e-15);
            let above = periodic_1d(d, l, t_theta * (1.0 + 1e-12), 1e-15);
            assert_relative_eq!(below.value, above.value, max_relative = 1e-10);
        }
        // deep in either regime against the other representation
        let images = periodic_1d(1.3, l, 0.05, 1e-15).value;
        let w = 1.0;
        let fourier: f64 = (1.0
            + 2.0 * (1..400).map(|k| (-(w * k as f64).powi(2) * 0.05).exp() * (1.3 * k as f64).cos()).sum::<f64>())
            / l;
        assert_relative_eq!(images, fourier, max_relative = 1e-12);
    }

    #[test]
    fn sphere_series_matches_short_time_form() {
        let t = 1.2e-4;
        let series = sphere2(0.02, 1.0, t, 1e-14).unwrap();
        let ratio = 0.02 / 0.02f64.sin();
        let short = (4.0 * PI * t).recip() * ratio.sqrt() * (-0.0004 / (4.0 * t)).exp() * (1.0 + t / 3.0);
        assert_relative_eq!(series.value, short, max_relative = 1e-6);
    }

    #[test]
    fn sphere_long_time_limit() {
        let h = sphere2(1.0, 1.0, 50.0, 1e-14).unwrap();
        assert!((h.value - 1.0 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn mehler_is_symmetric_and_stable() {
        let x = [0.3, -1.2];
        let y = [1.1, 0.4];
        assert_eq!(mehler(&x, &y, 0.7), mehler(&y, &x, 0.7));
        let direct = {
            let r = (-0.7f64).exp();
            let num = r * r * (0.09 + 1.44 + 1.21 + 0.16) - 2.0 * r * (0.33 - 0.48);
            (1.0 - r * r).powf(-1.0) * (-num / (2.0 * (1.0 - r * r))).exp()
        };
        assert_relative_eq!(mehler(&x, &y, 0.7), direct, max_relative = 1e-13);
        assert!(mehler(&x, &x, 1e-12).is_finite());
    }

    #[test]
    fn invalid_time_rejected() {
        let m = ManifoldModel::euclidean(1).unwrap();
        assert!(heat_kernel(&m, &Point::from([0.0]), &Point::from([1.0]), 0.0, 1e-10).is_err());
    }

    #[test]
    fn masses_are_one() {
        let q = QuadConfig::default();
        let cases = [
            (ManifoldModel::euclidean(1).unwrap(), Point::from([0.2]), 1.0),
            (ManifoldModel::euclidean(2).unwrap(), Point::from([0.2, 0.1]), 0.3),
            (ManifoldModel::euclidean(3).unwrap(), Point::from([0.0, 0.0, 0.0]), 2.0),
            (ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap(), Point::from([1.0]), 0.3),
            (ManifoldModel::flat_torus(vec![2.0 * PI, 3.0]).unwrap(), Point::from([1.0, 2.0]), 0.3),
            (ManifoldModel::sphere(2, 1.0).unwrap(), Point::from([0.0, 0.0, 1.0]), 0.01),
            (ManifoldModel::sphere(1, 2.0).unwrap(), Point::from([2.0, 0.0]), 0.5),
            (ManifoldModel::hyperbolic3(), Point::from([0.1, 0.2, 0.0]), 2.0),
            (ManifoldModel::gaussian(2).unwrap(), Point::from([0.5, -1.0]), 0.4),
        ];
        for (m, p, t) in cases {
            let est = heat_mass(&m, &p, t, &q).unwrap();
            assert!((est.value - 1.0).abs() < 1e-8, "{}: {}", m.label(), est.value);
        }
    }

    #[test]
    fn indicator_of_half_torus_at_long_time() {
        let m = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let q = QuadConfig::default();
        let a = Region::arc(PI / 2.0 - PI / 2.0, PI / 2.0 + PI / 2.0);
        let v = semigroup_indicator(&m, &a, &Point::from([PI / 2.0]), 100.0, &q).unwrap();
        assert!((v.value - 0.5).abs() < 1e-8);
    }

    #[test]
    fn gaussian_tail_outside_unit_ball() {
        // e^{tΔ}χ_{B(p,1)^c}(p) = erfc(1/(2√t)) on the line
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let p = Point::from([0.0]);
        let out = Region::ball([0.0], 1.0).complement();
        for t in [0.01, 0.05, 0.2] {
            let v = semigroup_indicator(&m, &out, &p, t, &q).unwrap();
            let exact = libm::erfc(1.0 / (2.0 * f64::sqrt(t)));
            assert!((v.value - exact).abs() < 1e-10 + 1e-7 * exact, "t={t}: {} vs {exact}", v.value);
        }
    }

    #[test]
    fn chapman_kolmogorov_on_the_circle() {
        let m = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-10, 1e-12);
        let (x, y) = (Point::from([0.3]), Point::from([2.0]));
        for t in [0.1, 1.0] {
            for s in [0.1, 1.0] {
                let direct = heat_kernel(&m, &x, &y, t + s, 1e-14).unwrap().value;
                let via = integrate_region(
                    &m,
                    &Region::FullSpace,
                    |z: &[f64]| {
                        let z = Point::new(z);
                        heat_kernel(&m, &x, &z, t, 1e-14).unwrap().value * heat_kernel(&m, &z, &y, s, 1e-14).unwrap().value
                    },
                    &q,
                )
                .unwrap();
                assert!((direct - via.value).abs() < 1e-6, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn arc_indicator_against_fourier_sum() {
        // ∫₀^π H(x, p, 1) dx = 1/2 + (1/π) Σ e^{−k²}(sin k(π−p) + sin kp)/k
        let m = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let q = QuadConfig::default();
        let p = PI / 2.0;
        let exact = 0.5
            + (1..40)
                .map(|k| {
                    let k = k as f64;
                    (-k * k).exp() * ((k * (PI - p)).sin() + (k * p).sin()) / k
                })
                .sum::<f64>()
                / PI;
        let arc = Region::arc(0.0, PI);
        let pp = Point::from([p]);
        let quadrature = integrate_region(&m, &arc, |x: &[f64]| heat_kernel(&m, &Point::new(x), &pp, 1.0, 1e-14).unwrap().value, &q).unwrap();
        let semigroup = semigroup_indicator(&m, &arc, &pp, 1.0, &q).unwrap();
        assert!((quadrature.value - exact).abs() < 1e-9);
        assert!((semigroup.value - exact).abs() < 1e-9);
    }
}
