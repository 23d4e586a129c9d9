//! Integrals of a function over a finite-measure region.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{gk, mc, ordered_sum, IntegralEstimate, Method, QuadConfig};
use crate::error::{invalid, Result};
use crate::models::section::Frame;
use crate::models::{region_check, region_measure, section, ManifoldModel, ModelKind, Region, RegionSampler, Section};

/// Samples per Monte Carlo block; each block draws from its own stream.
pub(crate) const MC_BLOCK: usize = 4096;

/// `∫_region g dμ`. Tensor (ring) quadrature in dimension ≤ 2, Monte Carlo otherwise.
pub fn integrate_region<G>(model: &ManifoldModel, region: &Region, g: G, quad: &QuadConfig) -> Result<IntegralEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    quad.validate()?;
    region_check(model, region)?;
    let m = region_measure(model, region)?;
    if !m.is_finite() {
        return Err(invalid("integrate_region needs a finite-measure region"));
    }
    if m == 0.0 {
        return Ok(IntegralEstimate::zero());
    }
    match model.dimension() {
        1 => line_integral(model, region, &g, quad),
        2 if !matches!(model.kind(), ModelKind::FlatTorus { .. }) => match ring_center(model, region) {
            Some((c, rho_max)) => ring_integral(model, region, &c, rho_max, &g, quad),
            None => mc_integral(model, region, &g, quad),
        },
        _ => mc_integral(model, region, &g, quad),
    }
}

fn line_integral<G: Fn(&[f64]) -> f64>(
    model: &ManifoldModel,
    region: &Region,
    g: &G,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    let iv = region.to_intervals(model)?;
    let weighted = model.is_weighted();
    let f = |u: f64| {
        let x = model.line_point(u);
        g(&x.0) * model.density(&x.0)
    };
    let mut parts = Vec::new();
    let mut error = 0.0;
    let mut evals = 0u64;
    for &(a, b) in iv.pieces() {
        let (a, b) = if weighted { (a.max(-40.0), b.min(40.0)) } else { (a, b) };
        if !(b > a) {
            continue;
        }
        let mut pts = vec![a, b];
        if weighted {
            for k in -8..=8 {
                let v = k as f64;
                if v > a && v < b {
                    pts.push(v);
                }
            }
            pts.sort_by(f64::total_cmp);
        }
        let r = gk::adaptive_points(&f, &pts, quad.abs_tol, quad.rel_tol, quad.max_subdiv * 4);
        evals += r.evals as u64;
        if !r.converged {
            return Err(crate::Error::Precision {
                message: "region quadrature did not converge".into(),
                achieved: r.error,
                partial: Some(r.value),
            });
        }
        parts.push(r.value);
        error += r.error;
    }
    Ok(IntegralEstimate {
        value: ordered_sum(&parts),
        error_bound: error,
        method: Method::Adaptive,
        n_evals: evals,
    })
}

/// Center and outer radius for polar (ring) coordinates covering the region.
pub(crate) fn ring_center(model: &ManifoldModel, region: &Region) -> Option<(Vec<f64>, f64)> {
    match model.kind() {
        ModelKind::Sphere { radius, .. } => {
            let c = first_anchor(region).unwrap_or_else(|| model.origin().0.to_vec());
            Some((c, PI * radius))
        }
        ModelKind::GaussianSpace { .. } => {
            let c = first_anchor(region).unwrap_or_else(|| vec![0.0; 2]);
            let far = crate::models::norm(&c) + 40.0;
            match region.chart_bound(model) {
                Some((bc, br)) => {
                    let reach = crate::models::dist_sq(&bc, &c).sqrt() + br;
                    Some((c, reach.min(far)))
                }
                None => Some((c, far)),
            }
        }
        _ => {
            let (bc, br) = region.chart_bound(model)?;
            let c = first_anchor(region).unwrap_or_else(|| bc.clone());
            let reach = crate::models::dist_sq(&bc, &c).sqrt() + br;
            Some((c, reach))
        }
    }
}

/// A natural polar center: the first ball center, cap pole or cone apex.
pub(crate) fn first_anchor(region: &Region) -> Option<Vec<f64>> {
    match region {
        Region::GeodesicBall { center, .. } => Some(center.0.to_vec()),
        Region::Cap { pole, .. } => Some(pole.0.to_vec()),
        Region::Cone { axis, .. } => Some(vec![0.0; axis.len()]),
        Region::Complement { of } => first_anchor(of),
        Region::Intersection { a, b } | Region::Union { a, b } => first_anchor(a).or_else(|| first_anchor(b)),
        _ => None,
    }
}

fn ring_integral<G: Fn(&[f64]) -> f64 + Sync>(
    model: &ManifoldModel,
    region: &Region,
    c: &[f64],
    rho_max: f64,
    g: &G,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    let frame = Frame::at(model, c);
    let mut breaks = vec![0.0, rho_max];
    breaks.extend(region.critical_radii(model, c).into_iter().filter(|r| *r < rho_max));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // Probe sections once so unsupported shapes surface as errors.
    section(model, region, c, 0.5 * breaks[1])?;
    let inner_fail = std::sync::atomic::AtomicBool::new(false);
    let ring = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let Ok(Section::Arcs(arcs)) = section(model, region, c, rho) else {
            return f64::NAN;
        };
        let jac = model.sphere_area(rho) / (2.0 * PI);
        let f = |phi: f64| {
            let x = frame.exp2(c, rho, phi);
            g(&x) * model.density(&x)
        };
        let mut total = 0.0;
        for &(a, b) in arcs.pieces() {
            let r = gk::adaptive(&f, a, b, quad.abs_tol * 1e-2, quad.rel_tol * 0.1, quad.max_subdiv);
            if !r.converged {
                inner_fail.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            total += r.value;
        }
        total * jac
    };
    let segs: Vec<[f64; 2]> = breaks.windows(2).map(|w| [w[0], w[1]]).filter(|w| w[1] > w[0]).collect();
    let results: Vec<gk::GkResult> = segs
        .par_iter()
        .map(|w| gk::adaptive(&ring, w[0], w[1], quad.abs_tol, quad.rel_tol, quad.max_subdiv))
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let value = ordered_sum(&values);
    let error: f64 = results.iter().map(|r| r.error).sum::<f64>();
    let evals: u64 = results.iter().map(|r| r.evals as u64 * 21).sum();
    if results.iter().any(|r| !r.converged) || inner_fail.into_inner() || !value.is_finite() {
        return Err(crate::Error::Precision {
            message: "ring quadrature did not converge".into(),
            achieved: error,
            partial: Some(value),
        });
    }
    Ok(IntegralEstimate {
        value,
        error_bound: error + quad.rel_tol * 0.1 * value.abs(),
        method: Method::Adaptive,
        n_evals: evals,
    })
}

fn mc_integral<G: Fn(&[f64]) -> f64 + Sync>(
    model: &ManifoldModel,
    region: &Region,
    g: &G,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    let sampler = RegionSampler::new(model, region)?;
    let mom = mc::run_blocks(quad.seed, 0x7265_6769_6f6e_0000, quad.mc_samples, MC_BLOCK, |rng| {
        (g(&sampler.sample_raw(rng)), 0.0)
    });
    let m = sampler.measure();
    Ok(IntegralEstimate {
        value: m * mom.mean,
        error_bound: m * mom.three_se(),
        method: Method::Mc,
        n_evals: quad.mc_samples as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn area_of_unit_disk() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let r = integrate_region(&m, &Region::ball([0.0, 0.0], 1.0), |_| 1.0, &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, PI, max_relative = 1e-8);
    }

    #[test]
    fn odd_integrand_on_symmetric_region() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let region = Region::ball([0.0, 0.0], 2.0).intersect(Region::half_space(vec![0.0, 1.0], 0.0));
        let r = integrate_region(&m, &region, |x| x[0], &QuadConfig::default()).unwrap();
        assert!(r.value.abs() <= r.error_bound.max(1e-12));
    }

    #[test]
    fn off_center_disk_moments() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let r = integrate_region(&m, &Region::ball([1.0, -0.5], 0.5), |x| x[0] * x[0], &QuadConfig::default()).unwrap();
        // ∫ x² over the disk = π r² (c² + r²/4)
        assert_relative_eq!(r.value, PI * 0.25 * (1.0 + 0.0625), max_relative = 1e-8);
    }

    #[test]
    fn sphere_cap_area() {
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let cap = Region::cap([0.0, 0.0, 1.0], 1.0);
        let r = integrate_region(&m, &cap, |_| 1.0, &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 2.0 * PI * (1.0 - 1f64.cos()), max_relative = 1e-8);
    }

    #[test]
    fn gaussian_moment() {
        let m = ManifoldModel::gaussian(1).unwrap();
        let r = integrate_region(&m, &Region::FullSpace, |x| x[0] * x[0], &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn mc_ball_volume_is_seeded() {
        let m = ManifoldModel::euclidean(3).unwrap();
        let q = QuadConfig { mc_samples: 20_000, ..QuadConfig::default() }.with_seed(7);
        let ball = Region::ball([0.0, 0.0, 0.0], 1.0);
        let a = integrate_region(&m, &ball, |x| x[0] * x[0], &q).unwrap();
        let b = integrate_region(&m, &ball, |x| x[0] * x[0], &q).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, Method::Mc);
        // ∫_B x₁² = 4π/15
        assert!((a.value - 4.0 * PI / 15.0).abs() < a.error_bound);
    }

    #[test]
    fn infinite_region_rejected() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let h = Region::half_space(vec![1.0, 0.0], 0.0);
        assert!(integrate_region(&m, &h, |_| 1.0, &QuadConfig::default()).is_err());
    }
}
