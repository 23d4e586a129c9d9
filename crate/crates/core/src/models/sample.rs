//! Sampling from the model measure restricted to a region.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

use super::intervals::{norm_cdf, norm_sf, phi_diff, IntervalSet};
use super::measure::measure_unchecked;
use super::region::Region;
use super::section::orthonormal_frame;
use super::{hyperbolic, norm, unit_ball_volume, ManifoldModel, ModelKind, Point};
use crate::error::{Error, Result};

const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
enum Proposal {
    /// Exact inverse transform on a union of intervals.
    Line(IntervalSet),
    /// Uniform in a chart ball (Euclidean and small torus balls).
    ChartBall { center: Vec<f64>, radius: f64 },
    /// Uniform on a spherical cap of S².
    SphereCap { pole: [f64; 3], angle: f64, radius: f64 },
    /// Uniform in a hyperbolic ball.
    HyperBall { center: [f64; 3], radius: f64 },
    /// Uniform on a torus box.
    TorusBox { lo: Vec<f64>, width: Vec<f64> },
    /// The standard normal law.
    Gaussian { n: usize },
    Mixture(Vec<(f64, RegionSampler)>),
}

/// A prepared sampler for one region; reusable across draws.
#[derive(Debug, Clone)]
pub struct RegionSampler {
    model: ManifoldModel,
    region: Region,
    proposal: Proposal,
    measure: f64,
    acceptance: f64,
}

impl RegionSampler {
    pub fn new(model: &ManifoldModel, region: &Region) -> Result<Self> {
        region.check_shape(model)?;
        let measure = measure_unchecked(model, region)?;
        if !measure.is_finite() {
            return Err(Error::InvalidSampling("region has infinite measure".into()));
        }
        if measure <= 0.0 {
            return Err(Error::InvalidSampling("region has zero measure".into()));
        }
        if model.dimension() == 1 {
            let iv = region.to_intervals(model)?;
            return Ok(RegionSampler {
                model: model.clone(),
                region: region.clone(),
                proposal: Proposal::Line(iv),
                measure,
                acceptance: 1.0,
            });
        }
        if let Region::Union { a, b } = region {
            let mut parts = Vec::new();
            for part in [a, b] {
                let m = measure_unchecked(model, part)?;
                if m > 0.0 {
                    parts.push((m / measure, RegionSampler::new(model, part)?));
                }
            }
            let acceptance = parts.iter().map(|(w, s)| w * s.acceptance).sum::<f64>().max(
                parts.iter().map(|(_, s)| s.acceptance).fold(f64::INFINITY, f64::min),
            );
            return Ok(RegionSampler {
                model: model.clone(),
                region: region.clone(),
                proposal: Proposal::Mixture(parts),
                measure,
                acceptance,
            });
        }
        let (proposal, proposal_measure) = bounding_proposal(model, region)?;
        let acceptance = measure / proposal_measure;
        if acceptance < MIN_ACCEPTANCE {
            return Err(Error::Inefficient {
                rate: acceptance,
                detail: format!(
                    "region measure {measure:.3e} inside a proposal of measure {proposal_measure:.3e}"
                ),
            });
        }
        Ok(RegionSampler {
            model: model.clone(),
            region: region.clone(),
            proposal,
            measure,
            acceptance,
        })
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::from(self.sample_raw(rng))
    }

    pub(crate) fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.proposal {
            Proposal::Line(iv) => {
                let u = sample_line(&self.model, iv, rng);
                self.model.line_point(u).0.to_vec()
            }
            Proposal::Mixture(parts) => {
                let mut u: f64 = rng.random();
                for (w, s) in parts {
                    if u < *w {
                        return s.sample_raw(rng);
                    }
                    u -= w;
                }
                parts.last().expect("mixture has parts").1.sample_raw(rng)
            }
            p => loop {
                let x = propose(&self.model, p, rng);
                if self.region.contains_raw(&self.model, &x) {
                    return x;
                }
            },
        }
    }
}

/// One draw from the model measure restricted to `region`.
pub fn sample_region<R: Rng + ?Sized>(model: &ManifoldModel, region: &Region, rng: &mut R) -> Result<Point> {
    Ok(RegionSampler::new(model, region)?.sample(rng))
}

/// The smallest closed-form superset we know how to sample uniformly.
fn bounding_proposal(model: &ManifoldModel, region: &Region) -> Result<(Proposal, f64)> {
    let n = model.dimension();
    match model.kind() {
        ModelKind::GaussianSpace { n } => Ok((Proposal::Gaussian { n: *n }, 1.0)),
        ModelKind::Euclidean { .. } => {
            let (c, r) = ball_bound(model, region)
                .ok_or_else(|| Error::InvalidSampling("no bounded superset found for rejection".into()))?;
            Ok((
                Proposal::ChartBall { center: c.0.to_vec(), radius: r },
                unit_ball_volume(n) * r.powi(n as i32),
            ))
        }
        ModelKind::FlatTorus { lengths } => {
            if let Some(Region::Arc { intervals }) = find_leaf(region, |r| matches!(r, Region::Arc { .. })) {
                let lo: Vec<f64> = intervals.iter().map(|[a, _]| *a).collect();
                let width: Vec<f64> = intervals
                    .iter()
                    .zip(lengths)
                    .map(|([a, b], l)| (b - a).min(*l))
                    .collect();
                let m = width.iter().product();
                return Ok((Proposal::TorusBox { lo, width }, m));
            }
            let lmin = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
            if let Some((c, r)) = ball_bound(model, region).filter(|(_, r)| 2.0 * r <= lmin) {
                return Ok((
                    Proposal::ChartBall { center: c.0.to_vec(), radius: r },
                    unit_ball_volume(n) * r.powi(n as i32),
                ));
            }
            Ok((
                Proposal::TorusBox {
                    lo: vec![0.0; lengths.len()],
                    width: lengths.clone(),
                },
                lengths.iter().product(),
            ))
        }
        ModelKind::Sphere { radius, .. } => {
            let (pole, angle) = match ball_bound(model, region) {
                Some((c, r)) => ([c.0[0] / radius, c.0[1] / radius, c.0[2] / radius], (r / radius).min(PI)),
                None => ([0.0, 0.0, 1.0], PI),
            };
            let m = 2.0 * PI * radius * radius * (1.0 - angle.cos());
            Ok((Proposal::SphereCap { pole, angle, radius: *radius }, m))
        }
        ModelKind::Hyperbolic3 => {
            let (c, r) = ball_bound(model, region)
                .ok_or_else(|| Error::InvalidSampling("no bounded superset found for rejection".into()))?;
            Ok((
                Proposal::HyperBall {
                    center: [c.0[0], c.0[1], c.0[2]],
                    radius: r,
                },
                PI * ((2.0 * r).sinh() - 2.0 * r),
            ))
        }
    }
}

fn find_leaf(region: &Region, pred: impl Fn(&Region) -> bool + Copy) -> Option<&Region> {
    match region {
        Region::Intersection { a, b } => find_leaf(a, pred).or_else(|| find_leaf(b, pred)),
        r if pred(r) => Some(r),
        _ => None,
    }
}

/// Smallest geodesic ball (or cap, on spheres) among the conjuncts of the region.
fn ball_bound(model: &ManifoldModel, region: &Region) -> Option<(Point, f64)> {
    match region {
        Region::GeodesicBall { center, radius } => Some((center.clone(), *radius)),
        Region::Cap { pole, angle } => {
            let rs = match model.kind() {
                ModelKind::Sphere { radius, .. } => *radius,
                _ => 1.0,
            };
            Some((pole.clone(), angle * rs))
        }
        Region::Intersection { a, b } => match (ball_bound(model, a), ball_bound(model, b)) {
            (Some(x), Some(y)) => Some(if x.1 <= y.1 { x } else { y }),
            (x, None) => x,
            (None, y) => y,
        },
        _ => None,
    }
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.iter().map(|c| c / r).collect();
        }
    }
}

fn propose<R: Rng + ?Sized>(model: &ManifoldModel, p: &Proposal, rng: &mut R) -> Vec<f64> {
    match p {
        Proposal::ChartBall { center, radius } => {
            let n = center.len();
            let u = unit_vector(n, rng);
            let rad = radius * rng.random::<f64>().powf(1.0 / n as f64);
            let mut x: Vec<f64> = center.iter().zip(&u).map(|(c, d)| c + rad * d).collect();
            if let ModelKind::FlatTorus { lengths } = model.kind() {
                for (xi, l) in x.iter_mut().zip(lengths) {
                    *xi = xi.rem_euclid(*l);
                }
            }
            x
        }
        Proposal::TorusBox { lo, width } => {
            let ModelKind::FlatTorus { lengths } = model.kind() else {
                unreachable!()
            };
            lo.iter()
                .zip(width)
                .zip(lengths)
                .map(|((a, w), l)| (a + w * rng.random::<f64>()).rem_euclid(*l))
                .collect()
        }
        Proposal::SphereCap { pole, angle, radius } => {
            let (e1, e2) = orthonormal_frame(pole);
            let z = 1.0 - (1.0 - angle.cos()) * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            (0..3)
                .map(|i| radius * (z * pole[i] + s * (phi.cos() * e1[i] + phi.sin() * e2[i])))
                .collect()
        }
        Proposal::HyperBall { center, radius } => {
            let rho = hyper_radius(*radius, rng.random::<f64>());
            let u = unit_vector(3, rng);
            hyperbolic::exp_from(center, rho, &[u[0], u[1], u[2]]).to_vec()
        }
        Proposal::Gaussian { n } => (0..*n).map(|_| std_normal(rng)).collect(),
        Proposal::Line(_) | Proposal::Mixture(_) => unreachable!(),
    }
}

/// Inverse of the hyperbolic ball volume fraction `(sinh 2ρ − 2ρ)/(sinh 2R − 2R) = u`.
fn hyper_radius(big_r: f64, u: f64) -> f64 {
    let v = |r: f64| (2.0 * r).sinh() - 2.0 * r;
    let target = u * v(big_r);
    let (mut lo, mut hi) = (0.0, big_r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * big_r {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn sample_line<R: Rng + ?Sized>(model: &ManifoldModel, iv: &IntervalSet, rng: &mut R) -> f64 {
    let normal = Normal::standard();
    let weighted = model.is_weighted();
    let mass = |a: f64, b: f64| if weighted { phi_diff(a, b) } else { b - a };
    let masses: Vec<f64> = iv.pieces().iter().map(|&(a, b)| mass(a, b)).collect();
    let total: f64 = masses.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut k = masses.len() - 1;
    for (i, m) in masses.iter().enumerate() {
        if u < *m {
            k = i;
            break;
        }
        u -= m;
    }
    let (a, b) = iv.pieces()[k];
    let v: f64 = rng.random();
    if weighted {
        // Inverse transform on whichever tail keeps precision.
        if a >= 0.0 {
            let (sa, sb) = (norm_sf(a), norm_sf(b));
            normal.inverse_cdf(1.0 - (sa - v * (sa - sb)))
        } else {
            let (ca, cb) = (norm_cdf(a), norm_cdf(b));
            normal.inverse_cdf(ca + v * (cb - ca))
        }
    } else {
        a + v * (b - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::measure::region_measure;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arc_samples_stay_in_arc() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = RegionSampler::new(&t, &Region::arc(0.0, PI)).unwrap();
        for _ in 0..1000 {
            let x = s.sample(&mut rng);
            assert!(x.0[0] > 0.0 && x.0[0] < PI);
        }
    }

    #[test]
    fn disk_sample_mean_is_centered() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let s = RegionSampler::new(&m, &Region::ball([0.0, 0.0], 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let x = s.sample_raw(&mut rng);
            mean[0] += x[0] / n as f64;
            mean[1] += x[1] / n as f64;
        }
        // σ of each coordinate is 1/2, so 3σ/√N ≈ 0.0047
        assert!(mean[0].abs() < 0.005 && mean[1].abs() < 0.005, "{mean:?}");
    }

    #[test]
    fn gaussian_half_line_tail_fraction() {
        let g = ManifoldModel::gaussian(1).unwrap();
        let s = RegionSampler::new(&g, &Region::half_space(vec![1.0], 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let hits = (0..n).filter(|_| s.sample_raw(&mut rng)[0] > 1.0).count();
        let frac = hits as f64 / n as f64;
        // P(x > 1 | x > 0) = erfc(1/√2) = 0.317310507862914
        let p = 0.317310507862914;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() < 3.0 * sigma, "{frac}");
    }

    #[test]
    fn infinite_region_is_rejected() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let r = Region::half_space(vec![1.0, 0.0], 0.0);
        assert!(matches!(RegionSampler::new(&m, &r), Err(Error::InvalidSampling(_))));
    }

    #[test]
    fn thin_region_is_inefficient() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let r = Region::ball([0.0, 0.0], 1.0).intersect(Region::half_space(vec![1.0, 0.0], 0.99999));
        assert!(matches!(RegionSampler::new(&m, &r), Err(Error::Inefficient { .. })));
    }

    #[test]
    fn sub_region_counts_match_measures() {
        let cases: Vec<(ManifoldModel, Region, Region)> = vec![
            (
                ManifoldModel::euclidean(2).unwrap(),
                Region::ball([0.0, 0.0], 2.0),
                Region::ball([0.5, 0.0], 1.0),
            ),
            (
                ManifoldModel::sphere(2, 1.0).unwrap(),
                Region::FullSpace,
                Region::cap([0.0, 0.0, 1.0], 1.0),
            ),
            (
                ManifoldModel::hyperbolic3(),
                Region::ball([0.0, 0.0, 0.0], 1.5),
                Region::ball([0.2, 0.0, 0.0], 0.7),
            ),
            (
                ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap(),
                Region::FullSpace,
                Region::arc_box(vec![[1.0, 3.0], [5.0, 7.5]]),
            ),
            (
                ManifoldModel::gaussian(2).unwrap(),
                Region::FullSpace,
                Region::half_space(vec![1.0, 1.0], 0.5),
            ),
        ];
        for (model, big, sub) in cases {
            let s = RegionSampler::new(&model, &big).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let n = 100_000;
            let hits = (0..n).filter(|_| sub.contains_raw(&model, &s.sample_raw(&mut rng))).count();
            let p = region_measure(&model, &sub).unwrap() / s.measure();
            let frac = hits as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((frac - p).abs() < 4.0 * se, "{}: {frac} vs {p}", model.label());
        }
    }

    #[test]
    fn hyperbolic_radius_inversion() {
        assert_relative_eq!(hyper_radius(2.0, 1.0), 2.0, epsilon = 1e-12);
        assert!(hyper_radius(2.0, 0.0) < 1e-14);
    }
}
