//! Closed-form measures of regions.
//!
//! Regions are pushed to negation normal form, where complements only wrap
//! bounded primitives. Intersections of primitives are then matched against a
//! table of closed forms; anything else is rejected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma_lr;
use std::f64::consts::PI;

use super::intervals::{norm_sf, IntervalSet};
use super::region::{cone_fraction, Region};
use super::{dot, norm, unit_ball_volume, ManifoldModel, ModelKind, Point};
use crate::error::{Error, Result};

const UNION_PROBES: usize = 1000;
const UNION_PROBE_SEED: u64 = 0x5eed_d15c01;

#[derive(Debug, Clone)]
enum Nf {
    Full,
    Empty,
    Lit(Region),
    Neg(Region),
    And(Vec<Nf>),
    Or(Box<Nf>, Box<Nf>, bool),
}

fn unsupported(msg: impl Into<String>) -> Error {
    Error::UnsupportedRegion(msg.into())
}

/// Exact measure of `region` under the model measure (γ on Gaussian space).
/// Infinite measure is reported as `f64::INFINITY`.
pub fn region_measure(model: &ManifoldModel, region: &Region) -> Result<f64> {
    region.check_shape(model)?;
    measure_unchecked(model, region)
}

pub(crate) fn measure_unchecked(model: &ManifoldModel, region: &Region) -> Result<f64> {
    if model.dimension() == 1 {
        let iv = region.to_intervals(model)?;
        return Ok(if model.is_weighted() {
            iv.gaussian_measure()
        } else {
            iv.length()
        });
    }
    let nf = nnf(model, region, false);
    conj(model, vec![nf])
}

/// Membership test with point validation.
pub fn region_contains(model: &ManifoldModel, region: &Region, x: &Point) -> Result<bool> {
    model.check_point(x)?;
    region.check_shape(model)?;
    Ok(region.contains_raw(model, &x.0))
}

/// Full constructibility check: parameters, closed-form measure, and a probe
/// of union disjointness.
pub fn region_check(model: &ManifoldModel, region: &Region) -> Result<()> {
    region.check_shape(model)?;
    measure_unchecked(model, region)?;
    check_unions(model, region)
}

fn check_unions(model: &ManifoldModel, region: &Region) -> Result<()> {
    match region {
        Region::Union { a, b } => {
            check_unions(model, a)?;
            check_unions(model, b)?;
            let overlap = if model.dimension() == 1 {
                a.to_intervals(model)?.intersect(&b.to_intervals(model)?).length() > 0.0
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(UNION_PROBE_SEED);
                let scale = probe_scale(model, region);
                (0..UNION_PROBES).any(|_| {
                    let x = probe_point(model, &mut rng, scale);
                    a.contains_raw(model, &x) && b.contains_raw(model, &x)
                })
            };
            if overlap {
                return Err(unsupported("union operands overlap; only disjoint unions are allowed"));
            }
            Ok(())
        }
        Region::Complement { of } => check_unions(model, of),
        Region::Intersection { a, b } => {
            check_unions(model, a)?;
            check_unions(model, b)
        }
        _ => Ok(()),
    }
}

fn probe_scale(model: &ManifoldModel, region: &Region) -> f64 {
    match region.chart_bound(model) {
        Some((c, r)) => norm(&c) + r,
        None => 10.0,
    }
}

/// A point from a model-wide proposal covering the chart ball of radius `scale`.
fn probe_point(model: &ManifoldModel, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    match model.kind() {
        ModelKind::FlatTorus { lengths } => lengths.iter().map(|l| rng.random::<f64>() * l).collect(),
        ModelKind::Sphere { n, radius } => {
            loop {
                let v: Vec<f64> = (0..=*n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let r = norm(&v);
                if r > 1e-12 {
                    return v.iter().map(|c| c * radius / r).collect();
                }
            }
        }
        ModelKind::Hyperbolic3 => loop {
            let v: Vec<f64> = (0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            if dot(&v, &v) < 1.0 {
                return v.iter().map(|c| c * scale.min(0.999_999)).collect();
            }
        },
        _ => (0..model.dimension())
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
            .collect(),
    }
}


fn nnf(model: &ManifoldModel, r: &Region, negate: bool) -> Nf {
    match r {
        Region::FullSpace => {
            if negate {
                Nf::Empty
            } else {
                Nf::Full
            }
        }
        Region::Complement { of } => nnf(model, of, !negate),
        Region::Intersection { a, b } => {
            if negate {
                Nf::Or(Box::new(nnf(model, a, true)), Box::new(nnf(model, b, true)), false)
            } else {
                Nf::And(vec![nnf(model, a, false), nnf(model, b, false)])
            }
        }
        Region::Union { a, b } => {
            if negate {
                Nf::And(vec![nnf(model, a, true), nnf(model, b, true)])
            } else {
                Nf::Or(Box::new(nnf(model, a, false)), Box::new(nnf(model, b, false)), true)
            }
        }
        prim => {
            if !negate {
                return Nf::Lit(as_cap(model, prim));
            }
            match as_cap(model, prim) {
                Region::HalfSpace { normal, offset } => Nf::Lit(Region::HalfSpace {
                    normal: normal.iter().map(|v| -v).collect(),
                    offset: -offset,
                }),
                Region::Cone { axis, half_angle } => {
                    if half_angle >= PI {
                        Nf::Empty
                    } else {
                        Nf::Lit(Region::Cone {
                            axis: axis.iter().map(|v| -v).collect(),
                            half_angle: PI - half_angle,
                        })
                    }
                }
                Region::Cap { pole, angle } if model.dimension() == 2 => {
                    if angle >= PI {
                        Nf::Empty
                    } else {
                        Nf::Lit(Region::Cap {
                            pole: Point(pole.0.iter().map(|v| -v).collect()),
                            angle: PI - angle,
                        })
                    }
                }
                other => Nf::Neg(other),
            }
        }
    }
}

/// Geodesic balls on S² are caps.
fn as_cap(model: &ManifoldModel, r: &Region) -> Region {
    match (model.kind(), r) {
        (ModelKind::Sphere { n: 2, radius }, Region::GeodesicBall { center, radius: rb }) => {
            Region::Cap {
                pole: center.clone(),
                angle: (rb / radius).min(PI),
            }
        }
        _ => r.clone(),
    }
}

fn total(model: &ManifoldModel) -> f64 {
    model.volume_class().finite().unwrap_or(f64::INFINITY)
}

fn conj(model: &ManifoldModel, items: Vec<Nf>) -> Result<f64> {
    let mut flat = Vec::new();
    let mut stack = items;
    while let Some(it) = stack.pop() {
        match it {
            Nf::And(v) => stack.extend(v),
            Nf::Full => {}
            Nf::Empty => return Ok(0.0),
            other => flat.push(other),
        }
    }
    if let Some(i) = flat.iter().position(|x| matches!(x, Nf::Or(..))) {
        let Nf::Or(a, b, disjoint) = flat.swap_remove(i) else {
            unreachable!()
        };
        let with = |extra: Vec<Nf>| {
            let mut v = flat.clone();
            v.extend(extra);
            conj(model, v)
        };
        let ma = with(vec![(*a).clone()])?;
        let mb = with(vec![(*b).clone()])?;
        if disjoint || ma.is_infinite() || mb.is_infinite() {
            return Ok(ma + mb);
        }
        let mab = with(vec![*a, *b])?;
        return Ok((ma + mb - mab).max(0.0));
    }
    if let Some(i) = flat.iter().position(|x| matches!(x, Nf::Neg(_))) {
        let Nf::Neg(x) = flat.swap_remove(i) else {
            unreachable!()
        };
        let m_rest = conj(model, flat.clone())?;
        let mut with_x = flat;
        with_x.push(Nf::Lit(x));
        let m_int = conj(model, with_x)?;
        if m_rest.is_finite() {
            return Ok((m_rest - m_int).max(0.0));
        }
        if m_int.is_finite() {
            return Ok(f64::INFINITY);
        }
        return Err(unsupported("difference of two infinite-measure sets"));
    }
    let prims: Vec<Region> = flat
        .into_iter()
        .map(|x| match x {
            Nf::Lit(r) => r,
            _ => unreachable!(),
        })
        .collect();
    primitives(model, prims)
}

fn primitives(model: &ManifoldModel, mut prims: Vec<Region>) -> Result<f64> {
    let mut uniq: Vec<Region> = Vec::new();
    for p in prims.drain(..) {
        if !uniq.contains(&p) {
            uniq.push(p);
        }
    }
    if uniq.is_empty() {
        return Ok(total(model));
    }
    match model.kind() {
        ModelKind::Sphere { radius, .. } => sphere_caps(*radius, uniq),
        ModelKind::FlatTorus { lengths } => torus_prims(model, lengths, uniq),
        ModelKind::Hyperbolic3 => {
            let balls = reduce_balls(model, uniq)?;
            match balls.as_slice() {
                [] => Ok(0.0),
                [(_, r)] => Ok(PI * ((2.0 * r).sinh() - 2.0 * r)),
                _ => Err(unsupported("partially overlapping hyperbolic balls")),
            }
        }
        ModelKind::Euclidean { n } => euclidean_prims(model, *n, uniq),
        ModelKind::GaussianSpace { n } => gaussian_prims(model, *n, uniq),
    }
}

/// Removes nested balls. Returns an empty list if two balls are disjoint.
fn reduce_balls(model: &ManifoldModel, prims: Vec<Region>) -> Result<Vec<(Point, f64)>> {
    let mut balls: Vec<(Point, f64)> = Vec::new();
    for p in prims {
        match p {
            Region::GeodesicBall { center, radius } => balls.push((center, radius)),
            other => return Err(unsupported(format!("cannot intersect {other:?} with balls here"))),
        }
    }
    reduce_ball_list(model, balls)
}

fn reduce_ball_list(model: &ManifoldModel, mut balls: Vec<(Point, f64)>) -> Result<Vec<(Point, f64)>> {
    'outer: loop {
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                let d = model.dist_unchecked(&balls[i].0 .0, &balls[j].0 .0);
                let (ri, rj) = (balls[i].1, balls[j].1);
                if d >= ri + rj {
                    return Ok(Vec::new());
                }
                if d + ri <= rj {
                    balls.swap_remove(j);
                    continue 'outer;
                }
                if d + rj <= ri {
                    balls.swap_remove(i);
                    continue 'outer;
                }
            }
        }
        return Ok(balls);
    }
}

fn sphere_caps(radius: f64, prims: Vec<Region>) -> Result<f64> {
    let mut caps: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in prims {
        match p {
            Region::Cap { pole, angle } => caps.push((pole.0.to_vec(), angle)),
            Region::Arc { intervals } => {
                // Sphere(1) only reaches here through the interval path; keep for safety.
                let [a, b] = intervals[0];
                return Ok((b - a).min(2.0 * PI * radius));
            }
            other => return Err(unsupported(format!("{other:?} on a sphere"))),
        }
    }
    let angle_between = |a: &[f64], b: &[f64]| {
        let c = super::cross3(a, b);
        norm(&c).atan2(dot(a, b))
    };
    'outer: loop {
        for i in 0..caps.len() {
            for j in (i + 1)..caps.len() {
                let d = angle_between(&caps[i].0, &caps[j].0);
                let (ai, aj) = (caps[i].1, caps[j].1);
                if d >= ai + aj {
                    return Ok(0.0);
                }
                if d + ai <= aj {
                    caps.swap_remove(j);
                    continue 'outer;
                }
                if d + aj <= ai {
                    caps.swap_remove(i);
                    continue 'outer;
                }
            }
        }
        break;
    }
    match caps.as_slice() {
        [(_, a)] => Ok(2.0 * PI * radius * radius * (1.0 - a.cos())),
        [(p, a), (q, b)] => Ok(radius * radius * cap_lens(angle_between(p, q), *a, *b)),
        _ => Err(unsupported("three or more partially overlapping spherical caps")),
    }
}

/// Area of the intersection of two caps of angular radii `a`, `b` on the unit
/// sphere whose poles are `d` apart, for `|a - b| < d < a + b`.
fn cap_lens(d: f64, a: f64, b: f64) -> f64 {
    if PI - d < 1e-12 {
        // antipodal poles: a band
        return 2.0 * PI * (-a.cos() - b.cos()).max(0.0);
    }
    let acos = |x: f64| x.clamp(-1.0, 1.0).acos();
    let (ca, cb, cd) = (a.cos(), b.cos(), d.cos());
    let (sa, sb, sd) = (a.sin(), b.sin(), d.sin());
    2.0 * (PI - acos((cd - ca * cb) / (sa * sb)) - ca * acos((cb - cd * ca) / (sd * sa)) - cb * acos((ca - cd * cb) / (sd * sb)))
}

fn torus_prims(model: &ManifoldModel, lengths: &[f64], prims: Vec<Region>) -> Result<f64> {
    let all_arcs = prims.iter().all(|p| matches!(p, Region::Arc { .. }));
    if all_arcs {
        let mut axes: Vec<IntervalSet> = lengths.iter().map(|l| IntervalSet::full(Some(*l))).collect();
        for p in &prims {
            if let Region::Arc { intervals } = p {
                for (k, [a, b]) in intervals.iter().enumerate() {
                    axes[k] = axes[k].intersect(&IntervalSet::interval(*a, *b, Some(lengths[k])));
                }
            }
        }
        return Ok(axes.iter().map(IntervalSet::length).product());
    }
    let balls = reduce_balls(model, prims)?;
    let lmin = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    match balls.as_slice() {
        [] => Ok(0.0),
        [(_, r)] if 2.0 * r <= lmin => Ok(unit_ball_volume(lengths.len()) * r.powi(lengths.len() as i32)),
        [_] => Err(unsupported("torus ball wraps onto itself")),
        _ => Err(unsupported("partially overlapping torus balls")),
    }
}

/// Volume of `{x ∈ B(0,r) : x₁ > h}` in ℝⁿ.
pub(crate) fn ball_cap_volume(n: usize, r: f64, h: f64) -> f64 {
    let full = unit_ball_volume(n) * r.powi(n as i32);
    if h >= r {
        return 0.0;
    }
    if h <= -r {
        return full;
    }
    let cap = |h: f64| {
        if n == 1 {
            r - h
        } else {
            0.5 * full
                * statrs::function::beta::beta_reg((n as f64 + 1.0) / 2.0, 0.5, 1.0 - (h / r).powi(2))
        }
    };
    if h >= 0.0 {
        cap(h)
    } else {
        full - cap(-h)
    }
}

struct Dir {
    axis: Vec<f64>,
    half_angle: f64,
}

fn euclidean_prims(model: &ManifoldModel, n: usize, prims: Vec<Region>) -> Result<f64> {
    let mut balls = Vec::new();
    let mut halfs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut cones: Vec<Dir> = Vec::new();
    for p in prims {
        match p {
            Region::GeodesicBall { center, radius } => balls.push((center, radius)),
            Region::HalfSpace { normal, offset } => {
                let nn = norm(&normal);
                halfs.push((normal.iter().map(|v| v / nn).collect(), offset / nn));
            }
            Region::Cone { axis, half_angle } => cones.push(Dir { axis, half_angle }),
            other => return Err(unsupported(format!("{other:?} in Euclidean space"))),
        }
    }
    let had_balls = !balls.is_empty();
    let balls = reduce_ball_list(model, balls)?;
    if had_balls && balls.is_empty() {
        return Ok(0.0);
    }
    match balls.len() {
        0 => {
            if had_balls {
                return Ok(0.0);
            }
            let mut dirs: Vec<Dir> = halfs
                .iter()
                .map(|(nv, _)| Dir {
                    axis: nv.clone(),
                    half_angle: PI / 2.0,
                })
                .collect();
            dirs.extend(cones);
            match direction_overlap(n, &dirs) {
                Some(f) if f > 0.0 => Ok(f64::INFINITY),
                _ => Err(unsupported("intersection of unbounded sets with no common direction")),
            }
        }
        1 => {
            let (c, r) = (&balls[0].0, balls[0].1);
            let mut live = Vec::new();
            for (nv, off) in halfs {
                let h = off - dot(&nv, &c.0);
                if h >= r {
                    return Ok(0.0);
                }
                if h > -r {
                    live.push((nv, off, h));
                }
            }
            if live.is_empty() && cones.is_empty() {
                return Ok(unit_ball_volume(n) * r.powi(n as i32));
            }
            if live.len() == 1 && cones.is_empty() {
                return Ok(ball_cap_volume(n, r, live[0].2));
            }
            if norm(&c.0) <= 1e-15 * r && live.iter().all(|(_, off, _)| *off == 0.0) {
                let mut dirs: Vec<Dir> = live
                    .into_iter()
                    .map(|(nv, _, _)| Dir {
                        axis: nv,
                        half_angle: PI / 2.0,
                    })
                    .collect();
                dirs.extend(cones);
                if let Some(f) = direction_overlap(n, &dirs) {
                    return Ok(unit_ball_volume(n) * r.powi(n as i32) * f);
                }
            }
            Err(unsupported("ball cut by several half-spaces or an off-apex cone"))
        }
        2 if halfs.is_empty() && cones.is_empty() => {
            let d = model.dist_unchecked(&balls[0].0 .0, &balls[1].0 .0);
            let (r1, r2) = (balls[0].1, balls[1].1);
            let h1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
            Ok(ball_cap_volume(n, r1, h1) + ball_cap_volume(n, r2, d - h1))
        }
        _ => Err(unsupported("intersection of three partially overlapping balls")),
    }
}

/// Normalised measure of the intersection of circular direction cones, when
/// it has a closed form.
fn direction_overlap(n: usize, dirs: &[Dir]) -> Option<f64> {
    if dirs.is_empty() {
        return Some(1.0);
    }
    if n == 2 {
        let tau = 2.0 * PI;
        let mut set = IntervalSet::full(Some(tau));
        for d in dirs {
            let phi = d.axis[1].atan2(d.axis[0]);
            set = set.intersect(&IntervalSet::interval(phi - d.half_angle, phi + d.half_angle, Some(tau)));
        }
        return Some(set.length() / tau);
    }
    let mut caps: Vec<(Vec<f64>, f64)> = dirs
        .iter()
        .map(|d| {
            let a = norm(&d.axis);
            (d.axis.iter().map(|v| v / a).collect(), d.half_angle)
        })
        .collect();
    'outer: loop {
        for i in 0..caps.len() {
            for j in (i + 1)..caps.len() {
                let d = dot(&caps[i].0, &caps[j].0).clamp(-1.0, 1.0).acos();
                let (ai, aj) = (caps[i].1, caps[j].1);
                if d >= ai + aj {
                    return Some(0.0);
                }
                if d + ai <= aj {
                    caps.swap_remove(j);
                    continue 'outer;
                }
                if d + aj <= ai {
                    caps.swap_remove(i);
                    continue 'outer;
                }
            }
        }
        break;
    }
    match caps.as_slice() {
        [(_, b)] => Some(cone_fraction(n, *b)),
        // Two overlapping caps: the overlap is positive but has no simple form.
        [_, _] => None,
        _ => None,
    }
}

fn gaussian_prims(_model: &ManifoldModel, n: usize, prims: Vec<Region>) -> Result<f64> {
    let mut ball: Option<(Point, f64)> = None;
    let mut halfs: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in prims {
        match p {
            Region::GeodesicBall { center, radius } => {
                if norm(&center.0) > 0.0 {
                    return Err(unsupported("Gaussian measure of an off-centre ball"));
                }
                if ball.as_ref().is_none_or(|b| radius < b.1) {
                    ball = Some((center, radius));
                }
            }
            Region::HalfSpace { normal: nv, offset } => {
                let nn = norm(&nv);
                halfs.push((nv.iter().map(|v| v / nn).collect(), offset / nn));
            }
            other => return Err(unsupported(format!("{other:?} in Gaussian space"))),
        }
    }
    let chi = |r: f64| gamma_lr(n as f64 / 2.0, r * r / 2.0);
    match (ball, halfs.as_slice()) {
        (Some((_, r)), []) => Ok(chi(r)),
        (Some((_, r)), [(_, off)]) if *off == 0.0 => Ok(0.5 * chi(r)),
        (None, [(_, off)]) => Ok(norm_sf(*off)),
        (None, hs) => {
            // Parallel half-spaces reduce to an interval along the common normal.
            let e = hs[0].0.clone();
            let mut iv = IntervalSet::full(None);
            for (nv, off) in hs {
                let c = dot(nv, &e);
                if (c.abs() - 1.0).abs() > 1e-12 {
                    return Err(unsupported("non-parallel half-spaces in Gaussian space"));
                }
                let piece = if c > 0.0 {
                    IntervalSet::interval(*off, f64::INFINITY, None)
                } else {
                    IntervalSet::interval(f64::NEG_INFINITY, -off, None)
                };
                iv = iv.intersect(&piece);
            }
            Ok(iv.gaussian_measure())
        }
        _ => Err(unsupported("Gaussian ball cut by an off-centre half-space")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e2() -> ManifoldModel {
        ManifoldModel::euclidean(2).unwrap()
    }

    #[test]
    fn spec_measure_examples() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        assert_relative_eq!(region_measure(&t, &Region::arc(0.0, PI)).unwrap(), PI);
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        let hemi = Region::cap([0.0, 0.0, 1.0], PI / 2.0);
        assert_relative_eq!(region_measure(&s, &hemi).unwrap(), 2.0 * PI, epsilon = 1e-14);
        let g = ManifoldModel::gaussian(1).unwrap();
        let hs = Region::half_space(vec![1.0], 0.0);
        assert_relative_eq!(region_measure(&g, &hs).unwrap(), 0.5);
    }

    #[test]
    fn overlapping_caps() {
        let s = ManifoldModel::sphere(2, 2.0).unwrap();
        let north = Region::cap([0.0, 0.0, 2.0], PI / 2.0);
        let east = Region::cap([2.0, 0.0, 0.0], PI / 2.0);
        // two orthogonal hemispheres share a quarter of the sphere
        assert_relative_eq!(region_measure(&s, &north.clone().intersect(east)).unwrap(), 4.0 * PI, epsilon = 1e-12);
        // a band between two concentric caps
        let band = Region::cap([0.0, 0.0, 2.0], 1.4).intersect(Region::cap([0.0, 0.0, 2.0], 1.0).complement());
        assert_relative_eq!(region_measure(&s, &band).unwrap(), 8.0 * PI * (1.0f64.cos() - 1.4f64.cos()), epsilon = 1e-12);

        // against Monte Carlo over the uniform sphere
        let a = Region::cap([0.0, 0.0, 2.0], 1.0);
        let b = Region::cap([2.0 * 0.6f64.sin(), 0.0, 2.0 * 0.6f64.cos()], 0.8);
        let exact = region_measure(&s, &a.clone().intersect(b.clone())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let r = norm(&v);
            let x = Point::new(&[2.0 * v[0] / r, 2.0 * v[1] / r, 2.0 * v[2] / r]);
            if region_contains(&s, &a, &x).unwrap() && region_contains(&s, &b, &x).unwrap() {
                hits += 1;
            }
        }
        let mc = 16.0 * PI * hits as f64 / n as f64;
        let sd = 16.0 * PI * ((hits as f64 / n as f64) * (1.0 - hits as f64 / n as f64) / n as f64).sqrt();
        assert!((exact - mc).abs() < 4.0 * sd, "{exact} vs {mc} ± {sd}");

        // E ∩ Ω and Eᶜ ∩ Ω add up to Ω
        let inside = region_measure(&s, &a.clone().intersect(b.clone())).unwrap();
        let outside = region_measure(&s, &a.complement().intersect(b.clone())).unwrap();
        assert_relative_eq!(inside + outside, region_measure(&s, &b).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn half_disk_and_quarter_disk() {
        let m = e2();
        let disk = Region::ball([0.0, 0.0], 1.0);
        let half = Region::half_space(vec![0.0, 1.0], 0.0).intersect(disk.clone());
        assert_relative_eq!(region_measure(&m, &half).unwrap(), PI / 2.0, epsilon = 1e-14);
        let quarter = Region::cone(vec![1.0, 1.0], PI / 4.0).intersect(disk.clone());
        assert_relative_eq!(region_measure(&m, &quarter).unwrap(), PI / 4.0, epsilon = 1e-14);
        let outside = disk.intersect(Region::cone(vec![1.0, 1.0], PI / 4.0).complement());
        assert_relative_eq!(region_measure(&m, &outside).unwrap(), 3.0 * PI / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn circular_segment_area() {
        // segment of the unit disk beyond x = 0.5: acos(0.5) − 0.5·√0.75
        let m = e2();
        let seg = Region::ball([0.0, 0.0], 1.0).intersect(Region::half_space(vec![2.0, 0.0], 1.0));
        let oracle = 0.5f64.acos() - 0.5 * 0.75f64.sqrt();
        assert_relative_eq!(region_measure(&m, &seg).unwrap(), oracle, epsilon = 1e-14);
    }

    #[test]
    fn lens_area_matches_textbook_formula() {
        let m = e2();
        let lens = Region::ball([0.0, 0.0], 1.0).intersect(Region::ball([1.0, 0.0], 1.0));
        // 2·acos(1/2) − (1/2)√3
        let oracle = 2.0 * 0.5f64.acos() - 0.5 * 3.0f64.sqrt();
        assert_relative_eq!(region_measure(&m, &lens).unwrap(), oracle, epsilon = 1e-13);
        let m3 = ManifoldModel::euclidean(3).unwrap();
        let lens3 = Region::ball([0.0, 0.0, 0.0], 1.0).intersect(Region::ball([1.0, 0.0, 0.0], 1.0));
        // π(4r+d)(2r−d)²/12 for equal radii
        let oracle3 = PI * 5.0 * 1.0 / 12.0;
        assert_relative_eq!(region_measure(&m3, &lens3).unwrap(), oracle3, epsilon = 1e-13);
    }

    #[test]
    fn annulus_and_complements() {
        let m = e2();
        let annulus = Region::ball([0.0, 0.0], 5.0).intersect(Region::ball([0.0, 0.0], 2.0).complement());
        assert_relative_eq!(region_measure(&m, &annulus).unwrap(), 21.0 * PI, epsilon = 1e-13);
        let outside = Region::ball([0.0, 0.0], 1.0).complement();
        assert!(region_measure(&m, &outside).unwrap().is_infinite());
        let hs = Region::half_space(vec![1.0, 0.0], 0.0);
        let e_c_out = hs.complement().intersect(Region::ball([0.0, 0.0], 1.0).complement());
        assert!(region_measure(&m, &e_c_out).unwrap().is_infinite());
    }

    #[test]
    fn torus_complement_involution() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 3.0]).unwrap();
        let a = Region::arc_box(vec![[1.0, 2.5], [-0.5, 1.0]]);
        let m = region_measure(&t, &a).unwrap() + region_measure(&t, &a.clone().complement()).unwrap();
        assert_relative_eq!(m, 6.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn hyperbolic_ball_volume() {
        let h = ManifoldModel::hyperbolic3();
        let v = region_measure(&h, &Region::ball([0.0, 0.0, 0.0], 1.0)).unwrap();
        // ∫₀¹ 4π sinh² r dr
        assert_relative_eq!(v, PI * (2.0f64.sinh() - 2.0), epsilon = 1e-13);
    }

    #[test]
    fn gaussian_disk_mass() {
        let g = ManifoldModel::gaussian(2).unwrap();
        let v = region_measure(&g, &Region::ball([0.0, 0.0], 1.0)).unwrap();
        assert_relative_eq!(v, 1.0 - (-0.5f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn overlapping_union_rejected() {
        let m = e2();
        let u = Region::ball([0.0, 0.0], 1.0).union(Region::ball([0.5, 0.0], 1.0));
        assert!(matches!(region_check(&m, &u), Err(Error::UnsupportedRegion(_))));
        let ok = Region::ball([0.0, 0.0], 1.0).union(Region::ball([3.0, 0.0], 1.0));
        region_check(&m, &ok).unwrap();
        assert_relative_eq!(region_measure(&m, &ok).unwrap(), 2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn unsupported_pairs_rejected() {
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        let hs = Region::half_space(vec![0.0, 0.0, 1.0], 0.0);
        assert!(region_check(&s, &hs).is_err());
        let m = e2();
        let tri = Region::ball([0.0, 0.0], 1.0)
            .intersect(Region::ball([1.0, 0.0], 1.0))
            .intersect(Region::ball([0.5, 0.8], 1.0));
        assert!(matches!(region_measure(&m, &tri), Err(Error::UnsupportedRegion(_))));
    }
}
