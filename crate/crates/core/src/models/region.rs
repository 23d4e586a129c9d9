//! Measurable regions and their membership predicates.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::intervals::IntervalSet;
use super::{dot, norm, ManifoldModel, ModelKind, Point};
use crate::error::{invalid, Error, Result};

/// A measurable set built from closed-form primitives.
///
/// Boundaries are excluded (strict inequalities everywhere); they have measure
/// zero and never matter for integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    FullSpace,
    GeodesicBall {
        center: Point,
        radius: f64,
    },
    /// One interval `(a, b)` per torus axis, read modulo the axis length. On
    /// `Sphere(1, r)` the single interval is in arclength.
    Arc {
        intervals: Vec<[f64; 2]>,
    },
    /// Spherical cap of polar angle `angle` around `pole`.
    Cap {
        pole: Point,
        angle: f64,
    },
    /// `{x : ⟨normal, x⟩ > offset}`.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `{x ≠ 0 : ∠(x, axis) < half_angle}`.
    Cone {
        axis: Vec<f64>,
        half_angle: f64,
    },
    Complement {
        of: Box<Region>,
    },
    Intersection {
        a: Box<Region>,
        b: Box<Region>,
    },
    /// Disjoint union.
    Union {
        a: Box<Region>,
        b: Box<Region>,
    },
}

impl Region {
    pub fn empty() -> Region {
        Region::FullSpace.complement()
    }

    pub fn ball(center: impl Into<Point>, radius: f64) -> Region {
        Region::GeodesicBall {
            center: center.into(),
            radius,
        }
    }

    /// Single-axis arc `(a, b)`.
    pub fn arc(a: f64, b: f64) -> Region {
        Region::Arc {
            intervals: vec![[a, b]],
        }
    }

    pub fn arc_box(intervals: Vec<[f64; 2]>) -> Region {
        Region::Arc { intervals }
    }

    pub fn cap(pole: impl Into<Point>, angle: f64) -> Region {
        Region::Cap {
            pole: pole.into(),
            angle,
        }
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Region {
        Region::HalfSpace { normal, offset }
    }

    pub fn cone(axis: Vec<f64>, half_angle: f64) -> Region {
        Region::Cone { axis, half_angle }
    }

    /// `Mᶜ`; a double complement collapses to the region itself.
    pub fn complement(self) -> Region {
        match self {
            Region::Complement { of } => *of,
            other => Region::Complement { of: Box::new(other) },
        }
    }

    pub fn intersect(self, other: Region) -> Region {
        Region::Intersection {
            a: Box::new(self),
            b: Box::new(other),
        }
    }

    pub fn union(self, other: Region) -> Region {
        Region::Union {
            a: Box::new(self),
            b: Box::new(other),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, Region::FullSpace)
    }

    pub fn is_empty_literal(&self) -> bool {
        matches!(self, Region::Complement { of } if of.is_full())
    }

    /// Checks parameters and model compatibility of every node, without the
    /// measure or disjointness checks (see [`super::region_check`]).
    pub(crate) fn check_shape(&self, model: &ManifoldModel) -> Result<()> {
        let n = model.dimension();
        match self {
            Region::FullSpace => Ok(()),
            Region::GeodesicBall { center, radius } => {
                model.check_point(center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("ball radius must be positive and finite"));
                }
                Ok(())
            }
            Region::Arc { intervals } => {
                let axes = match model.kind() {
                    ModelKind::FlatTorus { lengths } => lengths.len(),
                    ModelKind::Sphere { n: 1, .. } => 1,
                    _ => {
                        return Err(Error::UnsupportedRegion(format!(
                            "arcs need a flat torus or a circle, not {}",
                            model.label()
                        )))
                    }
                };
                if intervals.len() != axes {
                    return Err(Error::DimensionMismatch {
                        expected: axes,
                        got: intervals.len(),
                    });
                }
                for [a, b] in intervals {
                    if !(a.is_finite() && b.is_finite() && b > a) {
                        return Err(invalid("arc intervals need finite a < b"));
                    }
                }
                Ok(())
            }
            Region::Cap { pole, angle } => {
                if !matches!(model.kind(), ModelKind::Sphere { .. }) {
                    return Err(Error::UnsupportedRegion(format!(
                        "caps live on spheres, not {}",
                        model.label()
                    )));
                }
                model.check_point(pole)?;
                if !(*angle > 0.0 && *angle <= PI) {
                    return Err(invalid("cap angle must lie in (0, π]"));
                }
                Ok(())
            }
            Region::HalfSpace { normal, offset } => {
                if !matches!(
                    model.kind(),
                    ModelKind::Euclidean { .. } | ModelKind::GaussianSpace { .. }
                ) {
                    return Err(Error::UnsupportedRegion(format!(
                        "half-spaces need a Euclidean or Gaussian model, not {}",
                        model.label()
                    )));
                }
                if normal.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: normal.len(),
                    });
                }
                if !(norm(normal) > 0.0) || !offset.is_finite() {
                    return Err(invalid("half-space needs a nonzero normal and finite offset"));
                }
                Ok(())
            }
            Region::Cone { axis, half_angle } => {
                if !matches!(model.kind(), ModelKind::Euclidean { .. }) {
                    return Err(Error::UnsupportedRegion(format!(
                        "cones need a Euclidean model, not {}",
                        model.label()
                    )));
                }
                if axis.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: axis.len(),
                    });
                }
                if !(norm(axis) > 0.0) {
                    return Err(invalid("cone axis must be nonzero"));
                }
                if !(*half_angle > 0.0 && *half_angle <= PI) {
                    return Err(invalid("cone half-angle must lie in (0, π]"));
                }
                Ok(())
            }
            Region::Complement { of } => of.check_shape(model),
            Region::Intersection { a, b } | Region::Union { a, b } => {
                a.check_shape(model)?;
                b.check_shape(model)
            }
        }
    }

    /// Membership for a chart point known to be valid.
    pub(crate) fn contains_raw(&self, model: &ManifoldModel, x: &[f64]) -> bool {
        match self {
            Region::FullSpace => true,
            Region::GeodesicBall { center, radius } => model.dist_unchecked(x, &center.0) < *radius,
            Region::Arc { intervals } => match model.kind() {
                ModelKind::FlatTorus { lengths } => intervals
                    .iter()
                    .zip(lengths)
                    .zip(x)
                    .all(|(([a, b], l), xi)| IntervalSet::interval(*a, *b, Some(*l)).contains(*xi)),
                _ => {
                    let [a, b] = intervals[0];
                    IntervalSet::interval(a, b, model.line_period()).contains(model.line_coord(x))
                }
            },
            Region::Cap { pole, angle } => {
                let r = match model.kind() {
                    ModelKind::Sphere { radius, .. } => *radius,
                    _ => 1.0,
                };
                model.dist_unchecked(x, &pole.0) < angle * r
            }
            Region::HalfSpace { normal, offset } => dot(normal, x) > *offset,
            Region::Cone { axis, half_angle } => {
                let nx = norm(x);
                nx > 0.0 && cone_angle_lt(dot(axis, x) / (norm(axis) * nx), *half_angle)
            }
            Region::Complement { of } => !of.contains_raw(model, x),
            Region::Intersection { a, b } => a.contains_raw(model, x) && b.contains_raw(model, x),
            Region::Union { a, b } => a.contains_raw(model, x) || b.contains_raw(model, x),
        }
    }

    /// The region as a union of intervals of the line coordinate, for
    /// one-dimensional models.
    pub(crate) fn to_intervals(&self, model: &ManifoldModel) -> Result<IntervalSet> {
        let period = model.line_period();
        Ok(match self {
            Region::FullSpace => IntervalSet::full(period),
            Region::GeodesicBall { center, radius } => {
                let c = model.line_coord(&center.0);
                IntervalSet::interval(c - radius, c + radius, period)
            }
            Region::Arc { intervals } => {
                let [a, b] = intervals[0];
                IntervalSet::interval(a, b, period)
            }
            Region::Cap { pole, angle } => {
                let r = match model.kind() {
                    ModelKind::Sphere { radius, .. } => *radius,
                    _ => 1.0,
                };
                let c = model.line_coord(&pole.0);
                IntervalSet::interval(c - angle * r, c + angle * r, period)
            }
            Region::HalfSpace { normal, offset } => {
                let t = offset / normal[0];
                if normal[0] > 0.0 {
                    IntervalSet::interval(t, f64::INFINITY, None)
                } else {
                    IntervalSet::interval(f64::NEG_INFINITY, t, None)
                }
            }
            Region::Cone { axis, half_angle } => {
                // In one dimension a cone is the open ray along the axis
                // (plus the opposite ray only when the angle exceeds π, which is excluded).
                let _ = half_angle;
                if axis[0] > 0.0 {
                    IntervalSet::interval(0.0, f64::INFINITY, None)
                } else {
                    IntervalSet::interval(f64::NEG_INFINITY, 0.0, None)
                }
            }
            Region::Complement { of } => of.to_intervals(model)?.complement(),
            Region::Intersection { a, b } => a.to_intervals(model)?.intersect(&b.to_intervals(model)?),
            Region::Union { a, b } => a.to_intervals(model)?.union(&b.to_intervals(model)?),
        })
    }

    /// Radii about `p` where the geodesic sphere `S_r(p)` meets the region
    /// boundary tangentially or leaves it entirely. The section fraction
    /// `r ↦ |S_r(p) ∩ region| / |S_r(p)|` is smooth between consecutive values.
    pub(crate) fn critical_radii(&self, model: &ManifoldModel, p: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        if model.dimension() == 1 {
            if let Ok(iv) = self.to_intervals(model) {
                let u = model.line_coord(p);
                for e in iv.endpoints() {
                    match model.line_period() {
                        Some(l) => {
                            out.push((e - u).rem_euclid(l));
                            out.push((u - e).rem_euclid(l));
                        }
                        None => out.push((e - u).abs()),
                    }
                }
            }
        } else {
            self.collect_critical(model, p, &mut out);
        }
        out.retain(|r| r.is_finite() && *r > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
        out
    }

    fn collect_critical(&self, model: &ManifoldModel, p: &[f64], out: &mut Vec<f64>) {
        match self {
            Region::FullSpace => {}
            Region::GeodesicBall { center, radius } => {
                let d = model.dist_unchecked(p, &center.0);
                out.push((d - radius).abs());
                out.push(d + radius);
                if let ModelKind::Sphere { radius: rs, .. } = model.kind() {
                    out.push(2.0 * PI * rs - d - radius);
                }
            }
            Region::Cap { pole, angle } => {
                if let ModelKind::Sphere { radius: rs, .. } = model.kind() {
                    let d = model.dist_unchecked(p, &pole.0) / rs;
                    for psi in [(d - angle).abs(), d + angle, 2.0 * PI - d - angle] {
                        if psi <= PI {
                            out.push(psi * rs);
                        }
                    }
                }
            }
            Region::Arc { intervals } => {
                // Torus boxes: distances to each face hyperplane and to the corners.
                if let ModelKind::FlatTorus { lengths } = model.kind() {
                    for (i, ([a, b], l)) in intervals.iter().zip(lengths).enumerate() {
                        for e in [a, b] {
                            out.push(super::wrap_centered(e - p[i], *l).abs());
                        }
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                let nn = norm(normal);
                out.push((dot(normal, p) - offset).abs() / nn);
            }
            Region::Cone { axis, half_angle } => {
                let np = norm(p);
                out.push(np);
                if np > 0.0 {
                    let c = (dot(axis, p) / (norm(axis) * np)).clamp(-1.0, 1.0);
                    let gamma = c.acos();
                    let delta = (gamma - half_angle).abs();
                    if delta < PI / 2.0 {
                        out.push(np * delta.sin());
                    }
                    if p.len() == 2 {
                        // the two boundary rays, possibly on the far side
                        let phi_a = axis[1].atan2(axis[0]);
                        for sgn in [-1.0, 1.0] {
                            let phi = phi_a + sgn * half_angle;
                            let u = [phi.cos(), phi.sin()];
                            if dot(&u, p) > 0.0 {
                                out.push((u[0] * p[1] - u[1] * p[0]).abs());
                            }
                        }
                    }
                }
            }
            Region::Complement { of } => of.collect_critical(model, p, out),
            Region::Intersection { a, b } | Region::Union { a, b } => {
                a.collect_critical(model, p, out);
                b.collect_critical(model, p, out);
            }
        }
    }

    /// A chart ball `(center, radius)` containing the region, when it is bounded
    /// in the chart. Only meaningful for Euclidean-chart models.
    pub(crate) fn chart_bound(&self, model: &ManifoldModel) -> Option<(Vec<f64>, f64)> {
        match self {
            Region::GeodesicBall { center, radius } => match model.kind() {
                ModelKind::Hyperbolic3 => {
                    // Geodesic ball about c is a Euclidean ball; bound it crudely
                    // by the ball about the origin of radius d(0,c)+r.
                    let rho = super::hyperbolic::origin_distance(center.norm()) + radius;
                    Some((vec![0.0; 3], super::hyperbolic::ball_radius(rho)))
                }
                _ => Some((center.0.to_vec(), *radius)),
            },
            Region::Intersection { a, b } => match (a.chart_bound(model), b.chart_bound(model)) {
                (Some(x), Some(y)) => Some(if x.1 <= y.1 { x } else { y }),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            },
            Region::Union { a, b } => {
                let (ca, ra) = a.chart_bound(model)?;
                let (cb, rb) = b.chart_bound(model)?;
                let d = super::dist_sq(&ca, &cb).sqrt();
                if d + rb <= ra {
                    Some((ca, ra))
                } else if d + ra <= rb {
                    Some((cb, rb))
                } else {
                    let r = 0.5 * (d + ra + rb);
                    let t = if d > 0.0 { (r - ra) / d } else { 0.0 };
                    let c = ca.iter().zip(&cb).map(|(x, y)| x + t * (y - x)).collect();
                    Some((c, r))
                }
            }
            _ => None,
        }
    }
}

/// `acos(c) < beta` without the acos.
pub(crate) fn cone_angle_lt(c: f64, beta: f64) -> bool {
    c > beta.cos()
}

/// Normalised solid angle of a circular cone of half-angle `beta` in ℝⁿ,
/// i.e. `|{ω ∈ Sⁿ⁻¹ : ∠(ω, axis) < beta}| / |Sⁿ⁻¹|`.
pub fn cone_fraction(n: usize, beta: f64) -> f64 {
    match n {
        1 => 0.5,
        2 => beta / PI,
        _ => {
            let a = (n as f64 - 1.0) / 2.0;
            let half = |b: f64| 0.5 * statrs::function::beta::beta_reg(a, 0.5, b.sin().powi(2));
            if beta <= PI / 2.0 {
                half(beta)
            } else {
                1.0 - half(PI - beta)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cone_membership() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let c = Region::cone(vec![1.0, 0.0], PI / 4.0);
        assert!(c.contains_raw(&m, &[1.0, 0.5]));
        assert!(!c.contains_raw(&m, &[1.0, 1.5]));
        assert!(!c.contains_raw(&m, &[0.0, 0.0]));
    }

    #[test]
    fn complement_and_intersection_membership() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let b = Region::ball([0.0, 0.0], 1.0).complement();
        assert!(!b.contains_raw(&m, &[0.5, 0.0]));
        let i = Region::half_space(vec![1.0, 0.0], 0.0).intersect(Region::ball([0.0, 0.0], 2.0));
        assert!(i.contains_raw(&m, &[1.0, 1.0]));
        assert!(!i.contains_raw(&m, &[-1.0, 1.0]));
    }

    #[test]
    fn cone_fractions() {
        assert_relative_eq!(cone_fraction(2, PI / 4.0), 0.25, epsilon = 1e-15);
        assert_relative_eq!(cone_fraction(3, PI / 2.0), 0.5, epsilon = 1e-14);
        // (1 − cos β)/2 on S²
        assert_relative_eq!(cone_fraction(3, 0.7), (1.0 - 0.7f64.cos()) / 2.0, epsilon = 1e-13);
        assert_relative_eq!(cone_fraction(3, 2.5), (1.0 - 2.5f64.cos()) / 2.0, epsilon = 1e-13);
        assert_relative_eq!(cone_fraction(4, PI / 2.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn interval_form_of_line_regions() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let r = Region::ball([0.5], 0.5).union(Region::half_space(vec![-1.0], 1.0));
        let iv = r.to_intervals(&m).unwrap();
        assert_eq!(iv.pieces(), &[(f64::NEG_INFINITY, -1.0), (0.0, 1.0)]);
    }

    #[test]
    fn critical_radii_of_a_disk() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let r = Region::ball([3.0, 0.0], 1.0);
        assert_eq!(r.critical_radii(&m, &[0.0, 0.0]), vec![2.0, 4.0]);
    }
}
