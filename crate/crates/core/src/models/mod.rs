//! Model geometries: charts, distances, measures and measurable regions.
//!
//! Chart conventions (fixed for the whole crate):
//!
//! | model              | coordinates                                         |
//! |--------------------|-----------------------------------------------------|
//! | `Euclidean(n)`     | Cartesian, `n` entries                              |
//! | `FlatTorus(L)`     | one coordinate per axis, read modulo `Lᵢ`           |
//! | `Sphere(1, r)`     | embedding in ℝ², `|x| = r`; arcs use arclength      |
//! | `Sphere(2, r)`     | embedding in ℝ³, `|x| = r`                          |
//! | `Hyperbolic3`      | Poincaré ball model, `|x| < 1`                      |
//! | `GaussianSpace(n)` | Cartesian; measure is the standard normal law γ     |
//!
//! The Poincaré ball is used for hyperbolic space because geodesic balls about
//! the origin are Euclidean balls, which keeps sampling and section geometry
//! simple; other centres are reached through the Möbius isometries in
//! [`hyperbolic`].

pub mod hyperbolic;
pub mod intervals;
mod measure;
pub mod region;
pub mod sample;
pub mod section;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

pub use measure::{region_check, region_contains, region_measure};
pub use region::{cone_fraction, Region};
pub use sample::{sample_region, RegionSampler};
pub use section::{section, Section, SphExpr};

/// The closed-form geometries supported by the laboratory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    Euclidean { n: usize },
    FlatTorus { lengths: Vec<f64> },
    Sphere { n: usize, radius: f64 },
    Hyperbolic3,
    GaussianSpace { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeClass {
    Finite(f64),
    Infinite,
}

impl VolumeClass {
    pub fn is_finite(&self) -> bool {
        matches!(self, VolumeClass::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            VolumeClass::Finite(v) => Some(*v),
            VolumeClass::Infinite => None,
        }
    }
}

/// A validated model manifold. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelKind", into = "ModelKind")]
pub struct ManifoldModel {
    kind: ModelKind,
}

impl TryFrom<ModelKind> for ManifoldModel {
    type Error = Error;

    fn try_from(kind: ModelKind) -> Result<Self> {
        ManifoldModel::new(kind)
    }
}

impl From<ManifoldModel> for ModelKind {
    fn from(m: ManifoldModel) -> Self {
        m.kind
    }
}

/// A point in the chart of a model. See the module docs for conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub SmallVec<[f64; 4]>);

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::new(&v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Signed representative of `d` modulo `l` in `[-l/2, l/2)`.
pub(crate) fn wrap_centered(d: f64, l: f64) -> f64 {
    let m = d.rem_euclid(l);
    if m >= 0.5 * l {
        m - l
    } else {
        m
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0 + 1.0)
}

/// Surface area of the unit sphere Sⁿ⁻¹ ⊂ ℝⁿ (α_{n-1}).
pub fn unit_sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0)
}

impl ManifoldModel {
    pub fn new(kind: ModelKind) -> Result<Self> {
        match &kind {
            ModelKind::Euclidean { n } | ModelKind::GaussianSpace { n } => {
                if *n == 0 {
                    return Err(invalid("dimension must be at least 1"));
                }
            }
            ModelKind::FlatTorus { lengths } => {
                if lengths.is_empty() {
                    return Err(invalid("flat torus needs at least one length"));
                }
                if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(invalid("torus lengths must be positive and finite"));
                }
            }
            ModelKind::Sphere { n, radius } => {
                if !(*n == 1 || *n == 2) {
                    return Err(invalid("only S¹ and S² are supported"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("sphere radius must be positive"));
                }
            }
            ModelKind::Hyperbolic3 => {}
        }
        Ok(ManifoldModel { kind })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(ModelKind::Euclidean { n })
    }

    pub fn flat_torus(lengths: Vec<f64>) -> Result<Self> {
        Self::new(ModelKind::FlatTorus { lengths })
    }

    pub fn sphere(n: usize, radius: f64) -> Result<Self> {
        Self::new(ModelKind::Sphere { n, radius })
    }

    pub fn hyperbolic3() -> Self {
        ManifoldModel {
            kind: ModelKind::Hyperbolic3,
        }
    }

    pub fn gaussian(n: usize) -> Result<Self> {
        Self::new(ModelKind::GaussianSpace { n })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Intrinsic dimension.
    pub fn dimension(&self) -> usize {
        match &self.kind {
            ModelKind::Euclidean { n } | ModelKind::GaussianSpace { n } => *n,
            ModelKind::FlatTorus { lengths } => lengths.len(),
            ModelKind::Sphere { n, .. } => *n,
            ModelKind::Hyperbolic3 => 3,
        }
    }

    /// Number of chart coordinates of a point.
    pub fn chart_size(&self) -> usize {
        match &self.kind {
            ModelKind::Sphere { n, .. } => n + 1,
            _ => self.dimension(),
        }
    }

    pub fn volume_class(&self) -> VolumeClass {
        match &self.kind {
            ModelKind::Euclidean { .. } | ModelKind::Hyperbolic3 => VolumeClass::Infinite,
            ModelKind::GaussianSpace { .. } => VolumeClass::Finite(1.0),
            ModelKind::FlatTorus { lengths } => VolumeClass::Finite(lengths.iter().product()),
            ModelKind::Sphere { n: 1, radius } => VolumeClass::Finite(2.0 * PI * radius),
            ModelKind::Sphere { radius, .. } => VolumeClass::Finite(4.0 * PI * radius * radius),
        }
    }

    /// Largest possible geodesic distance, `None` when unbounded.
    pub fn diameter(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::FlatTorus { lengths } => {
                Some(0.5 * lengths.iter().map(|l| l * l).sum::<f64>().sqrt())
            }
            ModelKind::Sphere { radius, .. } => Some(PI * radius),
            _ => None,
        }
    }

    /// Whether the model measure has a non-constant density w.r.t. the Riemannian volume.
    pub fn is_weighted(&self) -> bool {
        matches!(self.kind, ModelKind::GaussianSpace { .. })
    }

    /// Whether the heat kernel depends on `d(x, y)` only.
    pub fn is_isotropic(&self) -> bool {
        match &self.kind {
            ModelKind::GaussianSpace { .. } => false,
            ModelKind::FlatTorus { lengths } => lengths.len() == 1,
            _ => true,
        }
    }

    /// Density of the model measure w.r.t. the Riemannian volume.
    pub fn density(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::GaussianSpace { n } => {
                let r2 = dot(x, x);
                (-0.5 * r2).exp() / (2.0 * PI).powf(*n as f64 / 2.0)
            }
            _ => 1.0,
        }
    }

    /// Riemannian area of the geodesic sphere of radius `r` (point count in 1D).
    pub fn sphere_area(&self, r: f64) -> f64 {
        match &self.kind {
            ModelKind::Euclidean { n } | ModelKind::GaussianSpace { n } => {
                unit_sphere_area(*n) * r.powi(*n as i32 - 1)
            }
            ModelKind::FlatTorus { lengths } if lengths.len() == 1 => 2.0,
            ModelKind::FlatTorus { lengths } => {
                unit_sphere_area(lengths.len()) * r.powi(lengths.len() as i32 - 1)
            }
            ModelKind::Sphere { n: 1, .. } => 2.0,
            ModelKind::Sphere { radius, .. } => 2.0 * PI * radius * (r / radius).sin(),
            ModelKind::Hyperbolic3 => 4.0 * PI * r.sinh().powi(2),
        }
    }

    /// Circumference-type factor of the geodesic sphere per unit angular measure,
    /// i.e. `J(r)` with `area = J(r)·|S^{n-1}|`.
    pub fn radial_jacobian(&self, r: f64) -> f64 {
        match &self.kind {
            ModelKind::Sphere { n: 2, radius } => radius * (r / radius).sin(),
            ModelKind::Hyperbolic3 => r.sinh().powi(2),
            _ => {
                let d = self.dimension();
                if d == 1 {
                    1.0
                } else {
                    r.powi(d as i32 - 1)
                }
            }
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        let expected = self.chart_size();
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        if x.0.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        match &self.kind {
            ModelKind::Sphere { radius, .. } => {
                let r = x.norm();
                if ((r - radius) / radius).abs() > 1e-12 {
                    return Err(invalid(format!(
                        "point is not on the sphere of radius {radius} (|x| = {r})"
                    )));
                }
            }
            ModelKind::Hyperbolic3 => {
                if x.norm() >= 1.0 {
                    return Err(invalid("Poincaré ball points need |x| < 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Geodesic distance between two valid points.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist_unchecked(&x.0, &y.0))
    }

    pub(crate) fn dist_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Euclidean { .. } | ModelKind::GaussianSpace { .. } => dist_sq(x, y).sqrt(),
            ModelKind::FlatTorus { lengths } => lengths
                .iter()
                .zip(x.iter().zip(y))
                .map(|(l, (a, b))| wrap_centered(a - b, *l).powi(2))
                .sum::<f64>()
                .sqrt(),
            ModelKind::Sphere { n: 1, radius } => {
                let c = x[0] * y[1] - x[1] * y[0];
                let d = dot(x, y);
                radius * c.atan2(d).abs()
            }
            ModelKind::Sphere { radius, .. } => {
                let c = cross3(x, y);
                radius * norm(&c).atan2(dot(x, y))
            }
            ModelKind::Hyperbolic3 => hyperbolic::distance(x, y),
        }
    }

    /// Chart coordinate along the circle for one-dimensional models.
    pub(crate) fn line_coord(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Sphere { n: 1, radius } => radius * x[1].atan2(x[0]).rem_euclid(2.0 * PI),
            ModelKind::FlatTorus { lengths } => x[0].rem_euclid(lengths[0]),
            _ => x[0],
        }
    }

    /// Inverse of [`line_coord`](Self::line_coord).
    pub(crate) fn line_point(&self, u: f64) -> Point {
        match &self.kind {
            ModelKind::Sphere { n: 1, radius } => {
                let a = u / radius;
                Point::new(&[radius * a.cos(), radius * a.sin()])
            }
            ModelKind::FlatTorus { lengths } => Point::new(&[u.rem_euclid(lengths[0])]),
            _ => Point::new(&[u]),
        }
    }

    /// Period of the line coordinate, if the model is a circle.
    pub(crate) fn line_period(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Sphere { n: 1, radius } => Some(2.0 * PI * radius),
            ModelKind::FlatTorus { lengths } if lengths.len() == 1 => Some(lengths[0]),
            _ => None,
        }
    }

    /// Short human-readable label used in reports.
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Euclidean { n } => format!("Euclidean({n})"),
            ModelKind::FlatTorus { lengths } => {
                let ls: Vec<String> = lengths.iter().map(|l| format!("{l}")).collect();
                format!("FlatTorus([{}])", ls.join(","))
            }
            ModelKind::Sphere { n, radius } => format!("Sphere({n},{radius})"),
            ModelKind::Hyperbolic3 => "Hyperbolic3".to_string(),
            ModelKind::GaussianSpace { n } => format!("GaussianSpace({n})"),
        }
    }

    /// A canonical base point (origin, north pole, ...).
    pub fn origin(&self) -> Point {
        match &self.kind {
            ModelKind::Sphere { n: 1, radius } => Point::new(&[*radius, 0.0]),
            ModelKind::Sphere { radius, .. } => Point::new(&[0.0, 0.0, *radius]),
            _ => Point::new(&vec![0.0; self.chart_size()]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_pythagoras() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let d = m.distance(&Point::from([0.0, 0.0]), &Point::from([3.0, 4.0])).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn torus_wraps_around() {
        let m = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let d = m.distance(&Point::from([0.1]), &Point::from([6.2])).unwrap();
        // min over translates by 2π of |0.1 - 6.2|
        let oracle = (-2..=2)
            .map(|k| (0.1 - 6.2 + 2.0 * PI * k as f64).abs())
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(d, oracle, epsilon = 1e-14);
        assert_relative_eq!(d, 0.183185307179586, epsilon = 1e-12);
    }

    #[test]
    fn antipodes_on_unit_sphere() {
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let d = m
            .distance(&Point::from([0.0, 0.0, 1.0]), &Point::from([0.0, 0.0, -1.0]))
            .unwrap();
        assert_relative_eq!(d, PI, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let err = m.distance(&Point::from([0.0]), &Point::from([1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, got: 1 });
    }

    #[test]
    fn off_sphere_points_rejected() {
        let m = ManifoldModel::sphere(2, 2.0).unwrap();
        assert!(m.check_point(&Point::from([0.0, 0.0, 1.0])).is_err());
        assert!(m.check_point(&Point::from([0.0, 0.0, 2.0])).is_ok());
    }

    #[test]
    fn volume_classes() {
        let t = ManifoldModel::flat_torus(vec![2.0, 3.0]).unwrap();
        assert_eq!(t.volume_class(), VolumeClass::Finite(6.0));
        let s = ManifoldModel::sphere(2, 1.0).unwrap();
        assert_relative_eq!(s.volume_class().finite().unwrap(), 4.0 * PI);
        assert_eq!(ManifoldModel::gaussian(3).unwrap().volume_class(), VolumeClass::Finite(1.0));
        assert_eq!(ManifoldModel::hyperbolic3().volume_class(), VolumeClass::Infinite);
        assert!(ManifoldModel::sphere(3, 1.0).is_err());
        assert!(ManifoldModel::flat_torus(vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn unit_sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }
}
