//! Sections of regions by geodesic spheres.
//!
//! For a point `x` and radius `r`, the section is the set of unit directions
//! `u` at `x` with `exp_x(r u)` inside the region. In two dimensions it is a
//! finite union of arcs of the direction circle; in three dimensions a boolean
//! combination of caps of the direction sphere.

use std::f64::consts::PI;

use super::intervals::IntervalSet;
use super::region::Region;
use super::{cross3, dot, hyperbolic, norm, ManifoldModel, ModelKind};
use crate::error::{Error, Result};
use crate::quadrature::gk;

const TAU: f64 = 2.0 * PI;

/// Boolean combination of caps `{u ∈ S² : ⟨u, axis⟩ > cos_gamma}`.
#[derive(Debug, Clone, PartialEq)]
pub enum SphExpr {
    Full,
    Empty,
    Cap { axis: [f64; 3], cos_gamma: f64 },
    Not(Box<SphExpr>),
    And(Box<SphExpr>, Box<SphExpr>),
    Or(Box<SphExpr>, Box<SphExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    /// One-dimensional models: whether `x + r` and `x − r` lie in the region.
    Line { plus: bool, minus: bool },
    /// Angles, in the model's tangent frame at `x`.
    Arcs(IntervalSet),
    Sph(SphExpr),
}

impl Section {
    /// Normalised measure of the section in `[0, 1]`.
    pub fn fraction(&self) -> f64 {
        match self {
            Section::Line { plus, minus } => 0.5 * (*plus as u8 as f64 + *minus as u8 as f64),
            Section::Arcs(a) => a.length() / TAU,
            Section::Sph(e) => e.fraction(),
        }
    }
}

fn cap(axis: [f64; 3], cos_gamma: f64) -> SphExpr {
    if cos_gamma <= -1.0 {
        SphExpr::Full
    } else if cos_gamma >= 1.0 {
        SphExpr::Empty
    } else {
        SphExpr::Cap { axis, cos_gamma }
    }
}

impl SphExpr {
    fn not(self) -> SphExpr {
        match self {
            SphExpr::Full => SphExpr::Empty,
            SphExpr::Empty => SphExpr::Full,
            SphExpr::Not(e) => *e,
            e => SphExpr::Not(Box::new(e)),
        }
    }

    fn and(self, other: SphExpr) -> SphExpr {
        match (self, other) {
            (SphExpr::Empty, _) | (_, SphExpr::Empty) => SphExpr::Empty,
            (SphExpr::Full, e) | (e, SphExpr::Full) => e,
            (a, b) => SphExpr::And(Box::new(a), Box::new(b)),
        }
    }

    fn or(self, other: SphExpr) -> SphExpr {
        match (self, other) {
            (SphExpr::Full, _) | (_, SphExpr::Full) => SphExpr::Full,
            (SphExpr::Empty, e) | (e, SphExpr::Empty) => e,
            (a, b) => SphExpr::Or(Box::new(a), Box::new(b)),
        }
    }

    fn caps(&self, out: &mut Vec<([f64; 3], f64)>) {
        match self {
            SphExpr::Cap { axis, cos_gamma } => out.push((*axis, *cos_gamma)),
            SphExpr::Not(e) => e.caps(out),
            SphExpr::And(a, b) | SphExpr::Or(a, b) => {
                a.caps(out);
                b.caps(out);
            }
            _ => {}
        }
    }

    pub fn contains(&self, u: &[f64; 3]) -> bool {
        match self {
            SphExpr::Full => true,
            SphExpr::Empty => false,
            SphExpr::Cap { axis, cos_gamma } => dot(axis, u) > *cos_gamma,
            SphExpr::Not(e) => !e.contains(u),
            SphExpr::And(a, b) => a.contains(u) && b.contains(u),
            SphExpr::Or(a, b) => a.contains(u) || b.contains(u),
        }
    }

    /// Normalised area. Single caps are exact; composite expressions are
    /// integrated over latitude bands about the first cap's axis, with the
    /// band edges at every cap's tangency latitudes.
    pub fn fraction(&self) -> f64 {
        match self {
            SphExpr::Full => 1.0,
            SphExpr::Empty => 0.0,
            SphExpr::Cap { cos_gamma, .. } => 0.5 * (1.0 - cos_gamma),
            SphExpr::Not(e) => 1.0 - e.fraction(),
            _ => {
                let mut caps = Vec::new();
                self.caps(&mut caps);
                let z = caps[0].0;
                let (e1, e2) = orthonormal_frame(&z);
                let local = self.rotate(&e1, &e2, &z);
                let mut breaks = vec![-1.0, 1.0];
                let mut lc = Vec::new();
                local.caps(&mut lc);
                for (w, c) in lc {
                    let theta = w[2].clamp(-1.0, 1.0).acos();
                    let gamma = c.clamp(-1.0, 1.0).acos();
                    for t in [theta - gamma, theta + gamma] {
                        if t > 0.0 && t < PI {
                            breaks.push(t.cos());
                        }
                    }
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let f = |t: f64| local.latitude_arcs(t).length() / TAU;
                let mut total = 0.0;
                for w in breaks.windows(2) {
                    if w[1] > w[0] {
                        total += gk::adaptive(&f, w[0], w[1], 1e-13, 1e-11, 40).value;
                    }
                }
                (0.5 * total).clamp(0.0, 1.0)
            }
        }
    }

    fn rotate(&self, e1: &[f64; 3], e2: &[f64; 3], z: &[f64; 3]) -> SphExpr {
        match self {
            SphExpr::Cap { axis, cos_gamma } => SphExpr::Cap {
                axis: [dot(axis, e1), dot(axis, e2), dot(axis, z)],
                cos_gamma: *cos_gamma,
            },
            SphExpr::Not(e) => SphExpr::Not(Box::new(e.rotate(e1, e2, z))),
            SphExpr::And(a, b) => SphExpr::And(Box::new(a.rotate(e1, e2, z)), Box::new(b.rotate(e1, e2, z))),
            SphExpr::Or(a, b) => SphExpr::Or(Box::new(a.rotate(e1, e2, z)), Box::new(b.rotate(e1, e2, z))),
            e => e.clone(),
        }
    }

    /// Azimuth set of the expression on the latitude circle `u₃ = t`.
    fn latitude_arcs(&self, t: f64) -> IntervalSet {
        let p = Some(TAU);
        match self {
            SphExpr::Full => IntervalSet::full(p),
            SphExpr::Empty => IntervalSet::empty(p),
            SphExpr::Cap { axis, cos_gamma } => {
                let s = (1.0 - t * t).max(0.0).sqrt();
                let a = s * axis[0].hypot(axis[1]);
                let rhs = cos_gamma - t * axis[2];
                half_circle_condition(a, rhs, axis[1].atan2(axis[0]))
            }
            SphExpr::Not(e) => e.latitude_arcs(t).complement(),
            SphExpr::And(a, b) => a.latitude_arcs(t).intersect(&b.latitude_arcs(t)),
            SphExpr::Or(a, b) => a.latitude_arcs(t).union(&b.latitude_arcs(t)),
        }
    }
}

/// `{φ : a·cos(φ − φ0) > rhs}` on the circle.
fn half_circle_condition(a: f64, rhs: f64, phi0: f64) -> IntervalSet {
    let p = Some(TAU);
    if a <= 1e-300 {
        return if 0.0 > rhs {
            IntervalSet::full(p)
        } else {
            IntervalSet::empty(p)
        };
    }
    let q = rhs / a;
    if q >= 1.0 {
        IntervalSet::empty(p)
    } else if q <= -1.0 {
        IntervalSet::full(p)
    } else {
        let w = q.acos();
        IntervalSet::interval(phi0 - w, phi0 + w, p)
    }
}

pub(crate) fn orthonormal_frame(z: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if z[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross3(&helper, z);
    let n1 = norm(&e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross3(z, &e1);
    (e1, e2)
}

/// Tangent frame of a model at `x` used for angular coordinates.
#[derive(Debug, Clone)]
pub(crate) enum Frame {
    Line,
    Plane,
    Sphere2 { xhat: [f64; 3], e1: [f64; 3], e2: [f64; 3], radius: f64 },
    Space3,
    Hyper3 { x: [f64; 3] },
}

impl Frame {
    pub(crate) fn at(model: &ManifoldModel, x: &[f64]) -> Frame {
        match model.kind() {
            ModelKind::Sphere { n: 2, radius } => {
                let xhat = [x[0] / radius, x[1] / radius, x[2] / radius];
                let (e1, e2) = orthonormal_frame(&xhat);
                Frame::Sphere2 { xhat, e1, e2, radius: *radius }
            }
            ModelKind::Hyperbolic3 => Frame::Hyper3 { x: [x[0], x[1], x[2]] },
            _ => match model.dimension() {
                1 => Frame::Line,
                2 => Frame::Plane,
                _ => Frame::Space3,
            },
        }
    }

    /// The point `exp_x(r·u(φ))` on two-dimensional models.
    pub(crate) fn exp2(&self, x: &[f64], r: f64, phi: f64) -> Vec<f64> {
        match self {
            Frame::Sphere2 { xhat, e1, e2, radius } => {
                let psi = r / radius;
                let (c, s) = (psi.cos(), psi.sin());
                let (cp, sp) = (phi.cos(), phi.sin());
                (0..3)
                    .map(|i| radius * (c * xhat[i] + s * (cp * e1[i] + sp * e2[i])))
                    .collect()
            }
            _ => vec![x[0] + r * phi.cos(), x[1] + r * phi.sin()],
        }
    }

    /// The point `exp_x(r·u)` on three-dimensional models.
    #[cfg(test)]
    pub(crate) fn exp3(&self, x: &[f64], r: f64, u: &[f64; 3]) -> Vec<f64> {
        match self {
            Frame::Hyper3 { x: p } => hyperbolic::exp_from(p, r, u).to_vec(),
            _ => (0..3).map(|i| x[i] + r * u[i]).collect(),
        }
    }
}

fn unsupported(msg: impl Into<String>) -> Error {
    Error::UnsupportedRegion(msg.into())
}

/// Section of `region` by the geodesic sphere of radius `r` about `x`.
pub fn section(model: &ManifoldModel, region: &Region, x: &[f64], r: f64) -> Result<Section> {
    let frame = Frame::at(model, x);
    match model.dimension() {
        1 => {
            let u = model.line_coord(x);
            let iv = region.to_intervals(model)?;
            Ok(Section::Line {
                plus: iv.contains(u + r),
                minus: iv.contains(u - r),
            })
        }
        2 => {
            if matches!(model.kind(), ModelKind::FlatTorus { .. }) {
                return Err(unsupported("sections on the two-dimensional torus"));
            }
            Ok(Section::Arcs(arcs(model, &frame, region, x, r)?))
        }
        3 => {
            if matches!(model.kind(), ModelKind::FlatTorus { .. } | ModelKind::GaussianSpace { .. }) {
                return Err(unsupported("sections on this three-dimensional model"));
            }
            Ok(Section::Sph(sph(model, &frame, region, x, r)?))
        }
        _ => Err(unsupported("sections above dimension three")),
    }
}

fn arcs(model: &ManifoldModel, frame: &Frame, region: &Region, x: &[f64], r: f64) -> Result<IntervalSet> {
    let p = Some(TAU);
    Ok(match region {
        Region::FullSpace => IntervalSet::full(p),
        Region::Complement { of } => arcs(model, frame, of, x, r)?.complement(),
        Region::Intersection { a, b } => arcs(model, frame, a, x, r)?.intersect(&arcs(model, frame, b, x, r)?),
        Region::Union { a, b } => arcs(model, frame, a, x, r)?.union(&arcs(model, frame, b, x, r)?),
        Region::GeodesicBall { center, radius } => match frame {
            Frame::Sphere2 { radius: rs, .. } => sphere_cap_arcs(frame, x, &center.0, radius / rs, r),
            _ => {
                let d = [center.0[0] - x[0], center.0[1] - x[1]];
                let dd = norm(&d);
                if dd + r <= *radius {
                    IntervalSet::full(p)
                } else if dd >= r + radius || r >= dd + radius {
                    IntervalSet::empty(p)
                } else {
                    // |x + r u − c|² < ρ²  ⇔  cos(φ − φ_c) > (r² + D² − ρ²)/(2rD)
                    half_circle_condition(2.0 * r * dd, r * r + dd * dd - radius * radius, d[1].atan2(d[0]))
                }
            }
        },
        Region::Cap { pole, angle } => sphere_cap_arcs(frame, x, &pole.0, *angle, r),
        Region::HalfSpace { normal, offset } => {
            let nn = norm(normal);
            half_circle_condition(r * nn, offset - dot(normal, x), normal[1].atan2(normal[0]))
        }
        Region::Cone { axis, half_angle } => {
            if *half_angle > PI / 2.0 {
                let flipped = Region::Cone {
                    axis: axis.iter().map(|v| -v).collect(),
                    half_angle: PI - half_angle,
                };
                arcs(model, frame, &flipped, x, r)?.complement()
            } else {
                let phi_a = axis[1].atan2(axis[0]);
                let mut set = IntervalSet::full(p);
                for phi_n in [phi_a + half_angle - PI / 2.0, phi_a - half_angle + PI / 2.0] {
                    let nv = [phi_n.cos(), phi_n.sin()];
                    set = set.intersect(&half_circle_condition(r, -dot(&nv, x), phi_n));
                }
                set
            }
        }
        Region::Arc { .. } => return Err(unsupported("arcs on a two-dimensional model")),
    })
}

/// Directions at `x` (geodesic distance `r`) landing within polar angle `alpha` of `q` on S².
fn sphere_cap_arcs(frame: &Frame, x: &[f64], q: &[f64], alpha: f64, r: f64) -> IntervalSet {
    let p = Some(TAU);
    let Frame::Sphere2 { xhat, e1, e2, radius } = frame else {
        unreachable!()
    };
    let _ = x;
    let qn = norm(q);
    let qhat = [q[0] / qn, q[1] / qn, q[2] / qn];
    let psi = r / radius;
    let cos_d = dot(xhat, &qhat).clamp(-1.0, 1.0);
    let sin_d = norm(&cross3(xhat, &qhat));
    // cos∠(y, q) = cos ψ cos D + sin ψ sin D cos(φ − φ_q)
    let a = psi.sin() * sin_d;
    let rhs = alpha.cos() - psi.cos() * cos_d;
    let phi_q = dot(&qhat, e2).atan2(dot(&qhat, e1));
    if a.abs() <= 1e-15 {
        return if 0.0 > rhs {
            IntervalSet::full(p)
        } else {
            IntervalSet::empty(p)
        };
    }
    half_circle_condition(a, rhs, phi_q)
}

fn sph(model: &ManifoldModel, frame: &Frame, region: &Region, x: &[f64], r: f64) -> Result<SphExpr> {
    Ok(match region {
        Region::FullSpace => SphExpr::Full,
        Region::Complement { of } => sph(model, frame, of, x, r)?.not(),
        Region::Intersection { a, b } => sph(model, frame, a, x, r)?.and(sph(model, frame, b, x, r)?),
        Region::Union { a, b } => sph(model, frame, a, x, r)?.or(sph(model, frame, b, x, r)?),
        Region::GeodesicBall { center, radius } => match frame {
            Frame::Hyper3 { x: p } => {
                let w = hyperbolic::translate_to_origin(p, &center.0);
                let nw = norm(&w);
                let dd = hyperbolic::origin_distance(nw);
                if dd + r <= *radius {
                    SphExpr::Full
                } else if dd >= r + radius || r >= dd + radius {
                    SphExpr::Empty
                } else {
                    // cosh d(y,c) = cosh r cosh D − sinh r sinh D cos∠
                    let q = (r.cosh() * dd.cosh() - radius.cosh()) / (r.sinh() * dd.sinh());
                    cap([w[0] / nw, w[1] / nw, w[2] / nw], q)
                }
            }
            _ => {
                let d = [center.0[0] - x[0], center.0[1] - x[1], center.0[2] - x[2]];
                let dd = norm(&d);
                if dd + r <= *radius {
                    SphExpr::Full
                } else if dd >= r + radius || r >= dd + radius {
                    SphExpr::Empty
                } else {
                    let q = (r * r + dd * dd - radius * radius) / (2.0 * r * dd);
                    cap([d[0] / dd, d[1] / dd, d[2] / dd], q)
                }
            }
        },
        Region::HalfSpace { normal, offset } => {
            let nn = norm(normal);
            let q = (offset - dot(normal, x)) / (r * nn);
            cap([normal[0] / nn, normal[1] / nn, normal[2] / nn], q)
        }
        Region::Cone { axis, half_angle } => {
            if norm(x) > 0.0 {
                return Err(unsupported("three-dimensional cone sections away from the apex"));
            }
            let na = norm(axis);
            cap([axis[0] / na, axis[1] / na, axis[2] / na], half_angle.cos())
        }
        Region::Cap { .. } | Region::Arc { .. } => {
            return Err(unsupported("caps and arcs in three dimensions"))
        }
    })
}
