//! Double integrals `∬_{A×B} k(x, y) dμ(x) dμ(y)` of kernels singular on the diagonal.
//!
//! Pairs closer than `diag_cutoff = ε` are left out and accounted for in the
//! error bound. For kernels of the distance only, the inner integral over `B`
//! is taken in geodesic shells about `x`, weighting each radius by the exact
//! section fraction `|S_r(x) ∩ B| / |S_r(x)|`; when `B` is unbounded the part
//! beyond a far radius is the kernel mass of a ball complement times the
//! asymptotic section fraction of `B`.

use std::f64::consts::PI;

use rand::Rng;

use super::region::{first_anchor, ring_center, MC_BLOCK};
use super::{gk, mc, ordered_sum, IntegralEstimate, Method, QuadConfig};
use crate::error::{invalid, Error, Result};
use crate::models::section::Frame;
use crate::models::{
    dist_sq, hyperbolic, norm, region_check, region_measure, section, unit_sphere_area, ManifoldModel, ModelKind,
    Region, RegionSampler, Section,
};
use crate::singkernel::{kernel_mass, kernel_raw_ks, tabulable, RadialTable};

/// Kernels accepted by [`integrate_pair`]. Each carries the order `s` of its
/// diagonal singularity `d^{−(n+s)}`.
#[derive(Clone, Copy)]
pub enum PairKernel<'a> {
    /// The model's singular kernel `𝒦ₛ`.
    Singular { s: f64 },
    /// A kernel of the distance only.
    Radial { s: f64, k: &'a (dyn Fn(f64) -> f64 + Sync) },
    /// A symmetric kernel of two points.
    General { s: f64, k: &'a (dyn Fn(&[f64], &[f64]) -> f64 + Sync) },
}

impl PairKernel<'_> {
    pub fn s(&self) -> f64 {
        match self {
            PairKernel::Singular { s } | PairKernel::Radial { s, .. } | PairKernel::General { s, .. } => *s,
        }
    }
}

impl std::fmt::Debug for PairKernel<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PairKernel::Singular { s } => write!(f, "Singular {{ s: {s} }}"),
            PairKernel::Radial { s, .. } => write!(f, "Radial {{ s: {s} }}"),
            PairKernel::General { s, .. } => write!(f, "General {{ s: {s} }}"),
        }
    }
}

enum Radial<'a> {
    Table(RadialTable),
    Func(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl Radial<'_> {
    fn eval(&self, r: f64) -> f64 {
        match self {
            Radial::Table(t) => t.eval(r),
            Radial::Func(f) => f(r),
        }
    }

    fn rel_error(&self) -> f64 {
        match self {
            Radial::Table(t) => t.rel_error(),
            Radial::Func(_) => 0.0,
        }
    }
}

/// `∬_{A×B, d(x,y) ≥ ε} k dμ dμ`, with the excluded strip in the error bound.
pub fn integrate_pair(
    model: &ManifoldModel,
    a: &Region,
    b: &Region,
    kernel: &PairKernel<'_>,
    quad: &QuadConfig,
) -> Result<IntegralEstimate> {
    let s = kernel.s();
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("pair integrals need s in (0, 1), got {s}")));
    }
    quad.validate()?;
    region_check(model, a)?;
    region_check(model, b)?;
    let ma = region_measure(model, a)?;
    let mb = region_measure(model, b)?;
    if ma == 0.0 || mb == 0.0 {
        return Ok(IntegralEstimate::zero());
    }
    if ma.is_infinite() && mb.is_infinite() {
        return Err(invalid("at least one region of a pair integral must have finite measure"));
    }
    if let Ok(overlap) = region_measure(model, &a.clone().intersect(b.clone())) {
        if overlap > 1e-12 * ma.min(mb) {
            return Err(invalid("pair regions must be disjoint up to a null set"));
        }
    }
    let (a, b) = if ma.is_infinite() { (b, a) } else { (a, b) };
    let ctx = Ctx { model, quad, s, eps: quad.diag_cutoff };

    let radial_ok = match kernel {
        PairKernel::Singular { .. } => tabulable(model),
        PairKernel::Radial { .. } => model.is_isotropic(),
        PairKernel::General { .. } => false,
    };
    let probe = model.origin();
    let sections_ok = section(model, b, &probe.0, 0.5).is_ok() && section(model, a, &probe.0, 0.5).is_ok();
    if radial_ok && sections_ok {
        return shell_pair(&ctx, a, b, kernel);
    }
    let point_k: Box<dyn Fn(&[f64], &[f64]) -> f64 + Sync> = match kernel {
        PairKernel::Singular { s } => {
            let s = *s;
            Box::new(move |x: &[f64], y: &[f64]| kernel_raw_ks(model, x, y, s, quad).map(|k| k.value).unwrap_or(f64::NAN))
        }
        PairKernel::Radial { k, .. } => {
            let k = *k;
            Box::new(move |x: &[f64], y: &[f64]| k(model.dist_unchecked(x, y)))
        }
        PairKernel::General { k, .. } => {
            let k = *k;
            Box::new(move |x: &[f64], y: &[f64]| k(x, y))
        }
    };
    if !mb.is_finite() && !matches!(kernel, PairKernel::Singular { .. }) {
        return Err(Error::UnsupportedRegion(
            "unbounded partner region needs a radial kernel with exact sections".into(),
        ));
    }
    if model.dimension() == 1 {
        nested_line_pair(&ctx, a, b, &*point_k)
    } else {
        mc_pair(&ctx, a, b, &*point_k)
    }
}

struct Ctx<'a> {
    model: &'a ManifoldModel,
    quad: &'a QuadConfig,
    s: f64,
    eps: f64,
}

/// Distance from the origin (or pole) beyond which nothing of `region` lies,
/// when the region is bounded.
fn reach(model: &ManifoldModel, region: &Region) -> Option<f64> {
    if let Some(d) = model.diameter() {
        return Some(d);
    }
    let (c, r) = region.chart_bound(model)?;
    match model.kind() {
        ModelKind::Hyperbolic3 => Some(hyperbolic::origin_distance(norm(&c) + r)),
        _ => Some(norm(&c) + r),
    }
}

/// Upper bound on the boundary measure of `region` inside the ball of radius
/// `within` about the origin.
fn boundary_bound(model: &ManifoldModel, region: &Region, within: f64) -> f64 {
    let n = model.dimension();
    if n == 1 {
        return region.to_intervals(model).map(|iv| iv.endpoints().len() as f64).unwrap_or(2.0);
    }
    // (n−1)-volume of a flat section of radius `within`
    let flat = crate::models::unit_ball_volume(n - 1) * within.powi(n as i32 - 1);
    let w = match model.kind() {
        ModelKind::GaussianSpace { n } => (2.0 * PI).powf(-0.5 * *n as f64),
        _ => 1.0,
    };
    match region {
        Region::FullSpace => 0.0,
        Region::GeodesicBall { radius, .. } => w * model.sphere_area(*radius),
        Region::Cap { angle, .. } => match model.kind() {
            ModelKind::Sphere { radius, .. } => 2.0 * PI * radius * angle.sin(),
            _ => 0.0,
        },
        Region::HalfSpace { .. } => w * flat,
        Region::Cone { .. } => 2.0 * flat,
        Region::Arc { intervals } => match model.kind() {
            ModelKind::FlatTorus { lengths } => {
                let len: Vec<f64> = intervals.iter().zip(lengths).map(|(iv, l)| (iv[1] - iv[0]).clamp(0.0, *l)).collect();
                (0..len.len())
                    .filter(|&i| len[i] < lengths[i])
                    .map(|i| 2.0 * (0..len.len()).filter(|&j| j != i).map(|j| len[j]).product::<f64>())
                    .sum()
            }
            _ => 2.0,
        },
        Region::Complement { of } => boundary_bound(model, of, within),
        Region::Intersection { a, b } | Region::Union { a, b } => {
            boundary_bound(model, a, within) + boundary_bound(model, b, within)
        }
    }
}

/// Whether bounding balls keep `a` and `b` more than `eps` apart.
fn separated(model: &ManifoldModel, a: &Region, b: &Region, eps: f64) -> bool {
    if !matches!(model.kind(), ModelKind::Euclidean { .. }) {
        return false;
    }
    match (a.chart_bound(model), b.chart_bound(model)) {
        (Some((ca, ra)), Some((cb, rb))) => dist_sq(&ca, &cb).sqrt() - ra - rb > eps,
        _ => false,
    }
}

/// Error bound for the excluded strip `d(x, y) < ε`: per unit of interface
/// the excluded mass is `c_n β ε^{1−s}/(1−s)` with `c_n` the volume of the
/// unit (n−1)-ball; a factor 2 covers curvature and the kernel's deviation
/// from the flat profile at scale ε.
fn diagonal_term(ctx: &Ctx, beta_eff: f64, a: &Region, b: &Region) -> f64 {
    let model = ctx.model;
    if separated(model, a, b, ctx.eps) {
        return 0.0;
    }
    let within = reach(model, a).unwrap_or(1.0);
    let per = boundary_bound(model, a, within).min(boundary_bound(model, b, within));
    let n = ctx.model.dimension();
    let c_n = if n == 1 { 1.0 } else { crate::models::unit_ball_volume(n - 1) };
    2.0 * c_n * beta_eff * per * ctx.eps.powf(1.0 - ctx.s) / (1.0 - ctx.s)
}

/// Radius beyond which the partner region is replaced by its asymptotic
/// section fraction.
fn far_radius(model: &ManifoldModel, a: &Region, b: &Region) -> Result<f64> {
    let ra = reach(model, a).ok_or_else(|| Error::UnsupportedRegion("finite region of a pair must be bounded".into()))?;
    match model.kind() {
        ModelKind::Hyperbolic3 => {
            let rc = reach(model, &b.clone().complement())
                .ok_or_else(|| Error::UnsupportedRegion("unbounded region on H³ must have bounded complement".into()))?;
            Ok(ra + rc + 2.0)
        }
        _ => {
            let o = model.origin();
            let scale = b.critical_radii(model, &o.0).into_iter().fold(ra.max(1.0), f64::max);
            Ok(1e4 * scale)
        }
    }
}

fn asymptotic_fraction(model: &ManifoldModel, b: &Region, r_far: f64) -> Result<f64> {
    match model.kind() {
        ModelKind::Hyperbolic3 => Ok(1.0),
        _ => Ok(section(model, b, &model.origin().0, 1e8 * r_far)?.fraction()),
    }
}

struct Far {
    mass: f64,
    mass_err: f64,
    frac_inf: f64,
    r_far: f64,
}

/// Whether every primitive of `region` is invariant under rotations about `c`.
fn symmetric_about(model: &ManifoldModel, region: &Region, c: &[f64]) -> bool {
    match region {
        Region::FullSpace => true,
        Region::GeodesicBall { center, .. } => dist_sq(&center.0, c) == 0.0,
        Region::Cap { pole, .. } => {
            let d = model.dist_unchecked(&pole.0, c);
            d == 0.0 || matches!(model.kind(), ModelKind::Sphere { radius, .. } if (d - PI * radius).abs() < 1e-12)
        }
        Region::Complement { of } => symmetric_about(model, of, c),
        Region::Intersection { a, b } | Region::Union { a, b } => {
            symmetric_about(model, a, c) && symmetric_about(model, b, c)
        }
        _ => false,
    }
}

fn shell_pair(ctx: &Ctx, a: &Region, b: &Region, kernel: &PairKernel<'_>) -> Result<IntegralEstimate> {
    let model = ctx.model;
    let quad = ctx.quad;
    let mb = region_measure(model, b)?;
    let b_finite = mb.is_finite();
    let r_top = if b_finite {
        let ra = reach(model, a).ok_or_else(|| Error::UnsupportedRegion("pair region must be bounded".into()))?;
        let rb = reach(model, b).ok_or_else(|| Error::UnsupportedRegion("pair region must be bounded".into()))?;
        match model.diameter() {
            Some(d) => d,
            None => ra + rb,
        }
    } else {
        far_radius(model, a, b)?
    };
    let r_top = r_top.max(4.0 * ctx.eps);
    let radial = match kernel {
        PairKernel::Singular { s } => Radial::Table(RadialTable::build(model, *s, ctx.eps, r_top, quad)?),
        PairKernel::Radial { k, .. } => Radial::Func(*k),
        PairKernel::General { .. } => unreachable!("general kernels take the point paths"),
    };
    let far = if b_finite {
        None
    } else {
        let o = model.origin();
        let (mass, mass_err) = match kernel {
            PairKernel::Singular { s } => {
                let km = kernel_mass(model, &Region::ball(o.clone(), r_top).complement(), &o, *s, quad)?;
                (km.value, km.error_bound)
            }
            PairKernel::Radial { k, .. } => radial_tail(model, *k, r_top, ctx.s, quad),
            PairKernel::General { .. } => unreachable!(),
        };
        Some(Far {
            mass,
            mass_err,
            frac_inf: asymptotic_fraction(model, b, r_top)?,
            r_far: r_top,
        })
    };

    let inner_fail = std::sync::atomic::AtomicBool::new(false);
    // ∫_B k(x, ·) over d ≥ ε, as (value, error)
    let inner = |x: &[f64]| -> (f64, f64) {
        let mut crit = b.critical_radii(model, x);
        let top = if model.diameter().is_some() {
            r_top
        } else if b_finite {
            crit.iter().cloned().fold(0.0, f64::max).min(r_top)
        } else {
            r_top
        };
        if top <= ctx.eps {
            return (0.0, 0.0);
        }
        let (lo, hi) = (ctx.eps.ln(), top.ln());
        let mut pts: Vec<f64> = vec![lo, hi];
        crit.retain(|r| *r > ctx.eps && *r < top);
        pts.extend(crit.iter().map(|r| r.ln()));
        let mut u = lo + 1.0;
        while u < hi {
            pts.push(u);
            u += 1.0;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let f = |u: f64| {
            let r = u.exp();
            match section(model, b, x, r) {
                Ok(sec) => {
                    let fr = sec.fraction();
                    if fr == 0.0 {
                        0.0
                    } else {
                        radial.eval(r) * model.sphere_area(r) * fr * r
                    }
                }
                Err(_) => f64::NAN,
            }
        };
        let res = gk::adaptive_points(&f, &pts, quad.abs_tol * 1e-2, quad.rel_tol, quad.max_subdiv * 4);
        if !res.converged || !res.value.is_finite() {
            inner_fail.store(true, std::sync::atomic::Ordering::Relaxed);
        }
        let mut value = res.value;
        let mut err = res.error;
        if let Some(far) = &far {
            let here = section(model, b, x, far.r_far).map(|s| s.fraction()).unwrap_or(far.frac_inf);
            value += far.frac_inf * far.mass;
            err += far.frac_inf * far.mass_err + 2.0 * (here - far.frac_inf).abs() * far.mass;
        }
        (value, err)
    };

    let outer = match model.dimension() {
        1 => outer_line(ctx, a, b, &|x: &[f64]| inner(x))?,
        2 => outer_rings(ctx, a, b, &|x: &[f64]| inner(x))?,
        _ => outer_mc(ctx, a, &|x: &[f64]| inner(x))?,
    };
    if inner_fail.into_inner() {
        return Err(Error::Precision {
            message: "inner shell quadrature did not converge".into(),
            achieved: outer.error_bound,
            partial: Some(outer.value),
        });
    }
    let n = model.dimension() as f64;
    let beta_eff = radial.eval(ctx.eps) * ctx.eps.powf(n + ctx.s);
    let diag = diagonal_term(ctx, beta_eff, a, b);
    Ok(outer
        .with_extra_error(diag)
        .with_extra_error(radial.rel_error() * outer.value.abs()))
}

/// `∫_{R}^∞ k(r)|S_r| dr` for a user radial kernel, in `ln r` up to `r = 10³⁰⁰`
/// with a power-law estimate of the rest.
fn radial_tail(model: &ManifoldModel, k: &(dyn Fn(f64) -> f64 + Sync), r0: f64, s: f64, quad: &QuadConfig) -> (f64, f64) {
    let f = |u: f64| {
        let r = u.exp();
        k(r) * model.sphere_area(r) * r
    };
    let lo = r0.ln();
    let hi = 690.0f64;
    if hi <= lo {
        return (0.0, 0.0);
    }
    let pts: Vec<f64> = (0..=((hi - lo) / 10.0).ceil() as usize).map(|i| (lo + 10.0 * i as f64).min(hi)).collect();
    let r = gk::adaptive_points(&f, &pts, quad.abs_tol, quad.rel_tol, quad.max_subdiv * 4);
    // beyond e^{690}: assume the integrand keeps decaying like e^{−s u}
    let rest = f(hi) / s;
    (r.value + rest, r.error + rest)
}

fn estimate(value: f64, error: f64, evals: u64, method: Method) -> IntegralEstimate {
    IntegralEstimate {
        value,
        error_bound: error,
        method,
        n_evals: evals,
    }
}

fn precision(what: &str, r: &gk::GkResult) -> Error {
    Error::Precision {
        message: format!("{what} did not converge"),
        achieved: r.error,
        partial: Some(r.value),
    }
}

/// Outer integral over a one-dimensional region `A`.
fn outer_line(ctx: &Ctx, a: &Region, b: &Region, g: &(dyn Fn(&[f64]) -> (f64, f64) + Sync)) -> Result<IntegralEstimate> {
    let model = ctx.model;
    let ia = a.to_intervals(model)?;
    let ib = b.to_intervals(model)?;
    let mut marks = Vec::new();
    for e in ib.endpoints() {
        marks.extend([e - ctx.eps, e, e + ctx.eps]);
    }
    let errs = std::sync::Mutex::new(Vec::new());
    let f = |u: f64| {
        let x = model.line_point(u);
        let (v, e) = g(&x.0);
        errs.lock().expect("error log").push((u.to_bits(), e * model.density(&x.0)));
        v * model.density(&x.0)
    };
    let mut parts = Vec::new();
    let mut error = 0.0;
    let mut evals = 0u64;
    for &(lo, hi) in ia.pieces() {
        let mut pts = vec![lo, hi];
        for &m in &marks {
            for shift in match model.line_period() {
                Some(l) => vec![m - l, m, m + l],
                None => vec![m],
            } {
                if shift > lo && shift < hi {
                    pts.push(shift);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let r = gk::adaptive_points_par(&f, &pts, ctx.quad.abs_tol, ctx.quad.rel_tol * 10.0, ctx.quad.max_subdiv * 4);
        if !r.converged {
            return Err(precision("outer line quadrature", &r));
        }
        parts.push(r.value);
        error += r.error;
        evals += r.evals as u64;
    }
    let inner_err = mean_inner_error(errs.into_inner().expect("error log"), ia.length());
    Ok(estimate(ordered_sum(&parts), error + inner_err, evals, Method::Adaptive))
}

/// Bound on the outer integral of the inner errors: measure times their maximum.
fn mean_inner_error(mut log: Vec<(u64, f64)>, measure: f64) -> f64 {
    log.sort_by(|x, y| x.0.cmp(&y.0));
    log.iter().map(|p| p.1).fold(0.0, f64::max) * measure
}

/// Outer integral over a two-dimensional region `A` in polar rings.
fn outer_rings(ctx: &Ctx, a: &Region, b: &Region, g: &(dyn Fn(&[f64]) -> (f64, f64) + Sync)) -> Result<IntegralEstimate> {
    let model = ctx.model;
    let quad = ctx.quad;
    let (c, rho_max) = ring_center(model, a).ok_or_else(|| Error::UnsupportedRegion("finite pair region must be bounded".into()))?;
    let frame = Frame::at(model, &c);
    let symmetric = symmetric_about(model, a, &c) && symmetric_about(model, b, &c);
    let mut breaks = vec![0.0, rho_max];
    breaks.extend(a.critical_radii(model, &c));
    for r in b.critical_radii(model, &c) {
        breaks.extend([r - ctx.eps, r, r + ctx.eps]);
    }
    breaks.retain(|r| *r >= 0.0 && *r <= rho_max);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let max_err = std::sync::Mutex::new(0.0f64);
    let fail = std::sync::atomic::AtomicBool::new(false);
    let ring = |rho: f64| -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let Ok(Section::Arcs(arcs)) = section(model, a, &c, rho) else {
            return f64::NAN;
        };
        if arcs.is_empty() {
            return 0.0;
        }
        let jac = model.sphere_area(rho) / (2.0 * PI);
        let point = |phi: f64| {
            let x = frame.exp2(&c, rho, phi);
            let (v, e) = g(&x);
            let d = model.density(&x);
            (v * d, e * d)
        };
        if symmetric {
            let (v, e) = point(0.0);
            let mut m = max_err.lock().expect("error log");
            *m = m.max(e);
            return v * arcs.length() * jac;
        }
        // angular breakpoints where the ring meets the partner's boundary
        let marks: Vec<f64> = match section(model, b, &c, rho) {
            Ok(Section::Arcs(bs)) => bs.endpoints(),
            _ => Vec::new(),
        };
        let mut total = 0.0;
        let local_err = std::sync::Mutex::new(0.0f64);
        let f = |phi: f64| {
            let (v, e) = point(phi);
            let mut m = local_err.lock().expect("error log");
            *m = m.max(e);
            v
        };
        for &(lo, hi) in arcs.pieces() {
            let mut pts = vec![lo, hi];
            pts.extend(marks.iter().cloned().filter(|m| *m > lo && *m < hi));
            pts.sort_by(f64::total_cmp);
            let r = gk::adaptive_points(&f, &pts, quad.abs_tol * 1e-2, quad.rel_tol * 10.0, quad.max_subdiv * 4);
            if !r.converged {
                fail.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            total += r.value;
        }
        let le = local_err.into_inner().expect("error log");
        let mut m = max_err.lock().expect("error log");
        *m = m.max(le);
        total * jac
    };
    let r = gk::adaptive_points_par(&ring, &breaks, quad.abs_tol, quad.rel_tol * 10.0, quad.max_subdiv * 4);
    if !r.converged || fail.into_inner() || !r.value.is_finite() {
        return Err(precision("ring quadrature of the outer region", &r));
    }
    let ma = region_measure(model, a)?;
    let ring_err = quad.rel_tol * 10.0 * r.value.abs();
    Ok(estimate(
        r.value,
        r.error + ring_err + max_err.into_inner().expect("error log") * ma,
        r.evals as u64,
        Method::Adaptive,
    ))
}

/// Outer Monte Carlo over `A` with a deterministic inner integral.
fn outer_mc(ctx: &Ctx, a: &Region, g: &(dyn Fn(&[f64]) -> (f64, f64) + Sync)) -> Result<IntegralEstimate> {
    let sampler = RegionSampler::new(ctx.model, a)?;
    let n = (ctx.quad.mc_samples / 50).max(1000);
    let mom = mc::run_blocks(ctx.quad.seed, 0x7061_6972_0000_0000, n, MC_BLOCK / 16, |rng| g(&sampler.sample_raw(rng)));
    let m = sampler.measure();
    Ok(estimate(m * mom.mean, m * mom.three_se() + m * mom.side_max, n as u64, Method::Mc))
}

/// One-dimensional nested quadrature for kernels of two points.
fn nested_line_pair(ctx: &Ctx, a: &Region, b: &Region, k: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync)) -> Result<IntegralEstimate> {
    let model = ctx.model;
    let quad = ctx.quad;
    let weighted = model.is_weighted();
    let clip = |lo: f64, hi: f64| if weighted { (lo.max(-40.0), hi.min(40.0)) } else { (lo, hi) };
    let ib = b.to_intervals(model)?;
    if ib.pieces().iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) && !weighted {
        return Err(Error::UnsupportedRegion("unbounded partner region on the line needs a radial kernel".into()));
    }
    let fail = std::sync::atomic::AtomicBool::new(false);
    let inner = |u: f64| -> f64 {
        let x = model.line_point(u);
        let fy = |v: f64| {
            let y = model.line_point(v);
            k(&x.0, &y.0) * model.density(&y.0)
        };
        let mut total = 0.0;
        let period = model.line_period();
        for &(lo, hi) in ib.pieces() {
            let (lo, hi) = clip(lo, hi);
            // pieces of [lo, hi] at distance ≥ ε from u
            let mut segs = vec![(lo, hi)];
            let holes: Vec<(f64, f64)> = match period {
                Some(l) => vec![(u - ctx.eps - l, u + ctx.eps - l), (u - ctx.eps, u + ctx.eps), (u - ctx.eps + l, u + ctx.eps + l)],
                None => vec![(u - ctx.eps, u + ctx.eps)],
            };
            for (h0, h1) in holes {
                segs = segs
                    .into_iter()
                    .flat_map(|(p, q)| {
                        let mut out = Vec::new();
                        if h0 > p {
                            out.push((p, q.min(h0)));
                        }
                        if h1 < q {
                            out.push((p.max(h1), q));
                        }
                        out.into_iter().filter(|(p, q)| q > p)
                    })
                    .collect();
            }
            for (p, q) in segs {
                // geometric breakpoints toward the nearer end of the hole
                let mut pts = vec![p, q];
                for j in 1..40 {
                    let d = ctx.eps * 2f64.powi(j);
                    for v in [u - d, u + d] {
                        if v > p && v < q {
                            pts.push(v);
                        }
                    }
                }
                if weighted {
                    for j in -8..=8 {
                        let v = j as f64;
                        if v > p && v < q {
                            pts.push(v);
                        }
                    }
                }
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                let r = gk::adaptive_points(&fy, &pts, quad.abs_tol * 1e-2, quad.rel_tol, quad.max_subdiv * 4);
                if !r.converged {
                    fail.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                total += r.value;
            }
        }
        total * model.density(&x.0)
    };
    let ia = a.to_intervals(model)?;
    let mut parts = Vec::new();
    let mut error = 0.0;
    let mut evals = 0u64;
    for &(lo, hi) in ia.pieces() {
        let (lo, hi) = clip(lo, hi);
        let mut pts = vec![lo, hi];
        for e in ib.endpoints() {
            for m in [e - ctx.eps, e, e + ctx.eps] {
                if m > lo && m < hi {
                    pts.push(m);
                }
            }
        }
        if weighted {
            for j in -8..=8 {
                let v = j as f64;
                if v > lo && v < hi {
                    pts.push(v);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let r = gk::adaptive_points_par(&inner, &pts, quad.abs_tol, quad.rel_tol * 10.0, quad.max_subdiv * 4);
        if !r.converged {
            return Err(precision("outer line quadrature", &r));
        }
        parts.push(r.value);
        error += r.error;
        evals += r.evals as u64;
    }
    if fail.into_inner() {
        return Err(Error::Precision {
            message: "inner line quadrature did not converge".into(),
            achieved: error,
            partial: Some(ordered_sum(&parts)),
        });
    }
    let value = ordered_sum(&parts);
    // kernel at distance ε, read off at a boundary point of B
    let beta_eff = ib
        .endpoints()
        .first()
        .map(|&e| {
            let x = model.line_point(e);
            let y = model.line_point(e + ctx.eps);
            k(&x.0, &y.0) * ctx.eps.powf(1.0 + ctx.s)
        })
        .unwrap_or(0.0);
    let diag = diagonal_term(ctx, beta_eff, a, b);
    Ok(estimate(value, error + quad.rel_tol * value.abs() + diag, evals, Method::Adaptive))
}

/// Monte Carlo over `A × B` with distance-shell strata `[ε2ʲ, ε2ʲ⁺¹)` about
/// each sampled `x`.
fn mc_pair(ctx: &Ctx, a: &Region, b: &Region, k: &(dyn Fn(&[f64], &[f64]) -> f64 + Sync)) -> Result<IntegralEstimate> {
    let model = ctx.model;
    let quad = ctx.quad;
    let n = model.dimension();
    let sampler_a = RegionSampler::new(model, a)?;
    let mb = region_measure(model, b)?;
    // Shells reach r_near; beyond, y is drawn from B directly (compact models).
    let (r_near, sampler_b) = match model.kind() {
        ModelKind::FlatTorus { lengths } => {
            let lmin = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
            (0.25 * lmin, Some(RegionSampler::new(model, b)?))
        }
        ModelKind::GaussianSpace { .. } => (f64::NAN, None),
        _ => {
            if !mb.is_finite() {
                return Err(Error::UnsupportedRegion("Monte Carlo pair integrals need a finite partner region".into()));
            }
            let ra = reach(model, a).ok_or_else(|| Error::UnsupportedRegion("pair region must be bounded".into()))?;
            let rb = reach(model, b).ok_or_else(|| Error::UnsupportedRegion("pair region must be bounded".into()))?;
            (model.diameter().unwrap_or(ra + rb), None)
        }
    };
    let step = |x: &[f64], r: f64, u: &[f64]| -> Vec<f64> {
        match model.kind() {
            ModelKind::Hyperbolic3 => hyperbolic::exp_from(x, r, &[u[0], u[1], u[2]]).to_vec(),
            ModelKind::FlatTorus { lengths } => {
                x.iter().zip(u).zip(lengths).map(|((xi, ui), l)| (xi + r * ui).rem_euclid(*l)).collect()
            }
            _ => x.iter().zip(u).map(|(xi, ui)| xi + r * ui).collect(),
        }
    };
    let area = |r: f64| match model.kind() {
        ModelKind::Hyperbolic3 => model.sphere_area(r),
        _ => unit_sphere_area(n) * r.powi(n as i32 - 1),
    };
    let samples = (quad.mc_samples / 8).max(1000);
    let mom = mc::run_blocks(quad.seed, 0x7368_656c_6c00_0000, samples, MC_BLOCK / 8, |rng| {
        let x = sampler_a.sample_raw(rng);
        let top = if r_near.is_nan() { norm(&x) + 12.0 } else { r_near };
        let mut v = 0.0;
        let mut lo = ctx.eps;
        while lo < top {
            let hi = (2.0 * lo).min(top);
            let r = lo * (hi / lo).powf(rng.random::<f64>());
            let u = mc::random_direction(rng, n);
            let y = step(&x, r, &u);
            if b.contains_raw(model, &y) {
                v += (hi / lo).ln() * r * area(r) * k(&x, &y) * model.density(&y);
            }
            lo = hi;
        }
        if let Some(sb) = &sampler_b {
            let y = sb.sample_raw(rng);
            if model.dist_unchecked(&x, &y) >= r_near {
                v += sb.measure() * k(&x, &y);
            }
        }
        (v, 0.0)
    });
    let m = sampler_a.measure();
    let value = m * mom.mean;
    let x0 = first_anchor(a).unwrap_or_else(|| model.origin().0.to_vec());
    let mut y0 = x0.clone();
    y0[0] += ctx.eps;
    let beta_eff = k(&x0, &y0) * ctx.eps.powf(n as f64 + ctx.s);
    let diag = diagonal_term(ctx, beta_eff, a, b);
    Ok(estimate(value, m * mom.three_se() + diag, samples as u64, Method::Mc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singkernel::beta_raw;
    use approx::assert_relative_eq;

    fn line_kernel(s: f64) -> impl Fn(f64) -> f64 + Sync {
        let beta = beta_raw(1, s);
        move |r: f64| beta * r.powf(-1.0 - s)
    }

    /// ∬_{[0,1]×[1,2]} β|x−y|^{−1−s} = β(2 − 2^{1−s})/(s(1−s)); the strip
    /// `y − x < ε` carries β ε^{1−s}/(1−s).
    fn adjacent_exact(s: f64, eps: f64) -> (f64, f64) {
        let beta = beta_raw(1, s);
        (beta * (2.0 - 2f64.powf(1.0 - s)) / (s * (1.0 - s)), beta * eps.powf(1.0 - s) / (1.0 - s))
    }

    #[test]
    fn adjacent_unit_intervals() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-9, 1e-13);
        let s = 0.5;
        let k = line_kernel(s);
        let kernel = PairKernel::Radial { s, k: &k };
        let r = integrate_pair(&m, &Region::arc(0.0, 1.0), &Region::arc(1.0, 2.0), &kernel, &q);
        // Arc is not a Euclidean shape; use balls on the line.
        assert!(r.is_err());
        let a = Region::ball([0.5], 0.5);
        let b = Region::ball([1.5], 0.5);
        let r = integrate_pair(&m, &a, &b, &kernel, &q).unwrap();
        let (full, strip) = adjacent_exact(s, q.diag_cutoff);
        // mpmath: 0.467389954510218
        assert_relative_eq!(full, 0.467389954510218, max_relative = 1e-12);
        assert_relative_eq!(r.value + strip, full, max_relative = 1e-7);
        assert!((r.value - full).abs() <= r.error_bound);
    }

    #[test]
    fn singular_kernel_matches_closed_form_on_the_line() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-8, 1e-12);
        let s = 0.5;
        let r = integrate_pair(&m, &Region::ball([0.5], 0.5), &Region::ball([1.5], 0.5), &PairKernel::Singular { s }, &q).unwrap();
        let (full, strip) = adjacent_exact(s, q.diag_cutoff);
        assert_relative_eq!(r.value + strip, full, max_relative = 1e-6);
        assert!((r.value - full).abs() <= r.error_bound);
    }

    #[test]
    fn halving_the_cutoff_stays_within_the_strip_term() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let s = 0.5;
        let k = line_kernel(s);
        let kernel = PairKernel::Radial { s, k: &k };
        let (a, b) = (Region::ball([0.5], 0.5), Region::ball([1.5], 0.5));
        let q1 = QuadConfig::default().with_tolerances(1e-9, 1e-13);
        let q2 = q1.clone().with_diag_cutoff(0.5 * q1.diag_cutoff);
        let v1 = integrate_pair(&m, &a, &b, &kernel, &q1).unwrap();
        let v2 = integrate_pair(&m, &a, &b, &kernel, &q2).unwrap();
        let (_, strip) = adjacent_exact(s, q1.diag_cutoff);
        assert!((v1.value - v2.value).abs() < strip);
        assert!(v2.value > v1.value);
    }

    #[test]
    fn swap_gives_the_same_value() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let k = line_kernel(0.3);
        let kernel = PairKernel::Radial { s: 0.3, k: &k };
        let (a, b) = (Region::ball([0.0], 1.0), Region::ball([2.5], 0.5));
        let x = integrate_pair(&m, &a, &b, &kernel, &q).unwrap();
        let y = integrate_pair(&m, &b, &a, &kernel, &q).unwrap();
        assert_relative_eq!(x.value, y.value, max_relative = 1e-8);
    }

    #[test]
    fn separated_sets_have_no_strip_error() {
        // [0,1] and [2,3]: β(2·2^{1−s} − 1 − 3^{1−s})/(s(1−s))
        let m = ManifoldModel::euclidean(1).unwrap();
        let s = 0.4;
        let k = line_kernel(s);
        let kernel = PairKernel::Radial { s, k: &k };
        let q = QuadConfig::default();
        let r = integrate_pair(&m, &Region::ball([0.5], 0.5), &Region::ball([2.5], 0.5), &kernel, &q).unwrap();
        let beta = beta_raw(1, s);
        let exact = beta * (2.0 * 2f64.powf(1.0 - s) - 1.0 - 3f64.powf(1.0 - s)) / (s * (1.0 - s));
        assert_relative_eq!(r.value, exact, max_relative = 1e-7);
    }

    #[test]
    fn overlapping_or_infinite_pairs_rejected() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let kernel = PairKernel::Singular { s: 0.5 };
        let h = Region::half_space(vec![1.0], 0.0);
        assert!(integrate_pair(&m, &h, &h.clone().complement(), &kernel, &q).is_err());
        assert!(integrate_pair(&m, &Region::ball([0.0], 1.0), &Region::ball([0.5], 1.0), &kernel, &q).is_err());
        assert!(integrate_pair(&m, &Region::ball([0.0], 1.0), &Region::ball([3.0], 1.0), &PairKernel::Singular { s: 1.0 }, &q).is_err());
    }

    #[test]
    fn empty_partner_gives_zero() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let r = integrate_pair(&m, &Region::ball([0.0], 1.0), &Region::empty(), &PairKernel::Singular { s: 0.5 }, &QuadConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn unit_interval_against_its_complement() {
        // 𝒥ₛ([0,1], ℝ∖[0,1]) = 2β/(s(1−s)) in closed form
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-8, 1e-12);
        let s = 0.3;
        let e = Region::ball([0.5], 0.5);
        let r = integrate_pair(&m, &e, &e.clone().complement(), &PairKernel::Singular { s }, &q).unwrap();
        let beta = beta_raw(1, s);
        let full = 2.0 * beta / (s * (1.0 - s));
        let strip = 2.0 * beta * q.diag_cutoff.powf(1.0 - s) / (1.0 - s);
        assert_relative_eq!(r.value + strip, full, max_relative = 1e-5);
        assert!((r.value - full).abs() <= r.error_bound);
    }
    #[test]
    fn separated_disks_match_the_semigroup_route() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-6, 1e-10);
        let s = 0.5;
        let (a, b) = (Region::ball([0.0, 0.0], 1.0), Region::ball([3.0, 0.0], 1.0));
        let direct = integrate_pair(&m, &a, &b, &PairKernel::Singular { s }, &q).unwrap();
        let q2 = q.clone().with_tolerances(1e-5, 1e-10);
        let via_mass = crate::quadrature::integrate_region(
            &m,
            &a,
            |x| kernel_mass(&m, &b, &crate::models::Point::new(x), s, &q2).unwrap().value,
            &q2,
        )
        .unwrap();
        assert_relative_eq!(direct.value, via_mass.value, max_relative = 1e-4);
    }

    #[test]
    fn disk_perimeter_scales_with_radius() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-6, 1e-10);
        let s = 0.4;
        let per = |r: f64| {
            let e = Region::ball([0.0, 0.0], r);
            let q = q.clone().with_diag_cutoff(1e-4 * r);
            integrate_pair(&m, &e, &e.clone().complement(), &PairKernel::Singular { s }, &q).unwrap()
        };
        let (p1, p2) = (per(1.0), per(2.0));
        assert_relative_eq!(p2.value, 2f64.powf(2.0 - s) * p1.value, max_relative = 1e-6);
        assert!(p1.error_bound < 0.05 * p1.value);
    }

    #[test]
    fn split_partner_adds_up() {
        let m = ManifoldModel::euclidean(2).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-7, 1e-10);
        let kernel = PairKernel::Singular { s: 0.3 };
        let a = Region::ball([0.0, 0.0], 1.0);
        let b = Region::ball([0.0, 0.0], 3.0).intersect(a.clone().complement());
        let up = Region::half_space(vec![0.0, 1.0], 0.0);
        let whole = integrate_pair(&m, &a, &b, &kernel, &q).unwrap();
        let top = integrate_pair(&m, &a, &b.clone().intersect(up.clone()), &kernel, &q).unwrap();
        let bottom = integrate_pair(&m, &a, &b.intersect(up.complement()), &kernel, &q).unwrap();
        assert_relative_eq!(whole.value, top.value + bottom.value, max_relative = 1e-6);
        assert_relative_eq!(top.value, bottom.value, max_relative = 1e-6);
    }

    #[test]
    fn hemispheres_on_the_sphere() {
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-6, 1e-10);
        let cap = Region::cap([0.0, 0.0, 1.0], 0.5 * PI);
        let north = integrate_pair(&m, &cap, &cap.clone().complement(), &PairKernel::Singular { s: 0.5 }, &q).unwrap();
        let east = Region::cap([1.0, 0.0, 0.0], 0.5 * PI);
        let side = integrate_pair(&m, &east, &east.clone().complement(), &PairKernel::Singular { s: 0.5 }, &q).unwrap();
        assert_relative_eq!(north.value, side.value, max_relative = 1e-6);
        assert!(north.value > 0.0);
    }

    #[test]
    fn hemisphere_against_legendre_series() {
        // Σ_ℓ λ_ℓ^{s/2} m_ℓ for the hemisphere indicator, summed to ℓ = 2·10⁶
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let q = QuadConfig::default();
        let cap = Region::cap([0.0, 0.0, 1.0], 0.5 * PI);
        for (s, exact) in [(0.2, 3.7138549012902504), (0.025, 3.2017991624908513)] {
            let r = integrate_pair(&m, &cap, &cap.clone().complement(), &PairKernel::Singular { s }, &q).unwrap();
            assert!((r.value - exact).abs() <= r.error_bound, "{s}: {r:?}");
        }
    }

    #[test]
    fn torus_boxes_by_monte_carlo() {
        let m = ManifoldModel::flat_torus(vec![1.0, 1.0]).unwrap();
        let q = QuadConfig { mc_samples: 40_000, ..QuadConfig::default() };
        let half = Region::arc_box(vec![[0.0, 0.5], [0.0, 1.0]]);
        let r = integrate_pair(&m, &half, &half.clone().complement(), &PairKernel::Singular { s: 0.5 }, &q).unwrap();
        let again = integrate_pair(&m, &half, &half.clone().complement(), &PairKernel::Singular { s: 0.5 }, &q).unwrap();
        assert_eq!(r, again);
        assert_eq!(r.method, Method::Mc);
        assert!(r.value > 0.0 && r.error_bound < 0.2 * r.value, "{r:?}");
        // the T² kernel integrates over one axis to the T¹ kernel
        let line = ManifoldModel::flat_torus(vec![1.0]).unwrap();
        let e = Region::arc(0.0, 0.5);
        let exact = integrate_pair(&line, &e, &e.clone().complement(), &PairKernel::Singular { s: 0.5 }, &q).unwrap();
        assert!((r.value - exact.value).abs() <= r.error_bound + exact.error_bound, "{r:?} {exact:?}");
    }

    #[test]
    fn balls_in_three_dimensions() {
        let m = ManifoldModel::euclidean(3).unwrap();
        let q = QuadConfig { mc_samples: 50_000, ..QuadConfig::default() }.with_tolerances(1e-5, 1e-10);
        let s = 0.5;
        let (a, b) = (Region::ball([0.0, 0.0, 0.0], 0.5), Region::ball([2.0, 0.0, 0.0], 0.5));
        let r = integrate_pair(&m, &a, &b, &PairKernel::Singular { s }, &q).unwrap();
        // ball averages of r^{−p}: f(c)(1 + a²p(p−1)/(10 d²)) each, to second order
        let vol = 4.0 / 3.0 * PI * 0.125;
        let p = 3.0 + s;
        let corr = (1.0 + 0.25 * p * (p - 1.0) / 40.0).powi(2);
        let approx = vol * vol * crate::singkernel::euclidean_ks(3, s, 2.0) * corr;
        assert_relative_eq!(r.value, approx, max_relative = 0.03);
        assert!(r.error_bound < 0.05 * r.value, "{r:?}");
    }

    #[test]
    fn split_first_argument_adds_up() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let kernel = PairKernel::Singular { s: 0.6 };
        let b = Region::ball([3.0], 1.0);
        let (a1, a2) = (Region::ball([0.5], 0.5), Region::ball([1.5], 0.5));
        let whole = integrate_pair(&m, &a1.clone().union(a2.clone()), &b, &kernel, &q).unwrap();
        let parts = [
            integrate_pair(&m, &a1, &b, &kernel, &q).unwrap(),
            integrate_pair(&m, &a2, &b, &kernel, &q).unwrap(),
        ];
        let sum = crate::quadrature::sum_estimates(&parts);
        assert!((whole.value - sum.value).abs() <= whole.error_bound + sum.error_bound);
    }
}
