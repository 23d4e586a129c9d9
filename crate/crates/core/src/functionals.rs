//! Interaction functional, fractional perimeters, `Hˢ` seminorms and the
//! fractional Laplacian.
//!
//! Conventions: the kernel index `s` always names `𝒦ₛ`. The perimeter is the
//! squared `H^{s/2}` seminorm of an indicator, so
//! `P_s(E) = [χ_E]²_{H^{s/2}} = ∬ (χ_E(x) − χ_E(y))² 𝒦ₛ = 2 𝒥ₛ(E, Eᶜ)`, and
//! [`seminorm_singular`] with order `σ` integrates against `𝒦_{2σ}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::section::Frame;
use crate::models::{region_check, region_measure, unit_sphere_area, ManifoldModel, ModelKind, Point, Region};
use crate::quadrature::{gk, integrate_pair, integrate_time, ordered_sum, sum_estimates};
use crate::quadrature::{Approach, IntegralEstimate, Method, PairKernel, QuadConfig, TailClass};
use crate::singkernel::{beta_raw, gamma_norm_raw, RadialTable};

/// A smooth function with an exact eigen-expansion, so that the heat
/// semigroup and spectral powers act in closed form.
pub trait SmoothFunction: Sync {
    fn model(&self) -> &ManifoldModel;
    fn value(&self, x: &[f64]) -> f64;
    /// `(e^{tΔ}u)(x)`.
    fn heat(&self, x: &[f64], t: f64) -> f64;
    /// `(e^{tΔ}u)(x) − u(x)`, without cancellation at small `t`.
    fn heat_increment(&self, x: &[f64], t: f64) -> f64;
    /// `(Δu)(x)`.
    fn laplacian(&self, x: &[f64]) -> f64;
    /// `|∇u(x)|²`.
    fn grad_sq(&self, x: &[f64]) -> f64;
    /// Pairs `(λ, m)`: eigenvalue of `−Δ` and the squared norm of the
    /// projection of `u` on that eigenspace.
    fn spectral_masses(&self) -> Vec<(f64, f64)>;
    /// Bound on `sup |∇ᵏu|`, for near-diagonal remainders.
    fn derivative_bound(&self, k: i32) -> f64;
    /// Mean value, the long-time limit of `e^{tΔ}u`.
    fn mean(&self) -> f64;
    /// A pole about which `u` is rotationally symmetric, when the model has
    /// dimension two.
    fn reduction_pole(&self) -> Option<[f64; 3]> {
        None
    }
}

/// `u(x) = Σₖ aₖ cos(2πkx/L) + bₖ sin(2πkx/L)` on a circle of length `L`
/// (`FlatTorus([L])` or `Sphere(1)` in arc length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigFunction {
    model: ManifoldModel,
    coefficients: BTreeMap<u32, (f64, f64)>,
}

impl TrigFunction {
    pub fn new(model: ManifoldModel, coefficients: BTreeMap<u32, (f64, f64)>) -> Result<Self> {
        if model.line_period().is_none() {
            return Err(invalid(format!("trigonometric functions live on a circle, not on {}", model.label())));
        }
        if coefficients.values().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(invalid("trigonometric coefficients must be finite"));
        }
        Ok(TrigFunction { model, coefficients })
    }

    /// Build from `(k, a_k, b_k)` triples.
    pub fn from_modes(model: ManifoldModel, modes: &[(u32, f64, f64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(k, a, b) in modes {
            let e = map.entry(k).or_insert((0.0, 0.0));
            e.0 += a;
            e.1 += b;
        }
        Self::new(model, map)
    }

    pub fn coefficients(&self) -> &BTreeMap<u32, (f64, f64)> {
        &self.coefficients
    }

    fn period(&self) -> f64 {
        self.model.line_period().expect("checked at construction")
    }

    fn omega(&self, k: u32) -> f64 {
        2.0 * PI * k as f64 / self.period()
    }

    fn modes_at(&self, x: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
        let u = self.model.line_coord(x);
        let terms: Vec<f64> = self
            .coefficients
            .iter()
            .map(|(&k, &(a, b))| {
                let w = self.omega(k);
                weight(w * w) * (a * (w * u).cos() + b * (w * u).sin())
            })
            .collect();
        ordered_sum(&terms)
    }

    /// `Σ λₖ^p mₖ`.
    pub fn spectral_moment(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self
            .spectral_masses()
            .into_iter()
            .map(|(l, m)| if l == 0.0 { if p == 0.0 { m } else { 0.0 } } else { l.powf(p) * m })
            .collect();
        ordered_sum(&terms)
    }
}

impl SmoothFunction for TrigFunction {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.modes_at(x, |_| 1.0)
    }

    fn heat(&self, x: &[f64], t: f64) -> f64 {
        self.modes_at(x, |l| (-l * t).exp())
    }

    fn heat_increment(&self, x: &[f64], t: f64) -> f64 {
        self.modes_at(x, |l| (-l * t).exp_m1())
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.modes_at(x, |l| -l)
    }

    fn grad_sq(&self, x: &[f64]) -> f64 {
        let u = self.model.line_coord(x);
        let terms: Vec<f64> = self
            .coefficients
            .iter()
            .map(|(&k, &(a, b))| {
                let w = self.omega(k);
                w * (-a * (w * u).sin() + b * (w * u).cos())
            })
            .collect();
        ordered_sum(&terms).powi(2)
    }

    fn spectral_masses(&self) -> Vec<(f64, f64)> {
        let l = self.period();
        self.coefficients
            .iter()
            .map(|(&k, &(a, b))| {
                let w = self.omega(k);
                if k == 0 {
                    (0.0, l * a * a)
                } else {
                    (w * w, 0.5 * l * (a * a + b * b))
                }
            })
            .collect()
    }

    fn derivative_bound(&self, k: i32) -> f64 {
        self.coefficients.iter().map(|(&m, &(a, b))| self.omega(m).powi(k) * a.hypot(b)).sum()
    }

    fn mean(&self) -> f64 {
        self.coefficients.get(&0).map(|c| c.0).unwrap_or(0.0)
    }
}

/// `u(x) = Σ_ℓ c_ℓ P_ℓ(cos θ)` on `Sphere(2)`, with `θ` the angle from `pole`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalFunction {
    model: ManifoldModel,
    pole: [f64; 3],
    coefficients: Vec<f64>,
}

impl ZonalFunction {
    pub fn new(model: ManifoldModel, pole: [f64; 3], coefficients: Vec<f64>) -> Result<Self> {
        if !matches!(model.kind(), ModelKind::Sphere { n: 2, .. }) {
            return Err(invalid("zonal functions live on Sphere(2)"));
        }
        let l = crate::models::norm(&pole);
        if !(l > 0.0) || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("zonal function needs a nonzero pole and finite coefficients"));
        }
        Ok(ZonalFunction {
            model,
            pole: [pole[0] / l, pole[1] / l, pole[2] / l],
            coefficients,
        })
    }

    fn radius(&self) -> f64 {
        match self.model.kind() {
            ModelKind::Sphere { radius, .. } => *radius,
            _ => unreachable!(),
        }
    }

    fn cos_theta(&self, x: &[f64]) -> f64 {
        let r = crate::models::norm(x);
        ((x[0] * self.pole[0] + x[1] * self.pole[1] + x[2] * self.pole[2]) / r).clamp(-1.0, 1.0)
    }

    /// `P_ℓ(z)` and `P_ℓ'(z)` for all ℓ up to the degree.
    fn legendre(&self, z: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.coefficients.len());
        let (mut p0, mut p1) = (1.0, z);
        let (mut d0, mut d1) = (0.0, 1.0);
        for l in 0..self.coefficients.len() {
            match l {
                0 => out.push((1.0, 0.0)),
                1 => out.push((z, 1.0)),
                _ => {
                    let lf = l as f64;
                    let p2 = ((2.0 * lf - 1.0) * z * p1 - (lf - 1.0) * p0) / lf;
                    let d2 = d0 + (2.0 * lf - 1.0) * p1;
                    out.push((p2, d2));
                    (p0, p1, d0, d1) = (p1, p2, d1, d2);
                }
            }
        }
        out
    }

    fn lambda(&self, l: usize) -> f64 {
        let r = self.radius();
        (l * (l + 1)) as f64 / (r * r)
    }

    fn weighted(&self, x: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
        let p = self.legendre(self.cos_theta(x));
        let terms: Vec<f64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(l, c)| weight(self.lambda(l)) * c * p[l].0)
            .collect();
        ordered_sum(&terms)
    }
}

impl SmoothFunction for ZonalFunction {
    fn model(&self) -> &ManifoldModel {
        &self.model
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weighted(x, |_| 1.0)
    }

    fn heat(&self, x: &[f64], t: f64) -> f64 {
        self.weighted(x, |l| (-l * t).exp())
    }

    fn heat_increment(&self, x: &[f64], t: f64) -> f64 {
        self.weighted(x, |l| (-l * t).exp_m1())
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        self.weighted(x, |l| -l)
    }

    fn grad_sq(&self, x: &[f64]) -> f64 {
        let z = self.cos_theta(x);
        let p = self.legendre(z);
        let dz: f64 = self.coefficients.iter().enumerate().map(|(l, c)| c * p[l].1).sum();
        // |∇u| = |du/dθ|/R = |P'(z)| sin θ / R
        dz * dz * (1.0 - z * z) / (self.radius() * self.radius())
    }

    fn spectral_masses(&self) -> Vec<(f64, f64)> {
        let r = self.radius();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(l, c)| (self.lambda(l), c * c * 4.0 * PI * r * r / (2 * l + 1) as f64))
            .collect()
    }

    fn derivative_bound(&self, k: i32) -> f64 {
        // Markov's inequality on [−1, 1] in θ, with a margin for the covariant terms
        let r = self.radius();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(l, c)| c.abs() * 2f64.powi(k) * ((l * l) as f64 / r).powi(k).max(1.0))
            .sum()
    }

    fn mean(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }

    fn reduction_pole(&self) -> Option<[f64; 3]> {
        Some(self.pole)
    }
}

/// `u = χ_E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetFunction {
    pub region: Region,
}

/// Argument of [`seminorm_singular`].
#[derive(Clone, Copy)]
pub enum SeminormArg<'a> {
    Smooth(&'a dyn SmoothFunction),
    Set(&'a SetFunction),
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("s must lie in (0, 1), got {s}")))
    }
}

/// `𝒥ₛ(A, B) = ∬_{A×B} 𝒦ₛ dμ dμ`.
pub fn interaction_js(model: &ManifoldModel, a: &Region, b: &Region, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    check_s(s)?;
    integrate_pair(model, a, b, &PairKernel::Singular { s }, quad)
}

/// `P_s(E) = 2 𝒥ₛ(E, Eᶜ)`.
pub fn perimeter_ps(model: &ManifoldModel, e: &Region, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    check_s(s)?;
    region_check(model, e)?;
    let ec = e.clone().complement();
    if region_measure(model, e)?.is_infinite() && region_measure(model, &ec)?.is_infinite() {
        return Err(invalid("both E and its complement have infinite measure; no quadrature path exists"));
    }
    Ok(interaction_js(model, e, &ec, s, quad)?.scaled(2.0))
}

/// `P_s(E, Ω) = 2[𝒥ₛ(E∩Ω, Eᶜ∩Ω) + 𝒥ₛ(E∩Ω, Eᶜ∖Ω) + 𝒥ₛ(E∖Ω, Eᶜ∩Ω)]`.
pub fn perimeter_local(model: &ManifoldModel, e: &Region, omega: &Region, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    check_s(s)?;
    region_check(model, e)?;
    region_check(model, omega)?;
    let ec = e.clone().complement();
    let oc = omega.clone().complement();
    let e_in = e.clone().intersect(omega.clone());
    let ec_in = ec.clone().intersect(omega.clone());
    let e_out = e.clone().intersect(oc.clone());
    let ec_out = ec.intersect(oc);
    let ((t1, t2), t3) = rayon::join(
        || {
            rayon::join(
                || interaction_js(model, &e_in, &ec_in, s, quad),
                || interaction_js(model, &e_in, &ec_out, s, quad),
            )
        },
        || interaction_js(model, &e_out, &ec_in, s, quad),
    );
    Ok(sum_estimates(&[t1?, t2?, t3?]).scaled(2.0))
}

/// `∫_{B_ε} r²/n 𝒦ₛ`, using the flat profile of the kernel at scale ε.
fn second_moment_of_cutoff(n: usize, s: f64, eps: f64) -> f64 {
    unit_sphere_area(n) * beta_raw(n, s) * eps.powf(2.0 - s) / (n as f64 * (2.0 - s))
}

/// Relative accuracy of the flat profile on `B_ε`: curvature and periodic
/// images enter at order `ε²` and `ε^{n+s}`.
fn flat_profile_error(n: usize, s: f64, eps: f64) -> f64 {
    10.0 * (eps * eps + eps.powf(n as f64 + s))
}

fn smooth_domain(u: &dyn SmoothFunction, model: &ManifoldModel) -> Result<()> {
    if u.model() != model {
        return Err(invalid("function and model disagree"));
    }
    Ok(())
}

/// Circle average at distance `r` of `h(y)`, with `y` on the geodesic sphere
/// of radius `r` about `x`. One dimension: the two points `x ± r`.
fn sphere_average(model: &ManifoldModel, x: &[f64], r: f64, h: &dyn Fn(&[f64]) -> f64, quad: &QuadConfig) -> f64 {
    match model.dimension() {
        1 => {
            let u0 = model.line_coord(x);
            0.5 * (h(&model.line_point(u0 + r).0) + h(&model.line_point(u0 - r).0))
        }
        _ => {
            let frame = Frame::at(model, x);
            let f = |phi: f64| h(&frame.exp2(x, r, phi));
            let pts = [0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
            gk::adaptive_points(&f, &pts, quad.abs_tol * 1e-3, quad.rel_tol * 1e-2, quad.max_subdiv).value / (2.0 * PI)
        }
    }
}

/// `∫_{d ≥ ε} F(r) 𝒦ₛ(r) |S_r| dr` in `ln r`, where `F` is a sphere average.
fn shell_integral(
    model: &ManifoldModel,
    table: &RadialTable,
    eps: f64,
    r_max: f64,
    f: &(dyn Fn(f64) -> f64 + Sync),
    quad: &QuadConfig,
) -> gk::GkResult {
    let g = |v: f64| {
        let r = v.exp();
        table.eval(r) * model.sphere_area(r) * r * f(r)
    };
    let (lo, hi) = (eps.ln(), r_max.ln());
    let mut pts = vec![lo];
    let mut v = lo + 1.0;
    while v < hi {
        pts.push(v);
        v += 1.0;
    }
    pts.push(hi);
    gk::adaptive_points(&g, &pts, quad.abs_tol * 1e-2, quad.rel_tol * 1e-2, quad.max_subdiv * 4)
}

fn radial_extent(model: &ManifoldModel) -> Result<f64> {
    model
        .diameter()
        .ok_or_else(|| Error::UnsupportedModel(format!("smooth test functions need a compact model, got {}", model.label())))
}

/// `[u]²_{Hσ} = ∬ (u(x) − u(y))² 𝒦_{2σ} dμ dμ`. For indicators this is the
/// perimeter with kernel index `2σ`.
pub fn seminorm_singular(model: &ManifoldModel, u: SeminormArg<'_>, sigma: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    let s = 2.0 * sigma;
    match u {
        SeminormArg::Set(set) => perimeter_ps(model, &set.region, s, quad),
        SeminormArg::Smooth(u) => {
            if !(s > 0.0 && s < 2.0) {
                return Err(invalid(format!("seminorm order must lie in (0, 1), got {sigma}")));
            }
            smooth_domain(u, model)?;
            smooth_seminorm(model, u, s, quad)
        }
    }
}

fn smooth_seminorm(model: &ManifoldModel, u: &dyn SmoothFunction, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    let eps = quad.diag_cutoff;
    let r_max = radial_extent(model)?;
    let table = RadialTable::build(model, s, eps, r_max, quad)?;
    let n = model.dimension();
    let fail = std::sync::atomic::AtomicBool::new(false);
    // ∫_{d≥ε} (u(x)−u(y))² 𝒦 dy, plus the Taylor term of the excluded ball
    let inner = |x: &[f64]| -> f64 {
        let ux = u.value(x);
        let h = |y: &[f64]| (ux - u.value(y)).powi(2);
        let avg = |r: f64| sphere_average(model, x, r, &h, quad);
        let r = shell_integral(model, &table, eps, r_max, &avg, quad);
        if !r.converged {
            fail.store(true, std::sync::atomic::Ordering::Relaxed);
        }
        r.value + u.grad_sq(x) * second_moment_of_cutoff(n, s, eps)
    };
    let (value, error, evals) = outer_smooth(model, u, &inner, quad)?;
    if fail.into_inner() {
        return Err(Error::Precision {
            message: "inner seminorm quadrature did not converge".into(),
            achieved: error,
            partial: Some(value),
        });
    }
    let vol = model.volume_class().finite().unwrap_or(1.0);
    let taylor = u.derivative_bound(1).powi(2) * vol * second_moment_of_cutoff(n, s, eps);
    // (u(x) − u(y))² − (∇u·h)² = O(|h|⁴) after the odd terms cancel
    let quartic = u.derivative_bound(2).powi(2) + u.derivative_bound(1) * u.derivative_bound(3);
    let remainder = taylor * flat_profile_error(n, s, eps)
        + quartic * vol * unit_sphere_area(n) * beta_raw(n, s) * eps.powf(4.0 - s) / (4.0 - s);
    Ok(IntegralEstimate {
        value,
        error_bound: error + remainder + table.rel_error() * value.abs(),
        method: Method::Adaptive,
        n_evals: evals,
    })
}

/// `∫_M g dμ` for smooth `g` built from `u`: periodic Gauss–Kronrod on a
/// circle, `θ` quadrature about the pole for zonal functions.
fn outer_smooth(
    model: &ManifoldModel,
    u: &dyn SmoothFunction,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    quad: &QuadConfig,
) -> Result<(f64, f64, u64)> {
    let r = match model.kind() {
        ModelKind::Sphere { n: 2, radius } => {
            let pole: Vec<f64> = u
                .reduction_pole()
                .ok_or_else(|| Error::UnsupportedModel("smooth functions on Sphere(2) must be zonal".into()))?
                .iter()
                .map(|c| c * radius)
                .collect();
            let frame = Frame::at(model, &pole);
            let radius = *radius;
            let f = |theta: f64| {
                let x = frame.exp2(&pole, radius * theta, 0.0);
                g(&x) * 2.0 * PI * radius * radius * theta.sin()
            };
            let pts: Vec<f64> = (0..=8).map(|i| PI * i as f64 / 8.0).collect();
            gk::adaptive_points_par(&f, &pts, quad.abs_tol, quad.rel_tol * 0.1, quad.max_subdiv)
        }
        _ => {
            let l = model.line_period().ok_or_else(|| Error::UnsupportedModel(model.label()))?;
            let f = |v: f64| g(&model.line_point(v).0);
            let pts: Vec<f64> = (0..=8).map(|i| l * i as f64 / 8.0).collect();
            gk::adaptive_points_par(&f, &pts, quad.abs_tol, quad.rel_tol * 0.1, quad.max_subdiv)
        }
    };
    if !r.converged {
        return Err(Error::Precision {
            message: "outer quadrature did not converge".into(),
            achieved: r.error,
            partial: Some(r.value),
        });
    }
    Ok((r.value, r.error, r.evals as u64))
}

/// `(−Δ)^{s/2} u (x)` as the absolutely convergent singular integral
/// `∫ (u(x) − u(y)) 𝒦ₛ(x, y) dμ(y)`.
pub fn flap_singular(model: &ManifoldModel, u: &dyn SmoothFunction, x: &Point, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    check_s(s)?;
    smooth_domain(u, model)?;
    model.check_point(x)?;
    let eps = quad.diag_cutoff;
    let r_max = radial_extent(model)?;
    let table = RadialTable::build(model, s, eps, r_max, quad)?;
    let n = model.dimension();
    let ux = u.value(&x.0);
    let h = |y: &[f64]| ux - u.value(y);
    let avg = |r: f64| sphere_average(model, &x.0, r, &h, quad);
    let r = shell_integral(model, &table, eps, r_max, &avg, quad);
    if !r.converged {
        return Err(Error::Precision {
            message: "singular Laplacian quadrature did not converge".into(),
            achieved: r.error,
            partial: Some(r.value),
        });
    }
    // ∫_{B_ε} (u(x) − u(y)) 𝒦 = −½ Δu(x) ∫_{B_ε} r²/n 𝒦 + O(ε^{4−s})
    let taylor = -0.5 * u.laplacian(&x.0) * second_moment_of_cutoff(n, s, eps);
    let remainder = taylor.abs() * flat_profile_error(n, s, eps)
        + u.derivative_bound(4) * unit_sphere_area(n) * beta_raw(n, s) * eps.powf(4.0 - s) / (24.0 * (4.0 - s));
    let value = r.value + taylor;
    Ok(IntegralEstimate {
        value,
        error_bound: r.error + remainder + table.rel_error() * r.value.abs(),
        method: Method::Adaptive,
        n_evals: r.evals as u64,
    })
}

/// `(−Δ)^{s/2} u (x) = Γ(−s/2)^{−1} ∫₀^∞ (e^{tΔ}u(x) − u(x)) t^{−1−s/2} dt`.
pub fn flap_bochner(model: &ManifoldModel, u: &dyn SmoothFunction, x: &Point, s: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    check_s(s)?;
    smooth_domain(u, model)?;
    model.check_point(x)?;
    let ux = u.value(&x.0);
    let masses = u.spectral_masses();
    let gap = masses.iter().map(|p| p.0).filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min);
    let mean = u.mean();
    let tail = if gap.is_finite() {
        TailClass::Limit { value: mean - ux, approach: Approach::Exponential(gap) }
    } else {
        TailClass::Limit { value: 0.0, approach: Approach::Exponential(1.0) }
    };
    let r = integrate_time(|t| u.heat_increment(&x.0, t), s, quad, tail)?;
    // Γ(−s/2) = −1/γ(s)
    Ok(r.scaled(-gamma_norm_raw(s)))
}

/// `Σ λₖ^{s/2} mₖ`, the spectral form of `(u, (−Δ)^{s/2} u)`. For `s = 2`
/// this is the Dirichlet energy.
pub fn seminorm_spectral(model: &ManifoldModel, u: &dyn SmoothFunction, s: f64) -> Result<f64> {
    smooth_domain(u, model)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("spectral exponent must be nonnegative, got {s}")));
    }
    let terms: Vec<f64> = u
        .spectral_masses()
        .into_iter()
        .filter(|(l, _)| *l > 0.0)
        .map(|(l, m)| l.powf(0.5 * s) * m)
        .collect();
    Ok(ordered_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circle() -> ManifoldModel {
        ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap()
    }

    fn cosine() -> TrigFunction {
        TrigFunction::from_modes(circle(), &[(1, 1.0, 0.0)]).unwrap()
    }

    #[test]
    fn interaction_of_adjacent_intervals() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default().with_tolerances(1e-8, 1e-12);
        let (a, b) = (Region::ball([0.5], 0.5), Region::ball([1.5], 0.5));
        let j = interaction_js(&m, &a, &b, 0.5, &q).unwrap();
        // β(2 − 2^{1−s})/(s(1−s)) at s = 1/2
        assert!((j.value - 0.467389954510218).abs() <= j.error_bound);
        let back = interaction_js(&m, &b, &a, 0.5, &q).unwrap();
        assert!((j.value - back.value).abs() <= j.error_bound + back.error_bound);
        assert_eq!(interaction_js(&m, &a, &Region::empty(), 0.5, &q).unwrap().value, 0.0);
    }

    #[test]
    fn perimeter_of_empty_set_and_complement() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        assert_eq!(perimeter_ps(&m, &Region::empty(), 0.3, &q).unwrap().value, 0.0);
        let e = Region::ball([0.0], 1.0);
        let p = perimeter_ps(&m, &e, 0.3, &q).unwrap();
        let pc = perimeter_ps(&m, &e.clone().complement(), 0.3, &q).unwrap();
        assert!((p.value - pc.value).abs() <= p.error_bound + pc.error_bound);
        let h = Region::half_space(vec![1.0], 0.0);
        assert!(perimeter_ps(&m, &h, 0.3, &q).is_err());
    }

    #[test]
    fn local_perimeter_reductions() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let s = 0.4;
        let e = Region::ball([0.0], 1.0);
        let p = perimeter_ps(&m, &e, s, &q).unwrap();
        let full = perimeter_local(&m, &e, &Region::FullSpace, s, &q).unwrap();
        assert!((p.value - full.value).abs() <= p.error_bound + full.error_bound);
        let big = Region::ball([0.0], 3.0);
        let inside = perimeter_local(&m, &e, &big, s, &q).unwrap();
        assert!((p.value - inside.value).abs() <= p.error_bound + inside.error_bound);
        let omega = Region::ball([1.0], 1.5);
        let a = perimeter_local(&m, &e, &omega, s, &q).unwrap();
        let b = perimeter_local(&m, &e.clone().complement(), &omega, s, &q).unwrap();
        assert!((a.value - b.value).abs() <= a.error_bound + b.error_bound);
    }

    #[test]
    fn local_perimeter_decomposition() {
        // ½P(E,Ω) = ½P(E∩Ω) − 𝒥(E∩Ω, E∖Ω) + 𝒥(Eᶜ∩Ω, E∖Ω)
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let s = 0.3;
        let e = Region::ball([0.0], 1.0);
        let omega = Region::ball([1.2], 1.0);
        let e_in = e.clone().intersect(omega.clone());
        let e_out = e.clone().intersect(omega.clone().complement());
        let ec_in = e.clone().complement().intersect(omega.clone());
        let lhs = perimeter_local(&m, &e, &omega, s, &q).unwrap().scaled(0.5);
        let rhs = perimeter_ps(&m, &e_in, s, &q)
            .unwrap()
            .scaled(0.5)
            .minus(interaction_js(&m, &e_in, &e_out, s, &q).unwrap())
            .plus(interaction_js(&m, &ec_in, &e_out, s, &q).unwrap());
        assert!((lhs.value - rhs.value).abs() <= lhs.error_bound + rhs.error_bound, "{lhs:?} {rhs:?}");
    }

    #[test]
    fn spectral_values() {
        let m = circle();
        let u = cosine();
        assert_relative_eq!(seminorm_spectral(&m, &u, 1.0).unwrap(), PI, max_relative = 1e-15);
        assert_relative_eq!(seminorm_spectral(&m, &u, 2.0).unwrap(), PI, max_relative = 1e-15);
        let c = TrigFunction::from_modes(m.clone(), &[(0, 2.5, 0.0)]).unwrap();
        assert_eq!(seminorm_spectral(&m, &c, 0.7).unwrap(), 0.0);
        // Dirichlet energy of 2 sin 3x on the circle: 4·9·π
        let v = TrigFunction::from_modes(m.clone(), &[(3, 0.0, 2.0)]).unwrap();
        assert_relative_eq!(seminorm_spectral(&m, &v, 2.0).unwrap(), 36.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn constants_are_killed() {
        let m = circle();
        let q = QuadConfig::default();
        let c = TrigFunction::from_modes(m.clone(), &[(0, 1.7, 0.0)]).unwrap();
        let x = Point::from([0.3]);
        assert_eq!(flap_singular(&m, &c, &x, 0.5, &q).unwrap().value, 0.0);
        assert!(flap_bochner(&m, &c, &x, 0.5, &q).unwrap().value.abs() < 1e-12);
        assert_eq!(seminorm_singular(&m, SeminormArg::Smooth(&c), 0.25, &q).unwrap().value, 0.0);
    }

    #[test]
    fn bochner_on_cosine_at_zero() {
        let m = circle();
        let r = flap_bochner(&m, &cosine(), &Point::from([0.0]), 0.5, &QuadConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn singular_laplacian_of_cosine() {
        let m = circle();
        let q = QuadConfig::default();
        let x = Point::from([0.3]);
        let si = flap_singular(&m, &cosine(), &x, 0.5, &q).unwrap();
        let bo = flap_bochner(&m, &cosine(), &x, 0.5, &q).unwrap();
        assert!((si.value - 0.3f64.cos()).abs() < 1e-6, "{si:?}");
        assert!((si.value - bo.value).abs() < 1e-4);
        // cos(0.3) to six places
        assert!((si.value - 0.955336).abs() < 1e-5);
    }

    #[test]
    fn bochner_is_linear() {
        let m = circle();
        let q = QuadConfig::default();
        let x = Point::from([1.1]);
        let u = TrigFunction::from_modes(m.clone(), &[(1, 1.0, 0.5)]).unwrap();
        let v = TrigFunction::from_modes(m.clone(), &[(2, -0.3, 0.0), (5, 0.0, 0.2)]).unwrap();
        let w = TrigFunction::from_modes(m.clone(), &[(1, 2.0, 1.0), (2, 0.9, 0.0), (5, 0.0, -0.6)]).unwrap();
        let fu = flap_bochner(&m, &u, &x, 0.6, &q).unwrap();
        let fv = flap_bochner(&m, &v, &x, 0.6, &q).unwrap();
        let fw = flap_bochner(&m, &w, &x, 0.6, &q).unwrap();
        let err = 2.0 * fu.error_bound + 3.0 * fv.error_bound + fw.error_bound + 1e-12;
        assert!((fw.value - (2.0 * fu.value - 3.0 * fv.value)).abs() <= err);
    }

    #[test]
    fn seminorm_of_cosine_matches_spectral() {
        let m = circle();
        let q = QuadConfig::default();
        let half = seminorm_singular(&m, SeminormArg::Smooth(&cosine()), 0.25, &q).unwrap().scaled(0.5);
        let spec = seminorm_spectral(&m, &cosine(), 0.5).unwrap();
        assert_relative_eq!(half.value, spec, max_relative = 1e-4);
    }

    #[test]
    fn set_seminorm_is_the_perimeter() {
        let m = circle();
        let q = QuadConfig::default();
        let set = SetFunction { region: Region::arc(0.0, 2.0) };
        let a = seminorm_singular(&m, SeminormArg::Set(&set), 0.2, &q).unwrap();
        let b = perimeter_ps(&m, &set.region, 0.4, &q).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zonal_routes_agree_on_the_sphere() {
        let m = ManifoldModel::sphere(2, 1.0).unwrap();
        let q = QuadConfig::default();
        let u = ZonalFunction::new(m.clone(), [0.0, 0.0, 1.0], vec![0.3, 1.0, 0.0, -0.5]).unwrap();
        let x = Point::from([0.6, 0.0, 0.8]);
        let s = 0.5;
        let si = flap_singular(&m, &u, &x, s, &q).unwrap();
        let bo = flap_bochner(&m, &u, &x, s, &q).unwrap();
        // eigen-exact: Σ c_ℓ λ_ℓ^{s/2} P_ℓ(0.8)
        let z: f64 = 0.8;
        let p = [1.0, z, 0.5 * (3.0 * z * z - 1.0), 0.5 * (5.0 * z.powi(3) - 3.0 * z)];
        let exact = 1.0 * 2f64.powf(0.25) * p[1] - 0.5 * 12f64.powf(0.25) * p[3];
        assert!((bo.value - exact).abs() < 1e-6);
        assert!((si.value - exact).abs() < 1e-4, "{si:?} vs {exact}");
        let half = seminorm_singular(&m, SeminormArg::Smooth(&u), 0.5 * s, &q).unwrap().scaled(0.5);
        assert_relative_eq!(half.value, seminorm_spectral(&m, &u, s).unwrap(), max_relative = 1e-3);
    }

    proptest! {
        #[test]
        fn spectral_interpolation(
            coeffs in proptest::collection::vec((0u32..12, -2.0f64..2.0, -2.0f64..2.0), 1..6),
            s in 0.01f64..0.98,
            frac in 0.01f64..0.99,
        ) {
            let u = TrigFunction::from_modes(circle(), &coeffs).unwrap();
            let sigma = s + frac * (1.0 - s);
            let lhs = u.spectral_moment(s);
            let rhs = u.spectral_moment(0.0).powf(1.0 - s / sigma) * u.spectral_moment(sigma).powf(s / sigma);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }
    }
}
