//! The singular kernel `𝒦ₛ(x, y) = |Γ(−s/2)|⁻¹ ∫₀^∞ H(x, y, t) t^{-1-s/2} dt`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::heatkernel::{self, kernel_raw, radial_kernel, semigroup_indicator, tail_class, time_horizon};
use crate::models::{ManifoldModel, ModelKind, Point, Region};
use crate::quadrature::{integrate_time_range, Approach, QuadConfig, TailClass};

/// Series truncation used inside time integrals.
const SERIES_TOL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub error_bound: f64,
}

fn check_index(s: f64, hi: f64) -> Result<()> {
    if !(s > 0.0 && s < hi) {
        return Err(invalid(format!("s must lie in (0, {hi}), got {s}")));
    }
    Ok(())
}

/// `1/|Γ(−s/2)| = (s/2)/Γ(1 − s/2)`.
pub fn gamma_norm(s: f64) -> Result<f64> {
    check_index(s, 2.0)?;
    Ok(gamma_norm_raw(s))
}

pub(crate) fn gamma_norm_raw(s: f64) -> f64 {
    0.5 * s / gamma(1.0 - 0.5 * s)
}

/// `β_{n,s} = s 2^{s−1} Γ((n+s)/2) / (π^{n/2} Γ(1 − s/2))`, the constant of
/// `𝒦ₛ(x, y) = β_{n,s} |x − y|^{−n−s}` on ℝⁿ.
pub fn beta_ns(n: usize, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    check_index(s, 1.0)?;
    Ok(beta_raw(n, s))
}

/// [`beta_ns`] on the whole range `0 < s < 2`.
pub(crate) fn beta_raw(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    s * 2f64.powf(s - 1.0) * gamma(0.5 * (nf + s)) / (PI.powf(0.5 * nf) * gamma(1.0 - 0.5 * s))
}

/// `𝒦ₛ(x, y)` by time quadrature of the heat kernel. Accepts `0 < s < 2` so
/// that the doubled index of the `Hˢ` seminorm can be passed directly.
pub fn kernel_ks(model: &ManifoldModel, x: &Point, y: &Point, s: f64, quad: &QuadConfig) -> Result<KernelValue> {
    model.check_point(x)?;
    model.check_point(y)?;
    check_index(s, 2.0)?;
    quad.validate()?;
    kernel_raw_ks(model, &x.0, &y.0, s, quad)
}

pub(crate) fn kernel_raw_ks(model: &ManifoldModel, x: &[f64], y: &[f64], s: f64, quad: &QuadConfig) -> Result<KernelValue> {
    // fixed argument order keeps the result bitwise symmetric
    let (x, y) = if x.iter().map(|v| v.to_bits()).lt(y.iter().map(|v| v.to_bits())) { (x, y) } else { (y, x) };
    let d = model.dist_unchecked(x, y);
    if d == 0.0 {
        return Err(Error::SingularInput("𝒦ₛ is singular on the diagonal".into()));
    }
    let f = |t: f64| kernel_raw(model, x, y, t, SERIES_TOL).map(|h| h.value).unwrap_or(f64::NAN);
    time_transform(model, f, d, s, quad)
}

/// `𝒦ₛ` as a function of distance on isotropic models.
pub fn radial_ks(model: &ManifoldModel, r: f64, s: f64, quad: &QuadConfig) -> Result<KernelValue> {
    check_index(s, 2.0)?;
    if !model.is_isotropic() {
        return Err(invalid(format!("{} is not isotropic", model.label())));
    }
    if !(r > 0.0) {
        return Err(Error::SingularInput("𝒦ₛ is singular on the diagonal".into()));
    }
    let f = |t: f64| radial_kernel(model, r, t, SERIES_TOL).map(|h| h.value).unwrap_or(f64::NAN);
    time_transform(model, f, r, s, quad)
}

fn time_transform<F: Fn(f64) -> f64>(model: &ManifoldModel, f: F, d: f64, s: f64, quad: &QuadConfig) -> Result<KernelValue> {
    let horizon = time_horizon(model, d, s, quad);
    let est = integrate_time_range(&f, s, quad, tail_class(model), None, horizon)?;
    if !est.value.is_finite() {
        return Err(Error::Precision {
            message: "heat kernel evaluation failed inside the time integral".into(),
            achieved: f64::INFINITY,
            partial: None,
        });
    }
    let c = gamma_norm_raw(s);
    // Series truncation: at most SERIES_TOL per evaluation, over t ≥ d²/3000.
    let t_lo = (d * d / 3000.0).max(1e-300);
    let trunc = SERIES_TOL * (2.0 / s) * t_lo.powf(-0.5 * s);
    Ok(KernelValue {
        value: c * est.value,
        error_bound: c * (est.error_bound + trunc),
    })
}

/// `𝒦ₛ` tabulated on a logarithmic grid of distances, for isotropic models.
#[derive(Debug, Clone)]
pub struct RadialTable {
    s: f64,
    ln_r0: f64,
    h: f64,
    ln_k: Vec<f64>,
    r_max: f64,
    /// Relative error bound of interpolated values.
    rel_error: f64,
}

/// Grid nodes per unit of `ln r`.
const NODES_PER_EFOLD: f64 = 40.0;

impl RadialTable {
    /// Tabulates `𝒦ₛ(r)` for `r ∈ [r_min, r_max]`.
    pub fn build(model: &ManifoldModel, s: f64, r_min: f64, r_max: f64, quad: &QuadConfig) -> Result<RadialTable> {
        check_index(s, 2.0)?;
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(invalid("table needs 0 < r_min < r_max"));
        }
        let h = 1.0 / NODES_PER_EFOLD;
        let ln_r0 = r_min.ln() - 2.0 * h;
        let count = ((r_max.ln() - ln_r0) / h).ceil() as usize + 3;
        let cap = model.diameter();
        let node_r = |i: usize| {
            let r = (ln_r0 + i as f64 * h).exp();
            // beyond the diameter the kernel is continued by its value there
            cap.map_or(r, |d| r.min(d))
        };
        let vals: Vec<Result<KernelValue>> = (0..count).into_par_iter().map(|i| radial_ks(model, node_r(i), s, quad)).collect();
        let mut ln_k = Vec::with_capacity(count);
        let mut rel_error = 0.0f64;
        for v in vals {
            let v = v?;
            ln_k.push(v.value.ln());
            rel_error = rel_error.max(v.error_bound / v.value);
        }
        let mut table = RadialTable {
            s,
            ln_r0,
            h,
            ln_k,
            r_max,
            rel_error,
        };
        // Interpolation error, measured against direct evaluation at cell midpoints.
        let probes: Vec<usize> = (1..count.saturating_sub(2)).step_by(7).collect();
        let checks: Vec<Result<f64>> = probes
            .par_iter()
            .map(|&i| {
                let r = (ln_r0 + (i as f64 + 0.5) * h).exp();
                let r = cap.map_or(r, |d| r.min(d));
                let exact = radial_ks(model, r, s, quad)?.value;
                Ok((table.eval(r) - exact).abs() / exact)
            })
            .collect();
        let mut interp = 0.0f64;
        for c in checks {
            interp = interp.max(c?);
        }
        table.rel_error += 4.0 * interp;
        Ok(table)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }

    /// Interpolated `𝒦ₛ(r)` (cubic Lagrange in `(ln r, ln 𝒦)`).
    pub fn eval(&self, r: f64) -> f64 {
        let u = (r.ln() - self.ln_r0) / self.h;
        let n = self.ln_k.len();
        let i = (u.floor() as isize).clamp(1, n as isize - 3) as usize;
        let t = u - i as f64;
        let (y0, y1, y2, y3) = (self.ln_k[i - 1], self.ln_k[i], self.ln_k[i + 1], self.ln_k[i + 2]);
        // nodes at −1, 0, 1, 2
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        (l0 * y0 + l1 * y1 + l2 * y2 + l3 * y3).exp()
    }
}

/// `∫_region 𝒦ₛ(x, p) dμ(x)` for a region kept away from `p`, through the
/// semigroup: `|Γ(−s/2)|⁻¹ ∫₀^∞ (e^{tΔ}χ_region)(p) t^{-1-s/2} dt`.
///
/// On infinite-volume models the large-time limit of `e^{tΔ}χ_region(p)` is
/// estimated from its values at `T, 16T, 256T` by Aitken extrapolation.
pub fn kernel_mass(model: &ManifoldModel, region: &Region, p: &Point, s: f64, quad: &QuadConfig) -> Result<KernelValue> {
    check_index(s, 2.0)?;
    model.check_point(p)?;
    if crate::models::region_contains(model, region, p)? {
        return Err(Error::SingularInput("kernel mass of a region containing the base point".into()));
    }
    let f = |t: f64| semigroup_indicator(model, region, p, t, quad).map(|e| e.value).unwrap_or(f64::NAN);
    // The power-law approach on infinite-volume models is only clean once
    // √t is far beyond every length scale of the region seen from p.
    let scale = region.critical_radii(model, &p.0).into_iter().fold(1.0f64, f64::max);
    let horizon = 4.0 * quad.t_split.max(1.0 / s);
    let horizon = match model.volume_class() {
        crate::models::VolumeClass::Infinite if matches!(model.kind(), ModelKind::Euclidean { .. }) => horizon.max(1e6 * scale * scale),
        crate::models::VolumeClass::Infinite => horizon.max(40.0 + 4.0 * scale),
        _ => horizon,
    };
    let tail = match model.volume_class().finite() {
        Some(vol) => {
            let m = crate::models::region_measure(model, region)?;
            let gap = heatkernel::spectral_gap(model).unwrap_or(1.0);
            TailClass::Limit {
                value: m / vol,
                approach: Approach::Exponential(gap),
            }
        }
        None => {
            let (value, alpha, _) = aitken(&f, horizon);
            TailClass::Limit {
                value,
                approach: Approach::Power(alpha),
            }
        }
    };
    let horizon = match model.volume_class().finite() {
        Some(_) => tail.default_horizon(s, quad),
        None => horizon,
    };
    let est = integrate_time_range(&f, s, quad, tail, None, horizon)?;
    if !est.value.is_finite() {
        return Err(Error::Precision {
            message: "semigroup evaluation failed inside the time integral".into(),
            achieved: f64::INFINITY,
            partial: None,
        });
    }
    let extra = match tail {
        TailClass::Limit { approach: Approach::Power(_), .. } => aitken(&f, horizon).2 * (2.0 / s) * horizon.powf(-0.5 * s),
        _ => 0.0,
    };
    // Semigroup quadrature errors (absolute, per evaluation) over t ≥ 1e-12.
    let semigroup_err = quad.abs_tol * (2.0 / s) * 1e-12f64.powf(-0.5 * s);
    let c = gamma_norm_raw(s);
    Ok(KernelValue {
        value: c * est.value,
        error_bound: c * (est.error_bound + extra + semigroup_err),
    })
}

/// Aitken extrapolation of `f(t)` as `t → ∞` from `T, 16T, 256T`, assuming
/// `f(t) ≈ L + c t^{−α}`. Returns `(L, α, error estimate)`.
pub(crate) fn aitken<F: Fn(f64) -> f64>(f: &F, t: f64) -> (f64, f64, f64) {
    let (a, b, c) = (f(t), f(16.0 * t), f(256.0 * t));
    let d1 = a - b;
    let d2 = b - c;
    if d1.abs() < 1e-15 || d2.abs() < 1e-15 || d2 / d1 <= 0.0 || d2 / d1 >= 1.0 {
        return (c, 1.0, d2.abs());
    }
    let q = d2 / d1;
    let limit = c - d2 * q / (1.0 - q);
    let alpha = (-q.ln() / 16f64.ln()).clamp(0.1, 10.0);
    (limit, alpha, (limit - c).abs() * 0.1 + 1e-14)
}

/// Closed form of `𝒦ₛ` on ℝⁿ, `β_{n,s} r^{−n−s}`.
pub fn euclidean_ks(n: usize, s: f64, r: f64) -> f64 {
    beta_raw(n, s) * r.powf(-(n as f64) - s)
}

/// Whether the model's `𝒦ₛ` depends only on distance and is tabulated in pair quadrature.
pub(crate) fn tabulable(model: &ManifoldModel) -> bool {
    model.is_isotropic() && !matches!(model.kind(), ModelKind::GaussianSpace { .. })
}
