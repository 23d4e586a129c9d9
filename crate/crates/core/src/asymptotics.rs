//! Small-s sweeps: limit extrapolation, heat density and the predicted limits
//! of the localized perimeter.
//!
//! On a finite-volume model
//! `½P_s(E,Ω) → (μ(E)μ(Eᶜ∩Ω) + μ(E∩Ω)μ(Eᶜ∖Ω))/μ(M)`; on an infinite-volume
//! model with a bounded Ω the limit is `(1−θ)μ(E∩Ω) + θμ(Eᶜ∩Ω)`, where
//! `θ = lim Θ_s` and `Θ_s = ∫_{E∖B_R(p)} 𝒦ₛ(x, p) dμ(x)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::perimeter_local;
use crate::models::{region_check, region_measure, section, ManifoldModel, ModelKind, Point, Region, VolumeClass};
use crate::quadrature::QuadConfig;
use crate::singkernel::kernel_mass;

/// Strictly decreasing values of `s` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SSchedule {
    values: Vec<f64>,
}

impl SSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid("an s-schedule needs at least 3 values"));
        }
        if let Some(bad) = values.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(invalid(format!("s must lie in (0,1), got {bad}")));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("s-schedule must be strictly decreasing"));
        }
        Ok(SSchedule { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for SSchedule {
    fn default() -> Self {
        SSchedule {
            values: vec![0.4, 0.3, 0.2, 0.1, 0.05, 0.025],
        }
    }
}

impl TryFrom<Vec<f64>> for SSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SSchedule::new(v)
    }
}

impl From<SSchedule> for Vec<f64> {
    fn from(s: SSchedule) -> Vec<f64> {
        s.values
    }
}

/// One sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s: f64,
    pub value: f64,
    pub error: f64,
}

/// Result of [`extrapolate_limit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub error: f64,
    /// Intercept of the weighted linear fit on the three smallest `s`.
    pub fit: f64,
    /// Two-point linear extrapolation from the two smallest `s`.
    pub richardson: f64,
    pub residual: f64,
}

/// Limit as `s → 0⁺` of a sweep, from a linear model `v(s) = a + b·s`.
///
/// Both the weighted least-squares intercept on the three smallest `s` and the
/// two-point extrapolation on the two smallest are formed. The two-point value
/// is returned: it carries the smallest model bias when `v` has curvature near
/// 0. The error is the largest of the fit residual, three times the fit/two-point
/// gap and the propagated quadrature error.
pub fn extrapolate_limit(schedule: &SSchedule, values: &[(f64, f64)]) -> Result<Extrapolation> {
    let s = schedule.values();
    if values.len() != s.len() {
        return Err(invalid(format!("{} values for a schedule of {}", values.len(), s.len())));
    }
    if values.len() < 3 {
        return Err(invalid("extrapolation needs at least 3 points"));
    }
    if values.iter().any(|(v, e)| !v.is_finite() || !e.is_finite() || *e < 0.0) {
        return Err(invalid("sweep values must be finite with nonnegative errors"));
    }
    let mut pts: Vec<(f64, f64, f64)> = s.iter().zip(values).map(|(s, (v, e))| (*s, *v, *e)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let three = &pts[..3];

    let scale = three.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(1e-300);
    let w: Vec<f64> = three.iter().map(|p| 1.0 / (p.2 * p.2 + (1e-12 * scale).powi(2))).collect();
    let sw: f64 = w.iter().sum();
    let mx = three.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = three.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = three.iter().zip(&w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = three.iter().zip(&w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let fit = my - b * mx;
    let residual = three.iter().map(|p| (p.1 - fit - b * p.0).abs()).fold(0.0, f64::max);

    let (s1, v1, e1) = pts[0];
    let (s2, v2, e2) = pts[1];
    let richardson = (s2 * v1 - s1 * v2) / (s2 - s1);
    let propagated = (s2 * e1 + s1 * e2) / (s2 - s1);

    let error = residual.max(3.0 * (fit - richardson).abs()).max(propagated);
    Ok(Extrapolation {
        limit: richardson,
        error,
        fit,
        richardson,
        residual,
    })
}

/// Sweep of `Θ_s` at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSweep {
    pub radius: f64,
    pub per_s: Vec<SweepPoint>,
    pub theta: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    /// `(s, Θ_s)` at the first radius.
    pub per_s: Vec<(f64, f64)>,
    pub theta: f64,
    pub error: f64,
    pub r_values_checked: Vec<f64>,
    pub r_consistent: bool,
    pub radii: Vec<RadiusSweep>,
    /// Normalized solid angle of `E` at infinity, when it is available in closed form.
    pub analytic_theta: Option<f64>,
    pub converged: bool,
    pub diagnostics: Vec<String>,
}

/// `θ(E)` from sweeps of `Θ_s` at each radius about `p`.
pub fn heat_density(
    model: &ManifoldModel,
    e: &Region,
    p: &Point,
    radii: &[f64],
    schedule: &SSchedule,
    quad: &QuadConfig,
) -> Result<ThetaReport> {
    if model.volume_class() != VolumeClass::Infinite {
        return Err(invalid("heat density is defined here on infinite-volume models only"));
    }
    region_check(model, e)?;
    model.check_point(p)?;
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("heat density needs positive radii"));
    }
    let s = schedule.values();
    let cells: Vec<(usize, usize)> = (0..radii.len()).flat_map(|i| (0..s.len()).map(move |j| (i, j))).collect();
    let results: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let region = e.clone().intersect(Region::ball(p.clone(), radii[i]).complement());
            let q = quad.clone().with_seed(quad.seed ^ ((i as u64) << 32 | j as u64));
            kernel_mass(model, &region, p, s[j], &q).map(|k| (k.value, k.error_bound))
        })
        .collect();

    let mut diagnostics = Vec::new();
    let mut sweeps = Vec::new();
    let mut converged = true;
    for (i, &radius) in radii.iter().enumerate() {
        let mut per_s = Vec::new();
        let mut ok = true;
        for j in 0..s.len() {
            match &results[i * s.len() + j] {
                Ok((v, err)) => per_s.push(SweepPoint { s: s[j], value: *v, error: *err }),
                Err(err) => {
                    ok = false;
                    diagnostics.push(format!("R = {radius}, s = {}: {err}", s[j]));
                    per_s.push(SweepPoint { s: s[j], value: f64::NAN, error: f64::INFINITY });
                }
            }
        }
        let (theta, error) = if ok {
            let pairs: Vec<(f64, f64)> = per_s.iter().map(|p| (p.value, p.error)).collect();
            let x = extrapolate_limit(schedule, &pairs)?;
            (x.limit, x.error)
        } else {
            converged = false;
            (f64::NAN, f64::INFINITY)
        };
        sweeps.push(RadiusSweep { radius, per_s, theta, error });
    }

    let mut r_consistent = converged;
    for a in &sweeps {
        for b in &sweeps {
            if (a.theta - b.theta).abs() > a.error + b.error {
                r_consistent = false;
            }
        }
    }
    let first = &sweeps[0];
    let (theta, error) = if converged {
        let spread = sweeps.iter().map(|w| (w.theta - first.theta).abs()).fold(0.0, f64::max);
        (first.theta, first.error.max(spread))
    } else {
        (f64::NAN, f64::INFINITY)
    };
    if converged && !(-error - 1e-9..=1.0 + error + 1e-9).contains(&theta) {
        diagnostics.push(format!("extrapolated θ = {theta} lies outside [0, 1]"));
    }
    Ok(ThetaReport {
        per_s: first.per_s.iter().map(|p| (p.s, p.value)).collect(),
        theta,
        error,
        r_values_checked: radii.to_vec(),
        r_consistent,
        radii: sweeps,
        analytic_theta: analytic_theta(model, e),
        converged,
        diagnostics,
    })
}

/// `θ(E)` in closed form: the normalized solid angle of `E` at infinity on
/// Euclidean space; on H³ only the bounded and co-bounded cases.
pub fn analytic_theta(model: &ManifoldModel, e: &Region) -> Option<f64> {
    match model.kind() {
        ModelKind::Euclidean { .. } => {
            let o = model.origin();
            let scale = e.critical_radii(model, &o.0).into_iter().fold(1.0, f64::max);
            section(model, e, &o.0, 1e12 * scale).ok().map(|s| s.fraction() + 0.0)
        }
        ModelKind::Hyperbolic3 => {
            if matches!(e, Region::FullSpace) || e.chart_bound(model).is_none() && e.clone().complement().chart_bound(model).is_some() {
                Some(1.0)
            } else if e.chart_bound(model).is_some() {
                Some(0.0)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// `(μ(E)μ(Eᶜ∩Ω) + μ(E∩Ω)μ(Eᶜ∖Ω))/μ(M)`.
pub fn predicted_limit_finite(model: &ManifoldModel, e: &Region, omega: &Region) -> Result<f64> {
    let VolumeClass::Finite(vol) = model.volume_class() else {
        return Err(invalid("the finite-volume prediction needs a finite-volume model"));
    };
    region_check(model, e)?;
    region_check(model, omega)?;
    let ec = e.clone().complement();
    let oc = omega.clone().complement();
    let m = |r: Region| region_measure(model, &r);
    let me = m(e.clone())?;
    let ec_in = m(ec.clone().intersect(omega.clone()))?;
    let e_in = m(e.clone().intersect(omega.clone()))?;
    let ec_out = m(ec.intersect(oc))?;
    Ok((me * ec_in + e_in * ec_out) / vol)
}

/// `(1−θ)μ(E∩Ω) + θμ(Eᶜ∩Ω)`.
pub fn predicted_limit_infinite(theta: f64, mu_e_in: f64, mu_ec_in: f64) -> Result<f64> {
    if !(theta >= -1e-9 && theta <= 1.0 + 1e-9) {
        return Err(invalid(format!("θ must lie in [0, 1], got {theta}")));
    }
    if !(mu_e_in.is_finite() && mu_ec_in.is_finite() && mu_e_in >= 0.0 && mu_ec_in >= 0.0) {
        return Err(invalid("measures inside Ω must be finite and nonnegative"));
    }
    if mu_e_in == mu_ec_in {
        return Ok(mu_e_in);
    }
    let theta = theta.clamp(0.0, 1.0);
    Ok((1.0 - theta) * mu_e_in + theta * mu_ec_in)
}

/// `θ = (lim − μ(E∩Ω))/(μ(Ω∖E) − μ(E∩Ω))`.
pub fn theta_inverse(limit: f64, mu_e_in: f64, mu_ec_in: f64) -> Result<f64> {
    if mu_e_in == mu_ec_in {
        return Err(Error::Degenerate(
            "μ(E∩Ω) = μ(Ω∖E): the limit is independent of θ, which cannot be recovered".into(),
        ));
    }
    Ok((limit - mu_e_in) / (mu_ec_in - mu_e_in))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Where the θ of an infinite-volume prediction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    Analytic,
    HeatDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    /// `½P_s(E, Ω)` along the schedule.
    pub per_s: Vec<SweepPoint>,
    pub extrapolated_limit: f64,
    pub extrapolation_error: f64,
    pub predicted_limit: f64,
    pub theta: Option<f64>,
    pub theta_source: Option<ThetaSource>,
    /// Relative tolerance (absolute when the prediction is 0).
    pub tolerance: f64,
    pub verdict: Verdict,
    pub runtime_seconds: f64,
}

impl ExperimentReport {
    pub fn deviation(&self) -> f64 {
        (self.extrapolated_limit - self.predicted_limit).abs()
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    let scale = if target == 0.0 { 1.0 } else { target.abs() };
    (value - target).abs() <= tol * scale
}

/// Sweep `½P_s(E, Ω)` over the schedule, extrapolate to `s → 0⁺` and compare
/// with the predicted limit.
pub fn run_asymptotic_experiment(
    model: &ManifoldModel,
    e: &Region,
    omega: &Region,
    schedule: &SSchedule,
    quad: &QuadConfig,
    tolerance: f64,
) -> Result<ExperimentReport> {
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let start = Instant::now();
    region_check(model, e)?;
    region_check(model, omega)?;
    let (predicted, theta, source) = match model.volume_class() {
        VolumeClass::Finite(_) => (predicted_limit_finite(model, e, omega)?, None, None),
        VolumeClass::Infinite if omega.is_full() => {
            // ½P_s(E) → μ(E) for bounded E, and P_s(E) = P_s(Eᶜ)
            let ec = e.clone().complement();
            let bounded = if e.chart_bound(model).is_some() {
                e
            } else if ec.chart_bound(model).is_some() {
                &ec
            } else {
                return Err(invalid("on infinite-volume models with Ω = FullSpace, E or its complement must be bounded"));
            };
            (region_measure(model, bounded)?, Some(0.0), Some(ThetaSource::Analytic))
        }
        VolumeClass::Infinite => {
            if omega.chart_bound(model).is_none() {
                return Err(invalid("on infinite-volume models Ω must be bounded or the whole space"));
            }
            let mu_e_in = region_measure(model, &e.clone().intersect(omega.clone()))?;
            let mu_ec_in = region_measure(model, &e.clone().complement().intersect(omega.clone()))?;
            let (theta, source) = match analytic_theta(model, e) {
                Some(t) => (t, ThetaSource::Analytic),
                None => {
                    let p = model.origin();
                    let rep = heat_density(model, e, &p, &[1.0, 2.0], schedule, quad)?;
                    if !rep.converged {
                        return Err(Error::Precision {
                            message: format!("heat density did not converge: {}", rep.diagnostics.join("; ")),
                            achieved: rep.error,
                            partial: None,
                        });
                    }
                    (rep.theta.clamp(0.0, 1.0), ThetaSource::HeatDensity)
                }
            };
            (predicted_limit_infinite(theta, mu_e_in, mu_ec_in)?, Some(theta), Some(source))
        }
    };

    let s = schedule.values();
    let sweep: Vec<Result<SweepPoint>> = s
        .par_iter()
        .enumerate()
        .map(|(j, &sj)| {
            let q = quad.clone().with_seed(quad.seed ^ j as u64);
            perimeter_local(model, e, omega, sj, &q).map(|p| SweepPoint {
                s: sj,
                value: 0.5 * p.value,
                error: 0.5 * p.error_bound,
            })
        })
        .collect();
    let per_s = sweep.into_iter().collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = per_s.iter().map(|p| (p.value, p.error)).collect();
    let x = extrapolate_limit(schedule, &pairs)?;
    let verdict = if within(x.limit, predicted, tolerance) { Verdict::Pass } else { Verdict::Fail };
    Ok(ExperimentReport {
        model: model.label(),
        per_s,
        extrapolated_limit: x.limit,
        extrapolation_error: x.error,
        predicted_limit: predicted,
        theta,
        theta_source: source,
        tolerance,
        verdict,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn default_s() -> Vec<f64> {
        SSchedule::default().values().to_vec()
    }

    #[test]
    fn schedule_validation() {
        assert!(SSchedule::new(vec![0.3, 0.2]).is_err());
        assert!(SSchedule::new(vec![0.3, 0.2, 0.2]).is_err());
        let e = SSchedule::new(vec![1.2, 0.5, 0.1]).unwrap_err();
        assert!(e.to_string().contains("s must lie in (0,1)"));
        assert_eq!(SSchedule::default().values().len(), 6);
    }

    #[test]
    fn linear_values_are_exact() {
        let sch = SSchedule::default();
        let v: Vec<(f64, f64)> = default_s().iter().map(|s| (2.0 - 3.0 * s, 0.0)).collect();
        let x = extrapolate_limit(&sch, &v).unwrap();
        assert_relative_eq!(x.limit, 2.0, epsilon = 1e-13);
        assert!(x.error < 1e-12);
    }

    #[test]
    fn constants_have_no_error() {
        let sch = SSchedule::default();
        let v: Vec<(f64, f64)> = default_s().iter().map(|_| (0.7, 0.0)).collect();
        let x = extrapolate_limit(&sch, &v).unwrap();
        assert_relative_eq!(x.limit, 0.7, epsilon = 1e-14);
        assert!(x.error < 1e-13);
    }

    #[test]
    fn log_curvature_is_covered() {
        let sch = SSchedule::default();
        let v: Vec<(f64, f64)> = default_s().iter().map(|s| (1.0 + s * (1.0 / s).ln(), 0.0)).collect();
        let x = extrapolate_limit(&sch, &v).unwrap();
        assert!((x.limit - 1.0).abs() < 0.05);
        assert!((x.limit - 1.0).abs() <= x.error);
    }

    #[test]
    fn too_few_points() {
        assert!(extrapolate_limit(&SSchedule::default(), &[(1.0, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn finite_predictions() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
        let e = Region::arc(0.0, PI);
        assert_relative_eq!(predicted_limit_finite(&t, &e, &Region::FullSpace).unwrap(), PI / 2.0, max_relative = 1e-14);
        let omega = Region::arc(0.0, PI / 2.0);
        assert_relative_eq!(predicted_limit_finite(&t, &e, &omega).unwrap(), PI / 4.0, max_relative = 1e-14);
        let g = ManifoldModel::gaussian(1).unwrap();
        let h = Region::half_space(vec![1.0], 0.0);
        assert_relative_eq!(predicted_limit_finite(&g, &h, &Region::FullSpace).unwrap(), 0.25, max_relative = 1e-14);
        assert!(predicted_limit_finite(&ManifoldModel::euclidean(1).unwrap(), &h, &Region::FullSpace).is_err());
    }

    #[test]
    fn infinite_predictions_and_inverse() {
        assert_eq!(predicted_limit_infinite(0.0, 1.0, 3.0).unwrap(), 1.0);
        assert_relative_eq!(predicted_limit_infinite(0.25, PI / 4.0, 3.0 * PI / 4.0).unwrap(), 3.0 * PI / 8.0, max_relative = 1e-15);
        for th in [0.0, 0.3, 1.0] {
            assert_eq!(predicted_limit_infinite(th, PI / 2.0, PI / 2.0).unwrap(), PI / 2.0);
        }
        assert!(predicted_limit_infinite(1.1, 1.0, 2.0).is_err());
        assert_eq!(theta_inverse(1.0, 1.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(theta_inverse(3.0 * PI / 8.0, PI / 4.0, 3.0 * PI / 4.0).unwrap(), 0.25, max_relative = 1e-14);
        assert!(matches!(theta_inverse(1.0, 2.0, 2.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn analytic_angles() {
        let e2 = ManifoldModel::euclidean(2).unwrap();
        let quarter = Region::half_space(vec![1.0, 0.0], 0.0).intersect(Region::half_space(vec![0.0, 1.0], 0.0));
        assert_relative_eq!(analytic_theta(&e2, &quarter).unwrap(), 0.25, epsilon = 1e-9);
        assert_eq!(analytic_theta(&e2, &Region::ball([3.0, 0.0], 1.0)).unwrap(), 0.0);
        assert_eq!(analytic_theta(&e2, &Region::FullSpace).unwrap(), 1.0);
        let h = ManifoldModel::hyperbolic3();
        assert_eq!(analytic_theta(&h, &Region::ball([0.1, 0.0, 0.0], 0.3)), Some(0.0));
        assert_eq!(analytic_theta(&h, &Region::half_space(vec![1.0, 0.0, 0.0], 0.0)), None);
    }

    #[test]
    fn heat_density_of_the_line() {
        let m = ManifoldModel::euclidean(1).unwrap();
        let q = QuadConfig::default();
        let rep = heat_density(&m, &Region::FullSpace, &Point::from([0.0]), &[1.0, 2.0], &SSchedule::default(), &q).unwrap();
        assert!((rep.theta - 1.0).abs() < 0.01, "{rep:?}");
        assert!(rep.r_consistent);
        let half = heat_density(&m, &Region::half_space(vec![1.0], 0.0), &Point::from([0.0]), &[1.0], &SSchedule::default(), &q).unwrap();
        assert!((half.theta - 0.5).abs() < 0.01);
        assert!(heat_density(&ManifoldModel::sphere(2, 1.0).unwrap(), &Region::FullSpace, &Point::from([0.0, 0.0, 1.0]), &[1.0], &SSchedule::default(), &q).is_err());
    }
}
