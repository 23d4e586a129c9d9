//! Singular-integral, Bochner and spectral fractional Laplacians agree on
//! trigonometric polynomials on the circle.

use std::f64::consts::PI;

use fracperim_core::functionals::{
    flap_bochner, flap_singular, seminorm_singular, seminorm_spectral, SeminormArg, SmoothFunction, TrigFunction,
};
use fracperim_core::{ManifoldModel, Point, QuadConfig};

const MODES: [(u32, f64, f64); 3] = [(1, 1.0, 0.0), (2, 0.0, 0.5), (3, 0.3, -0.2)];

fn circles() -> Vec<ManifoldModel> {
    vec![
        ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap(),
        ManifoldModel::sphere(1, 1.0).unwrap(),
    ]
}

fn probe(model: &ManifoldModel, theta: f64) -> Point {
    match model.chart_size() {
        1 => Point::from([theta]),
        _ => Point::from([theta.cos(), theta.sin()]),
    }
}

/// `Σ k^s (aₖ cos kθ + bₖ sin kθ)` for period 2π.
fn spectral_flap(theta: f64, s: f64) -> f64 {
    MODES
        .iter()
        .map(|&(k, a, b)| {
            let k = k as f64;
            k.powf(s) * (a * (k * theta).cos() + b * (k * theta).sin())
        })
        .sum()
}

#[test]
fn three_laplacians_agree_pointwise() {
    let q = QuadConfig::default();
    for model in circles() {
        let u = TrigFunction::from_modes(model.clone(), &MODES).unwrap();
        for s in [0.2, 0.5, 0.8] {
            for theta in [0.0, 0.7, 1.9, 3.3, 5.5] {
                let x = probe(&model, theta);
                let si = flap_singular(&model, &u, &x, s, &q).unwrap();
                let bo = flap_bochner(&model, &u, &x, s, &q).unwrap();
                let sp = spectral_flap(theta, s);
                assert!((si.value - bo.value).abs() < 1e-4, "{} s={s} θ={theta}: {si:?} {bo:?}", model.label());
                assert!((bo.value - sp).abs() < 1e-6, "{} s={s} θ={theta}: {bo:?} vs {sp}", model.label());
            }
        }
    }
}

#[test]
fn seminorms_agree() {
    let q = QuadConfig::default();
    for model in circles() {
        let u = TrigFunction::from_modes(model.clone(), &MODES).unwrap();
        for s in [0.2, 0.5, 0.8] {
            let spectral = seminorm_spectral(&model, &u, s).unwrap();
            // Σ k^s · π (a² + b²)
            let oracle: f64 = MODES.iter().map(|&(k, a, b)| (k as f64).powf(s) * PI * (a * a + b * b)).sum();
            assert!((spectral - oracle).abs() < 1e-12 * oracle);
            // the double integral counts every pair twice
            let singular = seminorm_singular(&model, SeminormArg::Smooth(&u), s / 2.0, &q).unwrap().scaled(0.5);
            assert!((singular.value - spectral).abs() < 1e-3 * spectral, "{} s={s}: {singular:?} vs {spectral}", model.label());
        }
    }
}

#[test]
fn constants_are_in_the_kernel() {
    let q = QuadConfig::default();
    let model = ManifoldModel::flat_torus(vec![2.0 * PI]).unwrap();
    let u = TrigFunction::from_modes(model.clone(), &[(0, 2.5, 0.0)]).unwrap();
    assert_eq!(u.mean(), 2.5);
    let x = Point::from([1.0]);
    assert!(flap_bochner(&model, &u, &x, 0.5, &q).unwrap().value.abs() < 1e-10);
    assert!(flap_singular(&model, &u, &x, 0.5, &q).unwrap().value.abs() < 1e-10);
    assert_eq!(seminorm_spectral(&model, &u, 0.5).unwrap(), 0.0);
}
