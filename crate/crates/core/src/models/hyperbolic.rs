//! Poincaré ball model of H³.

use super::{dist_sq, dot};

/// Geodesic distance, via `sinh(d/2) = |x−y| / √((1−|x|²)(1−|y|²))`.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    let q = ((1.0 - dot(x, x)) * (1.0 - dot(y, y))).sqrt();
    2.0 * (dist_sq(x, y).sqrt() / q).asinh()
}

/// Möbius translation taking the origin to `a`.
pub fn translate(a: &[f64], x: &[f64]) -> [f64; 3] {
    let ax = dot(a, x);
    let aa = dot(a, a);
    let xx = dot(x, x);
    let den = 1.0 + 2.0 * ax + aa * xx;
    let ca = (1.0 + 2.0 * ax + xx) / den;
    let cx = (1.0 - aa) / den;
    [
        ca * a[0] + cx * x[0],
        ca * a[1] + cx * x[1],
        ca * a[2] + cx * x[2],
    ]
}

/// Möbius translation taking `a` to the origin.
pub fn translate_to_origin(a: &[f64], x: &[f64]) -> [f64; 3] {
    translate(&[-a[0], -a[1], -a[2]], x)
}

/// Euclidean radius in the ball of a point at hyperbolic distance `rho` from the origin.
pub fn ball_radius(rho: f64) -> f64 {
    (0.5 * rho).tanh()
}

/// Hyperbolic distance from the origin of a point with Euclidean norm `r < 1`.
pub fn origin_distance(r: f64) -> f64 {
    2.0 * r.atanh()
}

/// Point at hyperbolic distance `rho` from `p` in the direction `w` (unit vector
/// in the tangent space at `p`, identified with the tangent space at the origin
/// through the translation).
pub fn exp_from(p: &[f64], rho: f64, w: &[f64; 3]) -> [f64; 3] {
    let r = ball_radius(rho);
    translate(p, &[r * w[0], r * w[1], r * w[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn translation_is_an_isometry() {
        let a = [0.3, -0.2, 0.1];
        let x = [0.5, 0.1, -0.3];
        let y = [-0.4, 0.2, 0.6];
        let d0 = distance(&x, &y);
        let d1 = distance(&translate(&a, &x), &translate(&a, &y));
        assert_relative_eq!(d0, d1, epsilon = 1e-12);
        let back = translate_to_origin(&a, &translate(&a, &x));
        for i in 0..3 {
            assert_relative_eq!(back[i], x[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn distance_matches_arccosh_form() {
        let x = [0.1, 0.2, 0.3];
        let y = [-0.5, 0.0, 0.4];
        let oracle = (1.0
            + 2.0 * dist_sq(&x, &y) / ((1.0 - dot(&x, &x)) * (1.0 - dot(&y, &y))))
        .acosh();
        assert_relative_eq!(distance(&x, &y), oracle, epsilon = 1e-13);
    }

    #[test]
    fn exp_reaches_requested_distance() {
        let p = [0.2, 0.4, -0.1];
        let q = exp_from(&p, 1.7, &[0.0, 0.6, 0.8]);
        assert_relative_eq!(distance(&p, &q), 1.7, epsilon = 1e-12);
    }
}
