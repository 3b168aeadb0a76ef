use crate::density::NormalizedDensity;
use crate::error::{Result, WedgeError};
use crate::geometry::{unit, Drift, Face, Vec2, WedgeGeometry};
use crate::quadrature::{radial_moment, AngularRule};

/// Outcome of the exponential test-function identity over a set of `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarCheck {
    pub residuals: Vec<f64>,
    /// Largest change of any residual when the angular rule is halved.
    pub quadrature_error_estimate: f64,
}

impl BarCheck {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }
}

/// `lambda` lies in the dual cone iff `<lambda, w(0)> >= 0` and
/// `<lambda, w(xi)> >= 0`.
pub fn in_dual_cone(g: &WedgeGeometry, lambda: &Vec2) -> bool {
    let tol = 1e-14 * lambda.norm();
    lambda.dot(&g.face_direction(Face::F1)) >= -tol
        && lambda.dot(&g.face_direction(Face::F2)) >= -tol
}

/// `int_S exp(-<lambda, x>) p(x) dx` with the radial part exact.
fn area_integral(den: &NormalizedDensity, lambda: &Vec2, rule: &AngularRule) -> f64 {
    let terms = den.sum().terms();
    rule.integrate(|theta| {
        let w = unit(theta);
        terms
            .iter()
            .map(|t| t.coeff * radial_moment((t.exponent + lambda).dot(&w)))
            .sum()
    })
}

/// `int_0^inf exp(-<lambda, s w>) p(s w) / 2 ds` along a face.
fn face_integral(den: &NormalizedDensity, lambda: &Vec2, w: &Vec2) -> f64 {
    den.sum()
        .terms()
        .iter()
        .map(|t| 0.5 * t.coeff / (t.exponent + lambda).dot(w))
        .sum()
}

struct BarParts {
    area: f64,
    area_coarse: f64,
    face1: f64,
    face2: f64,
}

fn bar_parts(den: &NormalizedDensity, g: &WedgeGeometry, lambda: &Vec2) -> Result<BarParts> {
    if lambda.norm() == 0.0 || !in_dual_cone(g, lambda) {
        return Err(WedgeError::OutsideDualCone(lambda.x, lambda.y));
    }
    let (w0, wx) = (g.face_direction(Face::F1), g.face_direction(Face::F2));
    for t in den.sum().terms() {
        let shifted = t.exponent + lambda;
        if !(shifted.dot(&w0) > 0.0 && shifted.dot(&wx) > 0.0) {
            return Err(WedgeError::NonIntegrable(format!(
                "exp(-<d + lambda, x>) does not decay for d = ({}, {})",
                t.exponent.x, t.exponent.y
            )));
        }
    }
    let quad = den.quadrature();
    let area = area_integral(den, lambda, &AngularRule::new(0.0, g.xi(), quad));
    let area_coarse = area_integral(den, lambda, &AngularRule::new(0.0, g.xi(), quad.halved()));
    Ok(BarParts {
        area,
        area_coarse,
        face1: face_integral(den, lambda, &w0),
        face2: face_integral(den, lambda, &wx),
    })
}

/// `[|l|^2/2 + <mu, l>] int_S e^{-<l,x>} p - <v1, l> int_F1 e^{-<l,x>} p/2
///  - <v2, l> int_F2 e^{-<l,x>} p/2` for each `l` in `lambdas`.
pub fn bar_check(
    den: &NormalizedDensity,
    g: &WedgeGeometry,
    d: &Drift,
    lambdas: &[Vec2],
) -> Result<BarCheck> {
    let mu = d.mu();
    let mut residuals = Vec::with_capacity(lambdas.len());
    let mut err: f64 = 0.0;
    for lambda in lambdas {
        let parts = bar_parts(den, g, lambda)?;
        let gen = 0.5 * lambda.norm_squared() + mu.dot(lambda);
        let faces = g.v1().dot(lambda) * parts.face1 + g.v2().dot(lambda) * parts.face2;
        residuals.push(gen * parts.area - faces);
        err = err.max((gen * (parts.area - parts.area_coarse)).abs());
    }
    Ok(BarCheck {
        residuals,
        quadrature_error_estimate: err,
    })
}

/// With `lambda = t n1` the area term concentrates on `F1`; returns the ratio
/// of the generator term to the `F1` boundary term, which tends to 1.
pub fn face_limit_ratio(
    den: &NormalizedDensity,
    g: &WedgeGeometry,
    d: &Drift,
    t: f64,
) -> Result<f64> {
    let lambda = t * g.n1();
    let parts = bar_parts(den, g, &lambda)?;
    let gen = 0.5 * lambda.norm_squared() + d.mu().dot(&lambda);
    Ok(gen * parts.area / (g.v1().dot(&lambda) * parts.face1))
}

/// `count` deterministic points of the dual cone: `s (a n1 + (1 - a) n2)`
/// from a low-discrepancy sequence, `s in [0.2, 5]`.
pub fn dual_cone_samples(g: &WedgeGeometry, count: usize) -> Vec<Vec2> {
    let golden = 0.618_033_988_749_895;
    let plastic = 0.754_877_666_246_693;
    (0..count)
        .map(|i| {
            let a = (0.5 + golden * i as f64).fract();
            let s = 0.2 + 4.8 * (0.5 + plastic * i as f64).fract();
            s * (a * g.n1() + (1.0 - a) * g.n2())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{density_expanded, normalize};
    use crate::quadrature::QuadratureSpec;
    use std::f64::consts::PI;

    #[test]
    fn quarter_plane_separable_case() {
        let g = WedgeGeometry::new(PI / 2.0, PI / 2.0, PI / 2.0).unwrap();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let den = normalize(
            &density_expanded(&g, &d).unwrap(),
            QuadratureSpec::default(),
        )
        .unwrap();
        let r = bar_check(&den, &g, &d, &[Vec2::new(1.0, 1.0)]).unwrap();
        assert!(r.max_residual() < 1e-10);
    }

    #[test]
    fn ell_one_random_lambdas() {
        let g = WedgeGeometry::with_ell(1.1, 1.2, 1).unwrap();
        let (lo, hi) = g.stability_interval();
        let d = Drift::from_polar(0.8, lo + 0.3 * (hi - lo)).unwrap();
        let den = normalize(
            &density_expanded(&g, &d).unwrap(),
            QuadratureSpec::default(),
        )
        .unwrap();
        let lambdas = dual_cone_samples(&g, 20);
        assert!(lambdas.iter().all(|l| in_dual_cone(&g, l)));
        let r = bar_check(&den, &g, &d, &lambdas).unwrap();
        let tol = 1e-8f64.max(
            10.0 * r
                .quadrature_error_estimate
                .max(den.quadrature_error_estimate()),
        );
        assert!(r.max_residual() <= tol, "{:e}", r.max_residual());
    }

    #[test]
    fn wrong_pushing_direction_breaks_identity() {
        // The quarter-plane density checked against an oblique geometry.
        let g = WedgeGeometry::new(PI / 2.0, PI / 2.0, PI / 2.0).unwrap();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let den = normalize(
            &density_expanded(&g, &d).unwrap(),
            QuadratureSpec::default(),
        )
        .unwrap();
        let other = WedgeGeometry::new(PI / 2.0, 1.2, PI / 2.0).unwrap();
        let r = bar_check(&den, &other, &d, &[Vec2::new(1.0, 1.0)]).unwrap();
        assert!(r.max_residual() > 1e-3);
    }

    #[test]
    fn rejects_lambda_outside_cone() {
        let g = WedgeGeometry::new(PI / 2.0, PI / 2.0, PI / 2.0).unwrap();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let den = normalize(
            &density_expanded(&g, &d).unwrap(),
            QuadratureSpec::default(),
        )
        .unwrap();
        assert!(matches!(
            bar_check(&den, &g, &d, &[Vec2::new(-1.0, 0.5)]),
            Err(WedgeError::OutsideDualCone(..))
        ));
    }

    #[test]
    fn large_lambda_along_normal_isolates_first_face() {
        let g = WedgeGeometry::with_ell(1.1, 1.2, 1).unwrap();
        let (lo, hi) = g.stability_interval();
        let d = Drift::from_polar(0.8, lo + 0.6 * (hi - lo)).unwrap();
        let den = normalize(
            &density_expanded(&g, &d).unwrap(),
            QuadratureSpec::default(),
        )
        .unwrap();
        let near = face_limit_ratio(&den, &g, &d, 1e3).unwrap();
        let far = face_limit_ratio(&den, &g, &d, 1e1).unwrap();
        assert!((near - 1.0).abs() < 1e-2, "{near}");
        assert!((near - 1.0).abs() < (far - 1.0).abs());
    }
}
