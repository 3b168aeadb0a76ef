use super::{PolarGrid, SumOfExponentials};
use crate::error::{Result, WedgeError};
use crate::geometry::{unit, Vec2};
use crate::quadrature::{radial_moment, radial_segment, radial_tail, AngularRule, QuadratureSpec};

/// A sum of exponentials scaled to be a probability density on the wedge.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDensity {
    sum: SumOfExponentials,
    normalizing_constant: f64,
    quadrature_error_estimate: f64,
    quad: QuadratureSpec,
}

/// `int_0^xi a / <d, w(theta)>^2 dtheta` summed over terms: the integral of
/// the sum over the whole wedge, with the radial part done exactly.
fn wedge_integral(sum: &SumOfExponentials, rule: &AngularRule) -> f64 {
    rule.integrate(|theta| {
        let w = unit(theta);
        sum.terms()
            .iter()
            .map(|t| t.coeff * radial_moment(t.exponent.dot(&w)))
            .sum()
    })
}

/// Scales `sum` to a nonnegative density with unit mass.
///
/// Every exponent must decay along every ray of the wedge and the sum must
/// keep one sign on a covering polar grid; a nonpositive sum is flipped.
pub fn normalize(sum: &SumOfExponentials, quad: QuadratureSpec) -> Result<NormalizedDensity> {
    if sum.is_empty() {
        return Err(WedgeError::InvalidDensity("empty sum".into()));
    }
    let kappa = sum.min_decay_rate();
    let scale = sum
        .terms()
        .iter()
        .map(|t| t.exponent.norm())
        .fold(0.0, f64::max);
    if kappa.is_nan() || kappa <= 1e-12 * scale {
        return Err(WedgeError::NonIntegrable(format!(
            "some exponent does not decay along the faces (min rate {kappa:e})"
        )));
    }

    let grid = PolarGrid::covering(sum);
    let scan = sum.sign_scan(&grid);
    if scan.sign_change() {
        return Err(WedgeError::InvalidDensity(format!(
            "sign change on the wedge: min {:e}, max {:e}",
            scan.min, scan.max
        )));
    }
    let sign = if scan.has_negative { -1.0 } else { 1.0 };

    let xi = sum.geometry().xi();
    let fine = wedge_integral(sum, &AngularRule::new(0.0, xi, quad));
    let coarse = wedge_integral(sum, &AngularRule::new(0.0, xi, quad.halved()));
    let mass = sign * fine;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(WedgeError::InvalidDensity(format!("total mass {mass:e}")));
    }
    Ok(NormalizedDensity {
        sum: sum.scaled(1.0 / fine),
        normalizing_constant: 1.0 / mass,
        quadrature_error_estimate: ((fine - coarse) / fine).abs(),
        quad,
    })
}

impl NormalizedDensity {
    pub fn sum(&self) -> &SumOfExponentials {
        &self.sum
    }

    /// The positive factor relating the density to the input sum (up to a
    /// sign flip).
    pub fn normalizing_constant(&self) -> f64 {
        self.normalizing_constant
    }

    /// Relative change of the total mass between the full and the halved
    /// angular rule.
    pub fn quadrature_error_estimate(&self) -> f64 {
        self.quadrature_error_estimate
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quad
    }

    pub fn eval(&self, x: &Vec2) -> f64 {
        self.sum.eval(x)
    }

    /// Probability of the polar cell `[theta0, theta1] x [r0, r1]`.
    pub fn cell_probability(
        &self,
        theta0: f64,
        theta1: f64,
        r0: f64,
        r1: f64,
        nodes: usize,
    ) -> f64 {
        let rule = AngularRule::uniform(theta0, theta1, nodes);
        rule.integrate(|theta| {
            let w = unit(theta);
            self.sum
                .terms()
                .iter()
                .map(|t| t.coeff * radial_segment(t.exponent.dot(&w), r0, r1))
                .sum()
        })
    }

    /// Probability of `{|x| > r}`.
    pub fn tail_mass(&self, r: f64) -> f64 {
        let rule = AngularRule::new(0.0, self.sum.geometry().xi(), self.quad);
        rule.integrate(|theta| {
            let w = unit(theta);
            self.sum
                .terms()
                .iter()
                .map(|t| t.coeff * radial_tail(t.exponent.dot(&w), r))
                .sum()
        })
    }

    /// Smallest radius (to bisection accuracy) with tail mass below `tail`.
    pub fn radius_for_tail_mass(&self, tail: f64) -> f64 {
        let mut hi = 1.0 / self.sum.min_decay_rate();
        while self.tail_mass(hi) > tail {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
