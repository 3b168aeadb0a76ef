//! Chebyshev and modified Bessel machinery for the behaviour of the density
//! near the vertex, and the exponential-Vandermonde sign determinant.

use nalgebra::{DMatrix, DVector};

use crate::density::{admissible_ell, density_expanded, SumOfExponentials};
use crate::error::{Result, WedgeError};
use crate::geometry::{e1, unit, Drift, WedgeGeometry, ANGLE_TOL};

/// Chebyshev polynomial of the first kind by the three-term recurrence.
pub fn cheb_t(n: u32, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for _ in 1..n {
        (a, b) = (b, 2.0 * x * b - a);
    }
    b
}

/// Chebyshev polynomial of the second kind, with `U_{-1} = 0`. Any `n < -1`
/// is treated as `-1`.
pub fn cheb_u(n: i32, x: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..n {
        (a, b) = (b, 2.0 * x * b - a);
    }
    b
}

/// Modified Bessel function `I_n(r)` from its power series, at most 60 terms
/// with early exit once a term drops below `1e-15` of the partial sum.
/// Meant for moderate arguments (`r <= 10`).
pub fn bessel_i(n: u32, r: f64) -> f64 {
    let half = 0.5 * r;
    let mut term = (1..=n).fold(1.0, |acc, k| acc * half / k as f64);
    let q = half * half;
    let mut sum = term;
    for k in 1..60 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term <= 1e-15 * sum.abs() {
            break;
        }
    }
    sum
}

/// Angles and Chebyshev arguments of the Bessel expansion around the vertex,
/// computed with the drift rescaled to unit length.
#[derive(Debug, Clone)]
pub struct SpectralContext {
    ell: u32,
    theta_mu: f64,
    delta: f64,
    xi: f64,
    /// `<mu, v1 / |v1|>` for unit `mu`.
    mu_along_v1: f64,
    zeta: Vec<f64>,
}

impl SpectralContext {
    pub fn new(g: &WedgeGeometry, d: &Drift) -> Result<Self> {
        let ell = admissible_ell(g, d)?;
        let unit_mu = d.normalized();
        let mu = unit_mu.mu();
        let zeta = (0..=ell)
            .map(|j| mu.dot(&g.rot_k(j).apply(&e1())))
            .collect();
        Ok(Self {
            ell,
            theta_mu: d.theta(),
            delta: g.delta(),
            xi: g.xi(),
            mu_along_v1: mu.dot(&g.v1().normalize()),
            zeta,
        })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `omega_k = theta_mu - 2 delta - k xi`.
    pub fn omega(&self, k: i64) -> f64 {
        self.theta_mu - 2.0 * self.delta - k as f64 * self.xi
    }

    /// `zeta_j = <mu, Rot_j e1>` for unit `mu`.
    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    fn cos_omega_even(&self, j: u32) -> f64 {
        self.omega(2 * j as i64).cos()
    }

    /// Coefficient of `I_n(|x|)` (up to the factor `2 / sin(delta)`) in the
    /// expansion of `exp(<mu, x>) pi_j(x)` along the ray at angle `theta`.
    pub fn h_jn(&self, j: u32, n: u32, theta: f64) -> f64 {
        let c = self.cos_omega_even(j);
        let n_i = n as i32;
        let nt = n as f64 * theta;
        0.5 * (nt + self.delta).sin() * cheb_u(n_i, c)
            - self.mu_along_v1 * nt.sin() * cheb_u(n_i - 1, c)
            + 0.5 * (nt - self.delta).sin() * cheb_u(n_i - 2, c)
    }

    /// `exp(<mu, x>) pi_j(x)` at `x = r w(theta)` from the Bessel series,
    /// truncated after `terms` orders.
    pub fn pi_j_series(&self, j: u32, r: f64, theta: f64, terms: u32) -> f64 {
        let tail: f64 = (1..=terms)
            .map(|n| self.h_jn(j, n, theta) * bessel_i(n, r))
            .sum();
        bessel_i(0, r) + 2.0 / self.delta.sin() * tail
    }

    fn corner_matrix(&self, n: u32, theta: f64, lower: impl Fn(u32, f64) -> f64) -> f64 {
        let size = self.ell as usize + 1;
        let m = DMatrix::from_fn(size, size, |row, col| {
            let j = col as u32;
            if row == 0 {
                self.h_jn(j, n, theta)
            } else {
                lower(self.ell - row as u32, self.cos_omega_even(j))
            }
        });
        m.determinant()
    }

    /// Determinant with first row `h_{j,n}(theta)` and lower rows
    /// `U_m(cos omega_{2j})`, `m = ell-1, ..., 0`. Proportional to the
    /// coefficient of `I_n` in the vertex expansion of the density.
    pub fn corner_coefficient(&self, n: u32, theta: f64) -> f64 {
        self.corner_matrix(n, theta, |m, c| cheb_u(m as i32, c))
    }

    /// Same determinant with power rows `cos(omega_{2j})^m`. Row reduction
    /// relates the two: the Chebyshev form is `2^{ell(ell-1)/2}` times this.
    pub fn corner_coefficient_power_rows(&self, n: u32, theta: f64) -> f64 {
        self.corner_matrix(n, theta, |m, c| c.powi(m as i32))
    }
}

/// Result of fitting `log |pi(r w_theta)|` near the vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerFit {
    /// Fitted power of `r`.
    pub slope: f64,
    /// `exp` of the fitted intercept.
    pub prefactor: f64,
    /// `pi(r w_theta) / (r^ell sin(ell theta + delta))` at the smallest radius.
    pub c_estimate: f64,
}

/// Nine radii spaced geometrically from `5e-2` down to `1e-3`.
pub fn default_radii() -> Vec<f64> {
    let (hi, lo): (f64, f64) = (5e-2, 1e-3);
    let step = (lo / hi).ln() / 8.0;
    (0..9).map(|i| hi * (step * i as f64).exp()).collect()
}

/// Fits the power law of the unnormalized density along the ray at `theta`.
///
/// The fit regresses `log |pi|` on `[1, log r, r]`; the linear term absorbs
/// the first correction so the slope error is `O(r^2)`.
pub fn corner_limit(g: &WedgeGeometry, d: &Drift, theta: f64, radii: &[f64]) -> Result<CornerFit> {
    let ell = admissible_ell(g, d)?;
    corner_fit_for(&density_expanded(g, d)?, g, ell, theta, radii)
}

/// [`corner_limit`] for an arbitrary sum, measured against the power `ell`.
pub fn corner_fit_for(
    sum: &SumOfExponentials,
    g: &WedgeGeometry,
    ell: u32,
    theta: f64,
    radii: &[f64],
) -> Result<CornerFit> {
    let angular = (ell as f64 * theta + g.delta()).sin();
    if angular.abs() <= ANGLE_TOL {
        return Err(WedgeError::EvaluationAtNode { theta });
    }
    if radii.len() < 3 || radii.iter().any(|&r| !(r > 0.0 && r <= 0.05)) {
        return Err(WedgeError::Domain(
            "corner fit needs at least 3 radii in (0, 0.05]".into(),
        ));
    }
    let w = unit(theta);
    let values: Vec<f64> = radii.iter().map(|&r| sum.eval(&(r * w))).collect();
    if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(WedgeError::NumericalBlowup(
            "density vanishes or overflows on a fitting radius".into(),
        ));
    }
    let a = DMatrix::from_fn(radii.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => radii[i].ln(),
        _ => radii[i],
    });
    let b = DVector::from_iterator(radii.len(), values.iter().map(|v| v.abs().ln()));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| WedgeError::NumericalBlowup(e.to_string()))?;

    let (i_min, r_min) =
        radii
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, r)| if r < best.1 { (i, r) } else { best },
            );
    Ok(CornerFit {
        slope: coef[1],
        prefactor: coef[0].exp(),
        c_estimate: values[i_min] / (r_min.powi(ell as i32) * angular),
    })
}

/// Determinant with first row `exp(zeta_j y)` and lower rows the powers
/// `zeta_j^{ell-1}, ..., zeta_j, 1`, where `ell + 1 = zeta.len()`.
pub fn schur_sign_det(zeta: &[f64], y: f64) -> f64 {
    let n = zeta.len();
    let m = DMatrix::from_fn(n, n, |row, col| {
        if row == 0 {
            (zeta[col] * y).exp()
        } else {
            zeta[col].powi((n - 1 - row) as i32)
        }
    });
    m.determinant()
}

/// Sign of `prod_{i<j} (zeta_i - zeta_j)`, as `-1`, `0` or `1`.
pub fn vandermonde_sign(zeta: &[f64]) -> f64 {
    let mut sign = 1.0;
    for i in 0..zeta.len() {
        for j in i + 1..zeta.len() {
            let diff = zeta[i] - zeta[j];
            if diff == 0.0 {
                return 0.0;
            }
            if diff < 0.0 {
                sign = -sign;
            }
        }
    }
    sign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{pi_j, DeterminantForm};
    use crate::geometry::Vec2;
    use std::f64::consts::PI;

    fn wedge(ell: u32) -> (WedgeGeometry, Drift) {
        let g = match ell {
            0 => WedgeGeometry::new(1.0, 1.2, PI - 1.2).unwrap(),
            1 => WedgeGeometry::with_ell(0.9, 1.1, 1).unwrap(),
            2 => WedgeGeometry::with_ell(0.7, 1.1, 2).unwrap(),
            _ => WedgeGeometry::with_ell(0.5, 1.0, 3).unwrap(),
        };
        let (lo, hi) = g.stability_interval();
        let d = Drift::from_polar(1.7, lo + 0.37 * (hi - lo)).unwrap();
        (g, d)
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(cheb_u(0, 0.3), 1.0);
        assert!((cheb_u(1, 0.3) - 0.6).abs() < 1e-15);
        assert_eq!(cheb_u(-1, 0.3), 0.0);
        assert!((cheb_t(2, 0.5) + 0.5).abs() < 1e-15);
        for n in 0..12 {
            let t = 0.73f64;
            assert!((cheb_t(n, t.cos()) - (n as f64 * t).cos()).abs() < 1e-13);
            let u = ((n + 1) as f64 * t).sin() / t.sin();
            assert!((cheb_u(n as i32, t.cos()) - u).abs() < 1e-12);
        }
        // Endpoints: U_n(1) = n + 1, U_n(-1) = (-1)^n (n + 1).
        assert!((cheb_u(5, 1.0) - 6.0).abs() < 1e-12);
        assert!((cheb_u(5, -1.0) + 6.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_values() {
        // Reference values of I_0, I_1, I_3 at 1 and 2.5.
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i(1, 1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert!((bessel_i(3, 2.5) - 0.474_370_408_778_035_9).abs() < 1e-14);
        for ell in 0..4u32 {
            let r = 1e-6;
            let fact: f64 = (1..=ell).map(|k| k as f64).product();
            let lead = 1.0 / (2f64.powi(ell as i32) * fact);
            assert!((bessel_i(ell, r) / r.powi(ell as i32) - lead).abs() < 1e-10 * lead);
        }
        // Generating function: e^{r cos t} = I_0 + 2 sum I_n cos(n t).
        let (r, t) = (3.0, 0.4);
        let series = bessel_i(0, r)
            + 2.0
                * (1..40)
                    .map(|n| bessel_i(n, r) * (n as f64 * t).cos())
                    .sum::<f64>();
        assert!((series - (r * t.cos()).exp()).abs() < 1e-13);
    }

    #[test]
    fn h_at_theta_zero() {
        let (g, d) = wedge(1);
        let ctx = SpectralContext::new(&g, &d).unwrap();
        let c = ctx.omega(0).cos();
        let expected = 0.5 * g.delta().sin() * 2.0 * c;
        assert!((ctx.h_jn(0, 1, 0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn bessel_series_matches_direct_evaluation() {
        for ell in 1..4 {
            let (g, d) = wedge(ell);
            let ctx = SpectralContext::new(&g, &d).unwrap();
            let mu = d.normalized().mu();
            let unit_d = d.normalized();
            for j in 0..=ell {
                let p = pi_j(&g, &unit_d, j).unwrap();
                for (r, theta) in [(0.1, 0.0), (0.1, 0.3 * g.xi()), (0.5, g.xi())] {
                    let x = r * unit(theta);
                    let direct = mu.dot(&x).exp() * p.eval(&x);
                    let series = ctx.pi_j_series(j, r, theta, 40);
                    assert!(
                        (direct - series).abs() < 1e-10,
                        "ell {ell} j {j}: {direct} {series}"
                    );
                }
            }
        }
    }

    #[test]
    fn corner_coefficient_vanishes_below_ell() {
        for ell in 1..4 {
            let (g, d) = wedge(ell);
            let ctx = SpectralContext::new(&g, &d).unwrap();
            for i in 0..7 {
                let theta = g.xi() * i as f64 / 6.0;
                let lead = ctx.corner_coefficient(ell, theta).abs();
                if (ell as f64 * theta + g.delta()).sin().abs() < 1e-3 {
                    continue;
                }
                for n in 1..ell {
                    assert!(ctx.corner_coefficient(n, theta).abs() <= 1e-10 * lead);
                }
            }
        }
    }

    #[test]
    fn leading_corner_coefficient_tracks_angle() {
        for ell in 1..4 {
            let (g, d) = wedge(ell);
            let ctx = SpectralContext::new(&g, &d).unwrap();
            let ratios: Vec<f64> = (0..9)
                .map(|i| {
                    let theta = g.xi() * i as f64 / 8.0;
                    ctx.corner_coefficient(ell, theta) / (ell as f64 * theta + g.delta()).sin()
                })
                .collect();
            for r in &ratios {
                assert!(
                    (r - ratios[0]).abs() <= 1e-8 * ratios[0].abs(),
                    "{ratios:?}"
                );
            }
        }
    }

    #[test]
    fn ell_zero_corner_is_single_entry() {
        let (g, d) = wedge(0);
        let ctx = SpectralContext::new(&g, &d).unwrap();
        assert_eq!(ctx.ell(), 0);
        assert_eq!(ctx.corner_coefficient(2, 0.3), ctx.h_jn(0, 2, 0.3));
    }

    #[test]
    fn row_reduction_scales_by_powers_of_two() {
        for ell in 1..4 {
            let (g, d) = wedge(ell);
            let ctx = SpectralContext::new(&g, &d).unwrap();
            let factor = 2f64.powi((ell * (ell - 1) / 2) as i32);
            for n in 1..6 {
                let a = ctx.corner_coefficient(n, 0.2);
                let b = ctx.corner_coefficient_power_rows(n, 0.2);
                let scale = ctx.corner_coefficient(ell, 0.2).abs();
                assert!((a - factor * b).abs() <= 1e-10 * scale.max(a.abs()));
            }
        }
    }

    #[test]
    fn corner_fit_recovers_power() {
        let radii = default_radii();
        assert_eq!(radii.len(), 9);
        assert!((radii[8] - 1e-3).abs() < 1e-15);
        let (g, d) = wedge(1);
        let cs: Vec<f64> = (0..9)
            .map(|i| {
                let fit = corner_limit(&g, &d, g.xi() * i as f64 / 8.0, &radii).unwrap();
                assert!((fit.slope - 1.0).abs() < 1e-3, "{}", fit.slope);
                fit.c_estimate
            })
            .collect();
        let mean = cs.iter().sum::<f64>() / 9.0;
        let spread = cs.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max) / mean.abs();
        assert!(spread < 1e-2, "{spread}");

        let (g, d) = wedge(2);
        let fit = corner_limit(&g, &d, 0.3, &radii).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-2, "{}", fit.slope);
    }

    #[test]
    fn corner_fit_rejects_node() {
        let (g, d) = wedge(1);
        // sin(theta + delta) = 0 at theta = pi - delta, outside [0, xi] but
        // still a valid request.
        let theta = PI - g.delta();
        assert!(matches!(
            corner_limit(&g, &d, theta, &default_radii()),
            Err(WedgeError::EvaluationAtNode { .. })
        ));
    }

    #[test]
    fn ell_zero_has_no_vanishing() {
        let (g, d) = wedge(0);
        let fit = corner_limit(&g, &d, 0.4, &default_radii()).unwrap();
        assert!(fit.slope.abs() < 1e-10);
        let s = density_expanded(&g, &d).unwrap();
        assert!((s.eval(&Vec2::zeros()) - s.terms()[0].coeff).abs() < 1e-15);
    }

    #[test]
    fn schur_small_cases() {
        let e = 1f64.exp();
        assert!((schur_sign_det(&[2.0, 1.0], 1.0) - (e * e - e)).abs() < 1e-13);
        assert!(schur_sign_det(&[1.0, 2.0], 1.0) < 0.0);
        assert_eq!(vandermonde_sign(&[1.0, 2.0]), -1.0);
        assert_eq!(vandermonde_sign(&[1.0, 1.0, 3.0]), 0.0);
    }

    #[test]
    fn determinant_on_first_face_is_schur_determinant() {
        // On the face x = r e1 every column collapses to exp(r zeta_j) once the
        // factor exp(<mu, x>) is absorbed.
        for ell in 1..4 {
            let (g, d) = wedge(ell);
            let unit_d = d.normalized();
            let ctx = SpectralContext::new(&g, &unit_d).unwrap();
            let form = DeterminantForm::new(&g, &unit_d).unwrap();
            for r in [0.2, 1.0, 3.0] {
                let x = Vec2::new(r, 0.0);
                let lhs = form.eval(&x) * unit_d.mu().dot(&x).exp();
                let rhs = schur_sign_det(ctx.zeta(), r);
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} {rhs}");
            }
        }
    }
}
