//! Numerical checks that a candidate sum of exponentials is the stationary
//! density: interior equation, boundary conditions, the exponential
//! test-function identity, sign, vertex behaviour and label structure.

mod bar;
mod mating;
mod residuals;

pub use bar::{bar_check, dual_cone_samples, face_limit_ratio, in_dual_cone, BarCheck};
pub use mating::{
    labels_match, mating_path, pairing_residual, range_restriction_check, EdgeType, MatingPath,
};
pub use residuals::{
    bc_residual, face_points, interior_points, pair_check, pde_residual, pde_residual_fd, Residual,
};

use crate::density::{
    check_recursion, coefficients_ck, density_expanded, normalize, ExponentialTerm, PolarGrid,
    SignScan, SumOfExponentials,
};
use crate::error::Result;
use crate::geometry::{Drift, Face, WedgeGeometry};
use crate::quadrature::QuadratureSpec;
use crate::spectral::{corner_fit_for, default_radii};

/// Sign scan of `sum` over `grid`.
pub fn sign_scan(sum: &SumOfExponentials, grid: &PolarGrid) -> SignScan {
    sum.sign_scan(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative to the residual scale.
    pub pde: f64,
    pub bc: f64,
    pub recursion: f64,
    /// Absolute floor for the exponential identity; the effective tolerance
    /// is `max(bar_floor, bar_quad_factor * quadrature error)`.
    pub bar_floor: f64,
    pub bar_quad_factor: f64,
    pub pairing: f64,
    pub corner_slope_ell1: f64,
    pub corner_slope_higher: f64,
    pub corner_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pde: 1e-10,
            bc: 1e-10,
            recursion: 1e-12,
            bar_floor: 1e-8,
            bar_quad_factor: 10.0,
            pairing: 1e-12,
            corner_slope_ell1: 1e-3,
            corner_slope_higher: 1e-2,
            corner_spread: 1e-2,
        }
    }
}

/// Knobs for [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub tolerances: Tolerances,
    pub quad: QuadratureSpec,
    pub interior_theta: usize,
    pub interior_r: usize,
    pub face_points: usize,
    pub lambdas: usize,
    /// Multiply coefficient `index` by `1 + rel` before checking.
    pub perturb: Option<(usize, f64)>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            quad: QuadratureSpec::default(),
            interior_theta: 40,
            interior_r: 25,
            face_points: 200,
            lambdas: 20,
            perturb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerSummary {
    /// Fitted slope furthest from `ell` over the angular grid.
    pub slope: f64,
    /// `(max - min) / |mean|` of the constant estimates.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub ell: u32,
    pub terms: usize,
    pub pde_residual_max: f64,
    pub bc1_residual_max: f64,
    pub bc2_residual_max: f64,
    pub recursion_residual_max: f64,
    /// NaN when normalization failed.
    pub bar_residual_max: f64,
    pub bar_tolerance: f64,
    pub quadrature_error_estimate: f64,
    pub sign_change_found: bool,
    pub corner_fit: Option<CornerSummary>,
    pub mating_closed: bool,
    pub range_restriction_ok: bool,
    pub labels_match: bool,
    pub pairing_residual_max: f64,
    pub tolerances: Tolerances,
    pub passed: bool,
    /// Names of the checks that failed.
    pub failures: Vec<&'static str>,
}

impl ValidationReport {
    /// `key=value` lines, one per field.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("ell".to_string(), self.ell.to_string()),
            ("terms".into(), self.terms.to_string()),
            ("pde_residual_max".into(), fmt_e(self.pde_residual_max)),
            ("bc1_residual_max".into(), fmt_e(self.bc1_residual_max)),
            ("bc2_residual_max".into(), fmt_e(self.bc2_residual_max)),
            (
                "recursion_residual_max".into(),
                fmt_e(self.recursion_residual_max),
            ),
            ("bar_residual_max".into(), fmt_e(self.bar_residual_max)),
            ("bar_tolerance".into(), fmt_e(self.bar_tolerance)),
            (
                "quadrature_error_estimate".into(),
                fmt_e(self.quadrature_error_estimate),
            ),
            (
                "sign_change_found".into(),
                self.sign_change_found.to_string(),
            ),
        ];
        if let Some(c) = &self.corner_fit {
            kv.push(("corner_slope".into(), fmt_e(c.slope)));
            kv.push(("corner_spread".into(), fmt_e(c.spread)));
        }
        kv.extend([
            ("mating_closed".into(), self.mating_closed.to_string()),
            (
                "range_restriction_ok".into(),
                self.range_restriction_ok.to_string(),
            ),
            ("labels_match".into(), self.labels_match.to_string()),
            (
                "pairing_residual_max".into(),
                fmt_e(self.pairing_residual_max),
            ),
            ("tol_pde".into(), fmt_e(self.tolerances.pde)),
            ("tol_bc".into(), fmt_e(self.tolerances.bc)),
            ("tol_recursion".into(), fmt_e(self.tolerances.recursion)),
            ("failures".into(), self.failures.join(",")),
            ("passed".into(), self.passed.to_string()),
        ]);
        kv
    }
}

fn fmt_e(v: f64) -> String {
    format!("{v:.6e}")
}

/// Runs the full battery on the constructed density for `(g, d)`.
///
/// Construction errors (non-integer `alpha`, degenerate or unstable drift)
/// are returned as errors; failed checks are reported in the result.
pub fn validate(g: &WedgeGeometry, d: &Drift, opts: &ValidateOptions) -> Result<ValidationReport> {
    let tol = opts.tolerances;
    let mut sum = density_expanded(g, d)?;
    let ell = (sum.len() as u32 - 1) / 2;
    if let Some((index, rel)) = opts.perturb {
        let terms: Vec<ExponentialTerm> = sum
            .terms()
            .iter()
            .enumerate()
            .map(|(i, t)| ExponentialTerm {
                coeff: if i == index {
                    t.coeff * (1.0 + rel)
                } else {
                    t.coeff
                },
                ..*t
            })
            .collect();
        sum = SumOfExponentials::new(*g, *d, terms)?;
    }

    let kappa = sum.min_decay_rate();
    let r_max = if kappa > 0.0 { 20.0 / kappa } else { 20.0 };
    let xs = interior_points(g, r_max, opts.interior_theta, opts.interior_r);
    let ss = face_points(opts.face_points);
    let pde = pde_residual(&sum, d, &xs).relative();
    let bc1 = bc_residual(&sum, d, g, Face::F1, &ss).relative();
    let bc2 = bc_residual(&sum, d, g, Face::F2, &ss).relative();
    let recursion = check_recursion(g, d, &coefficients_ck(g, d, ell)?).max_relative();

    let scan = sum.sign_scan(&PolarGrid::covering(&sum));
    let (bar_residual, bar_tolerance, quad_err) = match normalize(&sum, opts.quad) {
        Ok(den) => {
            let check = bar_check(&den, g, d, &dual_cone_samples(g, opts.lambdas))?;
            let err = check
                .quadrature_error_estimate
                .max(den.quadrature_error_estimate());
            let tolerance = tol.bar_floor.max(tol.bar_quad_factor * err);
            (check.max_residual(), tolerance, err)
        }
        Err(_) => (f64::NAN, tol.bar_floor, f64::NAN),
    };

    let corner_fit = if ell >= 1 {
        Some(corner_summary(g, ell, &sum))
    } else {
        None
    };
    let corner_ok = corner_fit.as_ref().is_none_or(|c| {
        let slope_tol = if ell == 1 {
            tol.corner_slope_ell1
        } else {
            tol.corner_slope_higher
        };
        (c.slope - ell as f64).abs() <= slope_tol && c.spread <= tol.corner_spread
    });

    let path = mating_path(g, 4 * ell as usize + 8).ok();
    let mating_closed = path
        .as_ref()
        .is_some_and(|p| p.len() == 2 * ell as usize + 1);
    let range_ok = path.as_ref().is_some_and(|p| range_restriction_check(p, g));
    let labels_ok = path.as_ref().is_some_and(|p| labels_match(p, &sum, 1e-9));
    let pairing = path
        .as_ref()
        .map_or(f64::INFINITY, |p| pairing_residual(p, g, d));
    let pairing_scale = d.norm();

    let mut failures = Vec::new();
    let checks: [(&'static str, bool); 11] = [
        ("pde", pde <= tol.pde),
        ("bc1", bc1 <= tol.bc),
        ("bc2", bc2 <= tol.bc),
        ("recursion", recursion <= tol.recursion),
        ("bar", bar_residual <= bar_tolerance),
        ("sign", !scan.sign_change()),
        ("corner", corner_ok),
        ("mating", mating_closed),
        ("range_restriction", range_ok),
        ("labels", labels_ok),
        ("pairing", pairing <= tol.pairing * pairing_scale),
    ];
    for (name, ok) in checks {
        if !ok {
            failures.push(name);
        }
    }
    Ok(ValidationReport {
        ell,
        terms: sum.len(),
        pde_residual_max: pde,
        bc1_residual_max: bc1,
        bc2_residual_max: bc2,
        recursion_residual_max: recursion,
        bar_residual_max: bar_residual,
        bar_tolerance,
        quadrature_error_estimate: quad_err,
        sign_change_found: scan.sign_change(),
        corner_fit,
        mating_closed,
        range_restriction_ok: range_ok,
        labels_match: labels_ok,
        pairing_residual_max: pairing,
        tolerances: tol,
        passed: failures.is_empty(),
        failures,
    })
}

/// Corner fits over 9 angles in `[0, xi]`, skipping nodes of
/// `sin(ell theta + delta)`. The fit runs on `sum` itself so that injected
/// perturbations show up.
pub fn corner_summary(g: &WedgeGeometry, ell: u32, sum: &SumOfExponentials) -> CornerSummary {
    let radii = default_radii();
    let mut worst_slope = ell as f64;
    let mut cs = Vec::new();
    for i in 0..9 {
        let theta = g.xi() * i as f64 / 8.0;
        let Ok(fit) = corner_fit_for(sum, g, ell, theta, &radii) else {
            continue;
        };
        if (fit.slope - ell as f64).abs() > (worst_slope - ell as f64).abs() {
            worst_slope = fit.slope;
        }
        cs.push(fit.c_estimate);
    }
    let mean = cs.iter().sum::<f64>() / cs.len().max(1) as f64;
    let (lo, hi) = cs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(*c), hi.max(*c))
        });
    CornerSummary {
        slope: worst_slope,
        spread: if cs.is_empty() {
            f64::INFINITY
        } else {
            (hi - lo) / mean.abs()
        },
    }
}
