//! Sums of exponentials `x -> sum_i a_i exp(-<d_i, x>)` on the wedge, and the
//! constructions that produce stationary densities of this form.

mod construct;
mod normalize;

pub use construct::{
    admissible_ell, check_recursion, coefficients_ck, density_clockwise, density_determinant,
    density_expanded, pi_j, DeterminantForm, RecursionCheck,
};
pub use normalize::{normalize, NormalizedDensity};

use crate::error::{Result, WedgeError};
use crate::geometry::{Drift, LabelMatrix, Vec2, WedgeGeometry};

/// Exponents below this are clamped before `exp`.
const MIN_EXPONENT: f64 = -700.0;

/// Coefficients with `|a| <= PRUNE_REL * max |a|` are dropped.
pub const PRUNE_REL: f64 = 1e-13;

/// Minimum separation between distinct exponent vectors.
pub const EXPONENT_SEPARATION: f64 = 1e-10;

/// One term `a exp(-<d, x>)`. When the term came out of a construction,
/// `label` records the matrix `M` with `d = (I - M)^T mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialTerm {
    pub coeff: f64,
    pub exponent: Vec2,
    pub label: Option<LabelMatrix>,
}

impl ExponentialTerm {
    pub fn new(coeff: f64, exponent: Vec2) -> Self {
        Self {
            coeff,
            exponent,
            label: None,
        }
    }

    pub fn labelled(coeff: f64, label: LabelMatrix, mu: &Vec2) -> Self {
        Self {
            coeff,
            exponent: label.exponent_for(mu),
            label: Some(label),
        }
    }

    /// `exp(-<d, x>)` with the exponent clamped at -700.
    pub fn kernel(&self, x: &Vec2) -> f64 {
        (-self.exponent.dot(x)).max(MIN_EXPONENT).exp()
    }

    pub fn eval(&self, x: &Vec2) -> f64 {
        self.coeff * self.kernel(x)
    }

    /// `|d|^2 - 2 <mu, d>`: zero iff the term alone solves
    /// `Laplace p + 2 <mu, grad p> = 0`.
    pub fn pde_defect(&self, mu: &Vec2) -> f64 {
        self.exponent.norm_squared() - 2.0 * mu.dot(&self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumOfExponentials {
    terms: Vec<ExponentialTerm>,
    drift: Drift,
    geometry: WedgeGeometry,
}

impl SumOfExponentials {
    /// Builds a sum, pruning negligible coefficients. Fails if two surviving
    /// exponents coincide.
    pub fn new(
        geometry: WedgeGeometry,
        drift: Drift,
        terms: impl IntoIterator<Item = ExponentialTerm>,
    ) -> Result<Self> {
        let mut terms: Vec<ExponentialTerm> = terms.into_iter().collect();
        if terms
            .iter()
            .any(|t| !t.coeff.is_finite() || !t.exponent.iter().all(|c| c.is_finite()))
        {
            return Err(WedgeError::NumericalBlowup(
                "non-finite coefficient or exponent".into(),
            ));
        }
        let max_coeff = terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
        terms.retain(|t| t.coeff.abs() > PRUNE_REL * max_coeff);
        for (i, a) in terms.iter().enumerate() {
            for b in &terms[i + 1..] {
                if (a.exponent - b.exponent).norm() <= EXPONENT_SEPARATION {
                    return Err(WedgeError::InvalidDensity(format!(
                        "repeated exponent ({}, {})",
                        a.exponent.x, a.exponent.y
                    )));
                }
            }
        }
        Ok(Self {
            terms,
            drift,
            geometry,
        })
    }

    pub fn empty(geometry: WedgeGeometry, drift: Drift) -> Self {
        Self {
            terms: Vec::new(),
            drift,
            geometry,
        }
    }

    pub fn terms(&self) -> &[ExponentialTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub fn geometry(&self) -> &WedgeGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> Vec<Option<LabelMatrix>> {
        self.terms.iter().map(|t| t.label).collect()
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ExponentialTerm {
                    coeff: t.coeff * factor,
                    ..*t
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn eval(&self, x: &Vec2) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn gradient(&self, x: &Vec2) -> Vec2 {
        self.terms
            .iter()
            .fold(Vec2::zeros(), |acc, t| acc - t.eval(x) * t.exponent)
    }

    pub fn laplacian(&self, x: &Vec2) -> f64 {
        self.terms
            .iter()
            .map(|t| t.eval(x) * t.exponent.norm_squared())
            .sum()
    }

    /// `sum_i |a_i| exp(-<d_i, x>)`, the natural size against which
    /// cancellation in `eval` is measured.
    pub fn magnitude(&self, x: &Vec2) -> f64 {
        self.terms.iter().map(|t| t.eval(x).abs()).sum()
    }

    /// Smallest value of `<d_i, w(theta)>` over all terms and `theta in
    /// [0, xi]`. Positive iff every term decays along every ray of the wedge.
    pub fn min_decay_rate(&self) -> f64 {
        let w0 = self.geometry.face_direction(crate::geometry::Face::F1);
        let wxi = self.geometry.face_direction(crate::geometry::Face::F2);
        // <d, w(theta)> = |d| cos(theta - arg d); on an interval shorter than
        // pi its minimum sits at an endpoint.
        self.terms
            .iter()
            .map(|t| t.exponent.dot(&w0).min(t.exponent.dot(&wxi)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum and maximum of `eval` over the grid, and whether values of
    /// each sign occur beyond rounding level (`1e-12` of the magnitude).
    pub fn sign_scan(&self, grid: &PolarGrid) -> SignScan {
        let mut scan = SignScan {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            has_positive: false,
            has_negative: false,
        };
        for x in grid.points() {
            let v = self.eval(&x);
            scan.min = scan.min.min(v);
            scan.max = scan.max.max(v);
            let floor = SIGN_REL * self.magnitude(&x);
            scan.has_positive |= v > floor;
            scan.has_negative |= v < -floor;
        }
        scan
    }
}

/// Values below this fraction of `magnitude` carry no reliable sign.
const SIGN_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignScan {
    pub min: f64,
    pub max: f64,
    pub has_positive: bool,
    pub has_negative: bool,
}

impl SignScan {
    pub fn sign_change(&self) -> bool {
        self.has_positive && self.has_negative
    }
}

/// A tensor grid in polar coordinates covering `[0, xi] x (0, r_max]`; the
/// vertex itself is excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub xi: f64,
    pub r_max: f64,
    pub n_theta: usize,
    pub n_r: usize,
}

impl PolarGrid {
    pub fn new(xi: f64, r_max: f64, n_theta: usize, n_r: usize) -> Self {
        Self {
            xi,
            r_max,
            n_theta: n_theta.max(2),
            n_r: n_r.max(1),
        }
    }

    /// A 100 x 100 grid reaching far enough that the slowest term has decayed
    /// by `e^-30`.
    pub fn covering(sum: &SumOfExponentials) -> Self {
        let kappa = sum.min_decay_rate();
        let r_max = if kappa.is_finite() && kappa > 0.0 {
            30.0 / kappa
        } else {
            10.0
        };
        Self::new(sum.geometry().xi(), r_max, 100, 100)
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.xi / (self.n_theta - 1) as f64;
        (0..self.n_theta).map(move |i| i as f64 * step)
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.r_max / self.n_r as f64;
        (1..=self.n_r).map(move |j| j as f64 * step)
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.thetas()
            .flat_map(move |t| self.radii().map(move |r| r * crate::geometry::unit(t)))
    }
}
