use nalgebra::DMatrix;

use super::{ExponentialTerm, SumOfExponentials};
use crate::error::{Result, WedgeError};
use crate::geometry::{e1, Admissibility, Drift, Vec2, WedgeGeometry, ANGLE_TOL};

/// Relative threshold below which a denominator counts as zero.
const DENOMINATOR_REL: f64 = 1e-12;

/// Detects `alpha = -ell` and checks the drift is stable with linearly
/// independent exponential terms.
pub fn admissible_ell(g: &WedgeGeometry, d: &Drift) -> Result<u32> {
    let ell = g
        .ell(ANGLE_TOL)
        .ok_or(WedgeError::NotSumOfExponentials { alpha: g.alpha() })?;
    match g.drift_admissibility(d, ell, ANGLE_TOL) {
        Admissibility::InThetaEll => Ok(ell),
        Admissibility::StableOnly => Err(WedgeError::DegenerateDrift(format!(
            "sin(theta_mu - 2 delta - k xi) vanishes for some k in 0..={}",
            2 * ell
        ))),
        Admissibility::Unstable => {
            let (lo, hi) = g.stability_interval();
            Err(WedgeError::Unstable {
                theta_mu: d.theta(),
                lo,
                hi,
            })
        }
    }
}

/// `<mu, (Ref_j - Rot_j) v1>`, checked against zero.
fn ref_rot_gap(g: &WedgeGeometry, d: &Drift, j: u32) -> Result<f64> {
    let mu = d.mu();
    let v1 = g.v1();
    let gap = g.rot_k(j).defect(&mu, &v1) - g.ref_k(j).defect(&mu, &v1);
    if gap.abs() <= DENOMINATOR_REL * mu.norm_squared() {
        return Err(WedgeError::DegenerateDrift(format!(
            "<mu, (Ref_{j} - Rot_{j}) v1> vanishes"
        )));
    }
    Ok(gap)
}

/// The two-term building block: the `Rot_j` exponential paired with its
/// `Ref_j` mirror image so that the pair satisfies the `F1` boundary
/// condition, normalized by `<mu, (Ref_j - Rot_j) v1>`.
pub fn pi_j(g: &WedgeGeometry, d: &Drift, j: u32) -> Result<SumOfExponentials> {
    let mu = d.mu();
    let v1 = g.v1();
    let gap = ref_rot_gap(g, d, j)?;
    let rot = g.rot_k(j);
    let refl = g.ref_k(j);
    SumOfExponentials::new(
        *g,
        *d,
        [
            ExponentialTerm::labelled(rot.defect(&mu, &v1) / gap, rot, &mu),
            ExponentialTerm::labelled(-refl.defect(&mu, &v1) / gap, refl, &mu),
        ],
    )
}

/// `zeta_j = <mu, Rot_j e1>` for `j = 0..=ell`.
pub(crate) fn zetas(g: &WedgeGeometry, d: &Drift, ell: u32) -> Vec<f64> {
    let mu = d.mu();
    (0..=ell)
        .map(|j| mu.dot(&g.rot_k(j).apply(&e1())))
        .collect()
}

/// `prod_{i<j, i,j != skip} (z_i - z_j)`.
pub(crate) fn vandermonde_without(z: &[f64], skip: usize) -> f64 {
    let mut p = 1.0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if i != skip && j != skip {
                p *= z[i] - z[j];
            }
        }
    }
    p
}

/// The expansion coefficients `c_0..c_ell` of the determinant along its
/// first row.
pub fn coefficients_ck(g: &WedgeGeometry, d: &Drift, ell: u32) -> Result<Vec<f64>> {
    let z = zetas(g, d, ell);
    (0..=ell)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let gap = ref_rot_gap(g, d, k)?;
            Ok(sign * vandermonde_without(&z, k as usize) / gap)
        })
        .collect()
}

/// Residuals of the two-term recursion linking consecutive coefficients,
/// together with the magnitude of the products they cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionCheck {
    pub residuals: Vec<f64>,
    pub scale: f64,
}

impl RecursionCheck {
    pub fn max_relative(&self) -> f64 {
        let worst = self.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
        if self.scale > 0.0 {
            worst / self.scale
        } else {
            worst
        }
    }
}

/// For `k = 1..ell`:
/// `c_k <mu,(I-Ref_k)v1> <mu,(I-Rot_{k-1})v2> - c_{k-1} <mu,(I-Ref_k)v2> <mu,(I-Rot_{k-1})v1>`.
pub fn check_recursion(g: &WedgeGeometry, d: &Drift, c: &[f64]) -> RecursionCheck {
    let mu = d.mu();
    let (v1, v2) = (g.v1(), g.v2());
    let mut residuals = Vec::with_capacity(c.len().saturating_sub(1));
    let mut scale: f64 = 0.0;
    for k in 1..c.len() {
        let refk = g.ref_k(k as u32);
        let rotp = g.rot_k(k as u32 - 1);
        let lhs = c[k] * refk.defect(&mu, &v1) * rotp.defect(&mu, &v2);
        let rhs = c[k - 1] * refk.defect(&mu, &v2) * rotp.defect(&mu, &v1);
        scale = scale.max(lhs.abs()).max(rhs.abs());
        residuals.push(lhs - rhs);
    }
    RecursionCheck { residuals, scale }
}

/// The stationary density (up to a constant) as `2 ell + 1` exponential
/// terms labelled `Rot_0, Ref_1, Rot_1, ..., Ref_ell, Rot_ell`.
pub fn density_expanded(g: &WedgeGeometry, d: &Drift) -> Result<SumOfExponentials> {
    let ell = admissible_ell(g, d)?;
    let c = coefficients_ck(g, d, ell)?;
    let mu = d.mu();
    let v1 = g.v1();
    let mut terms = Vec::with_capacity(2 * ell as usize + 2);
    for (k, ck) in c.iter().enumerate() {
        let k = k as u32;
        // Ref_0 fixes v1, so its coefficient is zero up to rounding and gets
        // pruned; keep it in the list so pruning decides.
        let refl = g.ref_k(k);
        terms.push(ExponentialTerm::labelled(
            -ck * refl.defect(&mu, &v1),
            refl,
            &mu,
        ));
        let rot = g.rot_k(k);
        terms.push(ExponentialTerm::labelled(
            ck * rot.defect(&mu, &v1),
            rot,
            &mu,
        ));
    }
    let sum = SumOfExponentials::new(*g, *d, terms)?;
    if sum.len() != 2 * ell as usize + 1 {
        return Err(WedgeError::DegenerateDrift(format!(
            "expected {} terms, found {}",
            2 * ell + 1,
            sum.len()
        )));
    }
    Ok(sum)
}

/// The `(ell+1) x (ell+1)` determinant with first row `pi_j(x)` and lower
/// rows the powers `zeta_j^{ell-1}, ..., zeta_j, 1`.
#[derive(Debug, Clone)]
pub struct DeterminantForm {
    columns: Vec<SumOfExponentials>,
    lower_rows: DMatrix<f64>,
}

impl DeterminantForm {
    pub fn new(g: &WedgeGeometry, d: &Drift) -> Result<Self> {
        let ell = admissible_ell(g, d)?;
        let columns = (0..=ell)
            .map(|j| pi_j(g, d, j))
            .collect::<Result<Vec<_>>>()?;
        let z = zetas(g, d, ell);
        let n = ell as usize + 1;
        let lower_rows = DMatrix::from_fn(n - 1, n, |row, col| z[col].powi((n - 2 - row) as i32));
        Ok(Self {
            columns,
            lower_rows,
        })
    }

    pub fn ell(&self) -> u32 {
        self.columns.len() as u32 - 1
    }

    pub fn eval(&self, x: &Vec2) -> f64 {
        let n = self.columns.len();
        let m = DMatrix::from_fn(n, n, |row, col| {
            if row == 0 {
                self.columns[col].eval(x)
            } else {
                self.lower_rows[(row - 1, col)]
            }
        });
        m.determinant()
    }
}

pub fn density_determinant(g: &WedgeGeometry, d: &Drift, x: &Vec2) -> Result<f64> {
    Ok(DeterminantForm::new(g, d)?.eval(x))
}

/// Clockwise construction: run the anticlockwise construction on the mirror
/// image of the problem (faces swapped through the bisector) and map the
/// result back.
pub fn density_clockwise(g: &WedgeGeometry, d: &Drift) -> Result<SumOfExponentials> {
    // Surface alpha / stability errors in terms of the original problem.
    admissible_ell(g, d)?;
    let mirror = g.bisector_reflection();
    let mg = g.mirrored();
    let md = Drift::new(mirror.apply(&d.mu()))?;
    let mirrored = density_expanded(&mg, &md)?;
    let terms = mirrored.terms().iter().map(|t| ExponentialTerm {
        coeff: t.coeff,
        exponent: mirror.apply(&t.exponent),
        label: t.label.map(|m| mirror.compose(&m).compose(&mirror)),
    });
    SumOfExponentials::new(*g, *d, terms)
}
