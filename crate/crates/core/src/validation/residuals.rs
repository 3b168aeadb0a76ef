use crate::density::{ExponentialTerm, SumOfExponentials};
use crate::error::{Result, WedgeError};
use crate::geometry::{Drift, Face, LabelMatrix, Vec2, WedgeGeometry};

/// Largest absolute residual over a point set, with the size of the terms
/// that cancel to produce it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residual {
    pub max_abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_abs / self.scale
        } else {
            self.max_abs
        }
    }

    fn absorb(&mut self, value: f64, scale: f64) {
        self.max_abs = self.max_abs.max(value.abs());
        self.scale = self.scale.max(scale);
    }
}

/// `Laplace p + 2 <mu, grad p>` evaluated term by term:
/// `sum_i a_i exp(-<d_i, x>) (|d_i|^2 - 2 <mu, d_i>)`.
pub fn pde_residual(sum: &SumOfExponentials, d: &Drift, xs: &[Vec2]) -> Residual {
    let mu = d.mu();
    let mut res = Residual::default();
    for x in xs {
        let mut value = 0.0;
        let mut scale = 0.0;
        for t in sum.terms() {
            let e = t.eval(x);
            value += e * t.pde_defect(&mu);
            scale += e.abs() * (t.exponent.norm_squared() + 2.0 * mu.dot(&t.exponent).abs());
        }
        res.absorb(value, scale);
    }
    res
}

/// The same operator from central differences with step `h`.
pub fn pde_residual_fd(sum: &SumOfExponentials, d: &Drift, xs: &[Vec2], h: f64) -> Vec<f64> {
    let mu = d.mu();
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    xs.iter()
        .map(|x| {
            let f0 = sum.eval(x);
            let (fxp, fxm) = (sum.eval(&(x + ex)), sum.eval(&(x - ex)));
            let (fyp, fym) = (sum.eval(&(x + ey)), sum.eval(&(x - ey)));
            let lap = (fxp + fxm + fyp + fym - 4.0 * f0) / (h * h);
            let grad = Vec2::new(fxp - fxm, fyp - fym) / (2.0 * h);
            lap + 2.0 * mu.dot(&grad)
        })
        .collect()
}

/// `<v*, grad p> + 2 <mu, n> p` at the points `s w_face`, with
/// `v* = 2 n - v` for the face.
pub fn bc_residual(
    sum: &SumOfExponentials,
    d: &Drift,
    g: &WedgeGeometry,
    face: Face,
    ss: &[f64],
) -> Residual {
    let mu = d.mu();
    let vs = g.v_star(face);
    let mu_n = 2.0 * mu.dot(&g.normal(face));
    let w = g.face_direction(face);
    let mut res = Residual::default();
    for &s in ss {
        let x = s * w;
        let mut value = 0.0;
        let mut scale = 0.0;
        for t in sum.terms() {
            let e = t.eval(&x);
            let along = -vs.dot(&t.exponent);
            value += e * (along + mu_n);
            scale += e.abs() * (along.abs() + mu_n.abs());
        }
        res.absorb(value, scale);
    }
    res
}

/// The two-term boundary solution for angle `gamma`: on `F1` the labels are
/// `rho(2 gamma + 2 delta)` and `rho(2 gamma + 2 delta) R(0)` weighted by
/// their defects against `v1`; on `F2` the labels are
/// `rho(-2 gamma - 2 eps)` and `rho(-2 gamma - 2 eps) R(xi)` against `v2`.
pub fn pair_check(
    g: &WedgeGeometry,
    d: &Drift,
    gamma: f64,
    face: Face,
) -> Result<SumOfExponentials> {
    if !(gamma > 0.0 && gamma < std::f64::consts::PI) {
        return Err(WedgeError::Domain(format!(
            "gamma = {gamma} is outside (0, pi)"
        )));
    }
    let mu = d.mu();
    let (rot, refl, v) = match face {
        Face::F1 => {
            let rot = LabelMatrix::rotation(2.0 * gamma + 2.0 * g.delta());
            (rot, rot.compose(&LabelMatrix::reflection(0.0)), g.v1())
        }
        Face::F2 => {
            let rot = LabelMatrix::rotation(-2.0 * gamma - 2.0 * g.epsilon());
            (rot, rot.compose(&LabelMatrix::reflection(g.xi())), g.v2())
        }
    };
    let a_rot = rot.defect(&mu, &v);
    let a_ref = refl.defect(&mu, &v);
    let scale = mu.norm_squared() * v.norm();
    if a_ref.abs() <= 1e-12 * scale {
        return Err(WedgeError::DegeneratePair(format!(
            "<mu, (I - {refl}) v> vanishes for gamma = {gamma}"
        )));
    }
    let terms = [
        ExponentialTerm::labelled(a_rot, rot, &mu),
        ExponentialTerm::labelled(-a_ref, refl, &mu),
    ];
    if (terms[0].exponent - terms[1].exponent).norm() <= 1e-12 * mu.norm() {
        return Err(WedgeError::DegeneratePair(format!(
            "both labels give the same exponent for gamma = {gamma}"
        )));
    }
    SumOfExponentials::new(*g, *d, terms)
}

/// Geometric sequence of `n` face arc lengths on `[1e-3, 20]`.
pub fn face_points(n: usize) -> Vec<f64> {
    geometric(1e-3, 20.0, n)
}

pub(crate) fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

/// `n_theta * n_r` interior points: open angular grid, radii geometric from
/// `1e-3` to `r_max`.
pub fn interior_points(g: &WedgeGeometry, r_max: f64, n_theta: usize, n_r: usize) -> Vec<Vec2> {
    let radii = geometric(1e-3, r_max, n_r);
    (0..n_theta)
        .flat_map(|i| {
            let theta = g.xi() * (i as f64 + 0.5) / n_theta as f64;
            let w = crate::geometry::unit(theta);
            radii.iter().map(move |&r| r * w).collect::<Vec<_>>()
        })
        .collect()
}
