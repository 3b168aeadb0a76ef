//! The wedge, its faces and pushing directions, drift vectors, and the
//! rotation/reflection matrices that label exponential terms.
//!
//! Coordinates: face `F1` is the ray through `w(0)`, face `F2` the ray through
//! `w(xi)`. Inward normals are `n1 = (0, 1)` and `n2 = (sin xi, -cos xi)`.
//! Pushing directions are scaled so that `<v_i, n_i> = 1`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Result, WedgeError};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Default absolute tolerance for angle comparisons, in radians.
pub const ANGLE_TOL: f64 = 1e-9;

/// Unit vector `(cos theta, sin theta)`.
pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// `e1 = (1, 0)`.
pub fn e1() -> Vec2 {
    Vec2::new(1.0, 0.0)
}

/// Reduces `angle` into `[-period/2, period/2)`.
pub fn wrap_angle(angle: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    (angle + half).rem_euclid(period) - half
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    F1,
    F2,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::F1 => write!(f, "F1"),
            Face::F2 => write!(f, "F2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelKind {
    Rotation,
    Reflection,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelKind::Rotation => write!(f, "rotation"),
            LabelKind::Reflection => write!(f, "reflection"),
        }
    }
}

/// An orthogonal 2x2 matrix stored by kind and angle.
///
/// `Rotation(theta)` is the counter-clockwise rotation by `theta`;
/// `Reflection(theta)` is the reflection across the line with argument
/// `theta`. Entries are always recomputed from the angle, so long chains of
/// compositions never accumulate rounding in the matrix itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMatrix {
    kind: LabelKind,
    angle: f64,
}

impl LabelMatrix {
    pub fn rotation(theta: f64) -> Self {
        Self {
            kind: LabelKind::Rotation,
            angle: theta,
        }
    }

    pub fn reflection(theta: f64) -> Self {
        Self {
            kind: LabelKind::Reflection,
            angle: theta,
        }
    }

    pub fn identity() -> Self {
        Self::rotation(0.0)
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    /// Rotation angle, or the argument of the mirror line for reflections.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Angle reduced to its canonical range: `[-pi, pi)` for rotations and
    /// `[-pi/2, pi/2)` for reflection lines.
    pub fn canonical_angle(&self) -> f64 {
        match self.kind {
            LabelKind::Rotation => wrap_angle(self.angle, TAU),
            LabelKind::Reflection => wrap_angle(self.angle, PI),
        }
    }

    pub fn matrix(&self) -> Mat2 {
        match self.kind {
            LabelKind::Rotation => {
                let (s, c) = self.angle.sin_cos();
                Mat2::new(c, -s, s, c)
            }
            LabelKind::Reflection => {
                let (s, c) = (2.0 * self.angle).sin_cos();
                Mat2::new(c, s, s, -c)
            }
        }
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        self.matrix() * v
    }

    /// Matrix product `self * other`, kept in closed form.
    pub fn compose(&self, other: &LabelMatrix) -> LabelMatrix {
        use LabelKind::*;
        match (self.kind, other.kind) {
            (Rotation, Rotation) => Self::rotation(self.angle + other.angle),
            (Rotation, Reflection) => Self::reflection(other.angle + 0.5 * self.angle),
            (Reflection, Rotation) => Self::reflection(self.angle - 0.5 * other.angle),
            (Reflection, Reflection) => Self::rotation(2.0 * (self.angle - other.angle)),
        }
    }

    pub fn inverse(&self) -> LabelMatrix {
        match self.kind {
            LabelKind::Rotation => Self::rotation(-self.angle),
            LabelKind::Reflection => *self,
        }
    }

    /// Same kind and same angle modulo the kind's period, within `tol`.
    pub fn same_as(&self, other: &LabelMatrix, tol: f64) -> bool {
        if self.kind != other.kind {
            return false;
        }
        let period = match self.kind {
            LabelKind::Rotation => TAU,
            LabelKind::Reflection => PI,
        };
        wrap_angle(self.angle - other.angle, period).abs() <= tol
    }

    /// The exponent vector `d` with `<d, x> = <mu, (I - M) x>` for all `x`.
    pub fn exponent_for(&self, mu: &Vec2) -> Vec2 {
        (Mat2::identity() - self.matrix()).transpose() * mu
    }

    /// `<mu, (I - M) v>`.
    pub fn defect(&self, mu: &Vec2, v: &Vec2) -> f64 {
        mu.dot(&(v - self.apply(v)))
    }
}

impl fmt::Display for LabelMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LabelKind::Rotation => write!(f, "rho({:.6})", self.canonical_angle()),
            LabelKind::Reflection => write!(f, "R({:.6})", self.canonical_angle()),
        }
    }
}

/// A drift parameter `mu`; the reflected process moves with drift `-mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    mu: Vec2,
    theta: f64,
}

impl Drift {
    pub fn new(mu: Vec2) -> Result<Self> {
        let norm = mu.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(WedgeError::ZeroDrift);
        }
        Ok(Self {
            mu,
            theta: mu.y.atan2(mu.x),
        })
    }

    pub fn from_polar(norm: f64, theta: f64) -> Result<Self> {
        Self::new(norm * unit(theta))
    }

    pub fn mu(&self) -> Vec2 {
        self.mu
    }

    /// `arg(mu)` in `(-pi, pi]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn norm(&self) -> f64 {
        self.mu.norm()
    }

    /// The same direction with unit length.
    pub fn normalized(&self) -> Drift {
        Drift {
            mu: self.mu / self.mu.norm(),
            theta: self.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// `xi - epsilon < theta_mu < delta` fails: no stationary distribution.
    Unstable,
    /// Stable, but some `sin(theta_mu - 2 delta - k xi)` vanishes.
    StableOnly,
    /// Stable and all the exponential terms are linearly independent.
    InThetaEll,
}

/// The wedge `{0 <= arg x <= xi}` together with its pushing directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeGeometry {
    xi: f64,
    delta: f64,
    epsilon: f64,
    n1: Vec2,
    n2: Vec2,
    v1: Vec2,
    v2: Vec2,
    alpha: f64,
}

impl WedgeGeometry {
    pub fn new(xi: f64, delta: f64, epsilon: f64) -> Result<Self> {
        for (name, value) in [("xi", xi), ("delta", delta), ("epsilon", epsilon)] {
            if !(value > 0.0 && value < PI) {
                return Err(WedgeError::AngleOutOfRange { name, value });
            }
        }
        for (name, angle) in [("delta", delta), ("epsilon", epsilon)] {
            let sine = angle.sin();
            if sine < 1e-12 {
                return Err(WedgeError::DegeneratePushing { name, sine });
            }
        }
        let n1 = Vec2::new(0.0, 1.0);
        let n2 = Vec2::new(xi.sin(), -xi.cos());
        let v1 = unit(delta) / delta.sin();
        let v2 = unit(xi - epsilon) / epsilon.sin();
        Ok(Self {
            xi,
            delta,
            epsilon,
            n1,
            n2,
            v1,
            v2,
            alpha: (delta + epsilon - PI) / xi,
        })
    }

    /// Geometry with `alpha = -ell` exactly, parametrized by `xi` and `delta`.
    pub fn with_ell(xi: f64, delta: f64, ell: u32) -> Result<Self> {
        Self::new(xi, delta, PI - delta - ell as f64 * xi)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n1(&self) -> Vec2 {
        self.n1
    }

    pub fn n2(&self) -> Vec2 {
        self.n2
    }

    pub fn v1(&self) -> Vec2 {
        self.v1
    }

    pub fn v2(&self) -> Vec2 {
        self.v2
    }

    pub fn normal(&self, face: Face) -> Vec2 {
        match face {
            Face::F1 => self.n1,
            Face::F2 => self.n2,
        }
    }

    pub fn pushing(&self, face: Face) -> Vec2 {
        match face {
            Face::F1 => self.v1,
            Face::F2 => self.v2,
        }
    }

    /// `v_i^* = 2 n_i - v_i`, the direction appearing in the adjoint
    /// boundary condition.
    pub fn v_star(&self, face: Face) -> Vec2 {
        2.0 * self.normal(face) - self.pushing(face)
    }

    /// Unit vector along a face: `w(0)` for `F1`, `w(xi)` for `F2`.
    pub fn face_direction(&self, face: Face) -> Vec2 {
        match face {
            Face::F1 => unit(0.0),
            Face::F2 => unit(self.xi),
        }
    }

    /// Whether `x` lies in the closed wedge, up to `tol` in each normal
    /// coordinate.
    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        x.dot(&self.n1) >= -tol && x.dot(&self.n2) >= -tol
    }

    pub fn stability_interval(&self) -> (f64, f64) {
        (self.xi - self.epsilon, self.delta)
    }

    /// `rho(2 delta + 2 k xi)`.
    pub fn rot_k(&self, k: u32) -> LabelMatrix {
        LabelMatrix::rotation(2.0 * self.delta + 2.0 * k as f64 * self.xi)
    }

    /// `rho(2 delta + 2 (k - 1) xi) R(xi)`, i.e. the reflection across the
    /// line with argument `delta + k xi`.
    pub fn ref_k(&self, k: u32) -> LabelMatrix {
        LabelMatrix::rotation(2.0 * self.delta + 2.0 * (k as f64 - 1.0) * self.xi)
            .compose(&LabelMatrix::reflection(self.xi))
    }

    /// `rho(-2 k xi - 2 epsilon)`.
    pub fn tilde_rot_k(&self, k: u32) -> LabelMatrix {
        LabelMatrix::rotation(-2.0 * k as f64 * self.xi - 2.0 * self.epsilon)
    }

    /// `rho(-2 (k - 1) xi - 2 epsilon) R(0)`.
    pub fn tilde_ref_k(&self, k: u32) -> LabelMatrix {
        LabelMatrix::rotation(-2.0 * (k as f64 - 1.0) * self.xi - 2.0 * self.epsilon)
            .compose(&LabelMatrix::reflection(0.0))
    }

    /// The nonnegative integer `ell` with `|alpha + ell| <= tol`, if any.
    pub fn ell(&self, tol: f64) -> Option<u32> {
        let candidate = (-self.alpha).round();
        if candidate >= 0.0 && (self.alpha + candidate).abs() <= tol {
            Some(candidate as u32)
        } else {
            None
        }
    }

    pub fn drift_admissibility(&self, drift: &Drift, ell: u32, tol: f64) -> Admissibility {
        let theta = drift.theta();
        let (lo, hi) = self.stability_interval();
        if !(theta > lo && theta < hi) {
            return Admissibility::Unstable;
        }
        let independent = (0..=2 * ell)
            .all(|k| (theta - 2.0 * self.delta - k as f64 * self.xi).sin().abs() > tol);
        if independent {
            Admissibility::InThetaEll
        } else {
            Admissibility::StableOnly
        }
    }

    /// Reflection across the bisector of the wedge; it swaps the two faces.
    pub fn bisector_reflection(&self) -> LabelMatrix {
        LabelMatrix::reflection(0.5 * self.xi)
    }

    /// The mirror-image problem: same opening, pushing angles swapped.
    pub fn mirrored(&self) -> WedgeGeometry {
        WedgeGeometry::new(self.xi, self.epsilon, self.delta).expect("mirroring preserves validity")
    }
}
