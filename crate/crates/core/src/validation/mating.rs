use std::f64::consts::PI;
use std::fmt;

use crate::density::SumOfExponentials;
use crate::error::{Result, WedgeError};
use crate::geometry::{Drift, Face, LabelKind, LabelMatrix, WedgeGeometry, ANGLE_TOL};

/// Which boundary condition joins two consecutive labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeType {
    Bc1,
    Bc2,
}

impl EdgeType {
    pub fn face(self) -> Face {
        match self {
            EdgeType::Bc1 => Face::F1,
            EdgeType::Bc2 => Face::F2,
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeType::Bc1 => "BC1",
            EdgeType::Bc2 => "BC2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatingPath {
    pub labels: Vec<LabelMatrix>,
    pub edge_types: Vec<EdgeType>,
}

impl MatingPath {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn endpoints(&self) -> Option<(LabelMatrix, LabelMatrix)> {
        Some((*self.labels.first()?, *self.labels.last()?))
    }
}

/// Walks from `rho(2 delta)` by alternating mates: a rotation `rho(2b)` is
/// joined through `F2` to `rho(2b) R(xi) = R(b + xi)`, and a reflection
/// `R(c)` is joined through `F1` to `rho(2c)`. Stops at the first label equal
/// to `rho(-2 eps)`; fails if none appears within `max_len` vertices.
pub fn mating_path(g: &WedgeGeometry, max_len: usize) -> Result<MatingPath> {
    if max_len == 0 {
        return Err(WedgeError::Domain("max_len must be at least 1".into()));
    }
    let target = LabelMatrix::rotation(-2.0 * g.epsilon());
    let mut labels = vec![LabelMatrix::rotation(2.0 * g.delta())];
    let mut edge_types = Vec::new();
    while labels.len() <= max_len {
        let current = *labels.last().expect("nonempty");
        if current.same_as(&target, ANGLE_TOL) {
            return Ok(MatingPath { labels, edge_types });
        }
        let (next, edge) = match current.kind() {
            LabelKind::Rotation => (
                current.compose(&LabelMatrix::reflection(g.xi())),
                EdgeType::Bc2,
            ),
            LabelKind::Reflection => (LabelMatrix::rotation(2.0 * current.angle()), EdgeType::Bc1),
        };
        labels.push(next);
        edge_types.push(edge);
    }
    Err(WedgeError::NoClosure { steps: max_len })
}

/// Every reflection `R(c)` on the path must have `c mod pi` strictly inside
/// `(xi, pi)`: its line then misses the open wedge and it differs from
/// `R(0)` and `R(xi)`.
pub fn range_restriction_check(path: &MatingPath, g: &WedgeGeometry) -> bool {
    path.labels.iter().all(|m| match m.kind() {
        LabelKind::Rotation => true,
        LabelKind::Reflection => {
            let c = m.angle().rem_euclid(PI);
            c > g.xi() + ANGLE_TOL && c < PI - ANGLE_TOL
        }
    })
}

/// Largest `|<d_a - d_b, w_face>|` over edges, where `d = (I - M)^T mu` and
/// the face is the one named by the edge type.
pub fn pairing_residual(path: &MatingPath, g: &WedgeGeometry, d: &Drift) -> f64 {
    let mu = d.mu();
    path.labels
        .windows(2)
        .zip(&path.edge_types)
        .map(|(pair, edge)| {
            let w = g.face_direction(edge.face());
            (pair[0].exponent_for(&mu) - pair[1].exponent_for(&mu))
                .dot(&w)
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Whether the path labels and the term labels of `sum` agree as multisets.
pub fn labels_match(path: &MatingPath, sum: &SumOfExponentials, tol: f64) -> bool {
    let mut remaining: Vec<LabelMatrix> = path.labels.clone();
    for label in sum.labels() {
        let Some(label) = label else { return false };
        match remaining.iter().position(|m| m.same_as(&label, tol)) {
            Some(i) => {
                remaining.swap_remove(i);
            }
            None => return false,
        }
    }
    remaining.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::density_expanded;

    #[test]
    fn ell_two_path() {
        let g = WedgeGeometry::with_ell(0.7, 1.0, 2).unwrap();
        let p = mating_path(&g, 64).unwrap();
        let (d, x) = (g.delta(), g.xi());
        let expected = [
            LabelMatrix::rotation(2.0 * d),
            LabelMatrix::rotation(2.0 * d).compose(&LabelMatrix::reflection(x)),
            LabelMatrix::rotation(2.0 * d + 2.0 * x),
            LabelMatrix::rotation(2.0 * d + 2.0 * x).compose(&LabelMatrix::reflection(x)),
            LabelMatrix::rotation(2.0 * d + 4.0 * x),
        ];
        assert_eq!(p.len(), 5);
        for (a, b) in p.labels.iter().zip(&expected) {
            assert!(a.same_as(b, 1e-12));
        }
        assert_eq!(
            p.edge_types,
            vec![EdgeType::Bc2, EdgeType::Bc1, EdgeType::Bc2, EdgeType::Bc1]
        );
        let (first, last) = p.endpoints().unwrap();
        assert!(first.same_as(&LabelMatrix::rotation(2.0 * g.delta()), 1e-12));
        assert!(last.same_as(&LabelMatrix::rotation(-2.0 * g.epsilon()), 1e-9));
    }

    #[test]
    fn closes_with_odd_length() {
        for ell in 0..4u32 {
            let g = WedgeGeometry::with_ell(0.5, 1.1, ell).unwrap();
            let p = mating_path(&g, 64).unwrap();
            assert_eq!(p.len(), 2 * ell as usize + 1);
            assert!(range_restriction_check(&p, &g));
        }
    }

    #[test]
    fn non_integer_alpha_never_closes() {
        let g = WedgeGeometry::new(PI / 3.0, PI / 4.0, PI / 4.0).unwrap();
        assert!((g.alpha() + 1.5).abs() < 1e-12);
        assert!(matches!(
            mating_path(&g, 64),
            Err(WedgeError::NoClosure { steps: 64 })
        ));
    }

    #[test]
    fn range_restriction_rejects_bad_reflections() {
        let g = WedgeGeometry::with_ell(0.7, 1.0, 1).unwrap();
        let mut p = mating_path(&g, 64).unwrap();
        p.labels.push(LabelMatrix::reflection(0.0));
        assert!(!range_restriction_check(&p, &g));
        let mut q = mating_path(&g, 64).unwrap();
        q.labels.push(LabelMatrix::reflection(0.5 * g.xi()));
        assert!(!range_restriction_check(&q, &g));
        let mut r = mating_path(&g, 64).unwrap();
        r.labels.push(LabelMatrix::reflection(g.xi()));
        assert!(!range_restriction_check(&r, &g));
    }

    #[test]
    fn path_matches_density_terms() {
        for ell in 1..4u32 {
            let g = WedgeGeometry::with_ell(0.45, 1.2, ell).unwrap();
            let (lo, hi) = g.stability_interval();
            let d = Drift::from_polar(1.3, lo + 0.41 * (hi - lo)).unwrap();
            let p = mating_path(&g, 64).unwrap();
            let s = density_expanded(&g, &d).unwrap();
            assert!(labels_match(&p, &s, 1e-9));
            assert!(pairing_residual(&p, &g, &d) < 1e-12);
        }
    }
}
