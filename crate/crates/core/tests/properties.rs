mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use wedgeflow::density::density_expanded;
use wedgeflow::geometry::unit;
use wedgeflow::sim::{biane_formula, DihedralGroup, PolarHistogram};
use wedgeflow::spectral::{schur_sign_det, vandermonde_sign};
use wedgeflow::validation::{bc_residual, face_points, interior_points, pde_residual};
use wedgeflow::{Drift, Face, LabelMatrix, Vec2, WedgeGeometry};

/// `(ell, g, mu)` built from fractions of the admissible ranges.
fn case() -> impl Strategy<Value = (u32, WedgeGeometry, Drift)> {
    (
        0u32..4,
        0.05f64..0.95,
        0.05f64..0.95,
        0.05f64..0.95,
        0.3f64..2.5,
    )
        .prop_filter_map("degenerate case", |(ell, fx, fd, ft, norm)| {
            let xi = 0.15 + fx * (0.9 * PI / (ell as f64 + 1.0) - 0.15);
            let hi = PI - ell as f64 * xi - 0.1;
            if hi <= 0.2 {
                return None;
            }
            let g = WedgeGeometry::with_ell(xi, 0.1 + fd * (hi - 0.1), ell).ok()?;
            let (lo, up) = g.stability_interval();
            let d = Drift::from_polar(norm, lo + ft * (up - lo)).ok()?;
            density_expanded(&g, &d).ok()?;
            Some((ell, g, d))
        })
}

fn matrices_close(a: &LabelMatrix, b: &nalgebra::Matrix2<f64>) -> bool {
    (a.matrix() - b).abs().max() < 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_products_follow_the_closed_forms(a in -7.0f64..7.0, b in -7.0f64..7.0) {
        let (ra, rb) = (LabelMatrix::rotation(a), LabelMatrix::rotation(b));
        let (fa, fb) = (LabelMatrix::reflection(a), LabelMatrix::reflection(b));
        for (x, y) in [(ra, rb), (ra, fb), (fa, rb), (fa, fb)] {
            prop_assert!(matrices_close(&x.compose(&y), &(x.matrix() * y.matrix())));
        }
        prop_assert!(ra.compose(&fb).same_as(&LabelMatrix::reflection(b + a / 2.0), 1e-12));
        prop_assert!(fa.compose(&rb).same_as(&LabelMatrix::reflection(a - b / 2.0), 1e-12));
        prop_assert!(fa.compose(&fa).same_as(&LabelMatrix::identity(), 1e-12));
    }

    #[test]
    fn expansion_has_two_ell_plus_one_terms((ell, g, d) in case()) {
        let s = density_expanded(&g, &d).unwrap();
        prop_assert_eq!(s.len(), 2 * ell as usize + 1);
    }

    #[test]
    fn expansion_solves_pde_and_boundary_conditions((_ell, g, d) in case()) {
        let s = density_expanded(&g, &d).unwrap();
        let xs = interior_points(&g, 20.0 / s.min_decay_rate(), 10, 10);
        let ss = face_points(50);
        prop_assert!(pde_residual(&s, &d, &xs).relative() <= 1e-10);
        prop_assert!(bc_residual(&s, &d, &g, Face::F1, &ss).relative() <= 1e-10);
        prop_assert!(bc_residual(&s, &d, &g, Face::F2, &ss).relative() <= 1e-10);
    }

    #[test]
    fn schur_sign_law(zeta in prop::collection::vec(-3.0f64..3.0, 2..5), y in 0.1f64..3.0) {
        prop_assume!(vandermonde_sign(&zeta) != 0.0);
        prop_assert_eq!(schur_sign_det(&zeta, y).signum(), vandermonde_sign(&zeta));
    }

    #[test]
    fn schur_sign_law_near_ties(
        zeta in prop::collection::vec(-3.0f64..3.0, 1..4),
        tied in 0usize..4,
        flip in any::<bool>(),
        y in 0.1f64..3.0,
    ) {
        // Append a value 1e-6 away from an existing one.
        let base = zeta[tied % zeta.len()];
        let mut z = zeta.clone();
        z.push(if flip { base + 1e-6 } else { base - 1e-6 });
        let min_gap = (0..z.len())
            .flat_map(|i| (i + 1..z.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| !(i == tied % zeta.len() && j == z.len() - 1))
            .map(|(i, j)| (z[i] - z[j]).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 1e-2);
        prop_assert_eq!(schur_sign_det(&z, y).signum(), vandermonde_sign(&z));
    }

    #[test]
    fn group_is_closed_with_balanced_signs(m in 2u32..13) {
        let g = DihedralGroup::new(m).unwrap();
        prop_assert_eq!(g.order(), 2 * m as usize);
        prop_assert_eq!(g.signs().iter().map(|&s| i32::from(s)).sum::<i32>(), 0);
        prop_assert!(g.is_closed());
    }

    #[test]
    fn survival_formula_is_a_monotone_probability(
        m in 2u32..7,
        ft in 0.02f64..0.98,
        norm in 0.2f64..3.0,
        s in 0.0f64..4.0,
        t in 0.0f64..4.0,
        h in 1e-3f64..0.5,
    ) {
        let gr = DihedralGroup::new(m).unwrap();
        let g = gr.geometry();
        let d = Drift::from_polar(norm, ft * g.xi()).unwrap();
        // x = s w(0) + t w(xi); moving along w(0) raises <x, n2> only, along
        // w(xi) raises <x, n1> only.
        let x = s * unit(0.0) + t * unit(g.xi());
        let p = biane_formula(&gr, &d, &x).unwrap();
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&p));
        let p_s = biane_formula(&gr, &d, &(x + h * unit(0.0))).unwrap();
        let p_t = biane_formula(&gr, &d, &(x + h * unit(g.xi()))).unwrap();
        prop_assert!(p_s >= p - 1e-12 && p_t >= p - 1e-12);
    }

    #[test]
    fn histogram_merge_is_order_independent(
        pts in prop::collection::vec((0.0f64..1.2, 0.0f64..3.0), 0..60),
        split in 0usize..60,
    ) {
        let xi = 1.2;
        let mut all = PolarHistogram::new(xi, 2.0, 6, 5);
        let mut a = all.empty_like();
        let mut b = all.empty_like();
        for (i, (th, r)) in pts.iter().enumerate() {
            let x: Vec2 = *r * unit(*th);
            all.record(&x);
            if i < split { a.record(&x) } else { b.record(&x) }
        }
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        prop_assert_eq!(&ab, &all);
        prop_assert_eq!(&ba, &all);
        prop_assert_eq!(all.total(), pts.len() as u64);
    }
}
