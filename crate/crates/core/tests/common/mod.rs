//! Shared parameter generators for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wedgeflow::density::density_expanded;
use wedgeflow::{Drift, WedgeGeometry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A wedge with `alpha = -ell`: `xi` leaves room for a stability interval
/// and `delta + ell xi < pi` keeps `epsilon` in range.
pub fn random_geometry(rng: &mut impl Rng, ell: u32) -> WedgeGeometry {
    loop {
        let xi = rng.gen_range(0.2..0.9 * PI / (ell as f64 + 1.0));
        let hi = PI - ell as f64 * xi - 0.15;
        if hi <= 0.3 {
            continue;
        }
        let delta = rng.gen_range(0.15..hi);
        if let Ok(g) = WedgeGeometry::with_ell(xi, delta, ell) {
            return g;
        }
    }
}

/// A drift strictly inside the stability interval for which the
/// construction succeeds.
pub fn random_drift(rng: &mut impl Rng, g: &WedgeGeometry) -> Drift {
    let (lo, hi) = g.stability_interval();
    loop {
        let t = rng.gen_range(0.05..0.95);
        let norm = rng.gen_range(0.5..2.0);
        let d = Drift::from_polar(norm, lo + t * (hi - lo)).unwrap();
        if density_expanded(g, &d).is_ok() {
            return d;
        }
    }
}

/// Three `(g, mu)` cases for each `ell` in `0..=3`.
pub fn parameter_sets(seed: u64) -> Vec<(u32, WedgeGeometry, Drift)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for ell in 0..4 {
        for _ in 0..3 {
            let g = random_geometry(&mut r, ell);
            let d = random_drift(&mut r, &g);
            out.push((ell, g, d));
        }
    }
    out
}

/// Points `r w(theta)` spread over the wedge, `r` in `[0.05, 3]`.
pub fn sample_points(rng: &mut impl Rng, g: &WedgeGeometry, n: usize) -> Vec<wedgeflow::Vec2> {
    (0..n)
        .map(|_| {
            let theta = rng.gen_range(0.0..=g.xi());
            let r = rng.gen_range(0.05..3.0);
            r * wedgeflow::geometry::unit(theta)
        })
        .collect()
}

/// `(max - min) / |mean|`.
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean.abs()
}
