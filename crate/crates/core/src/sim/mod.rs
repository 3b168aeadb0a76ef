//! Monte Carlo: Euler discretization of the reflected process in the wedge,
//! and free Brownian motion survival in the reflected cone for the
//! reflection-group cases.

mod group;
mod histogram;

pub use group::{
    biane_formula, density_from_group, duality_check, survival_mc, DihedralGroup, DualityCheck,
    SurvivalConfig, SurvivalEstimate,
};
pub use histogram::{compare, Comparison, PolarHistogram};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, WedgeError};
use crate::geometry::{Drift, Face, Vec2, WedgeGeometry};

/// How a step that leaves the wedge is brought back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PushScheme {
    /// Add `2 t v_i`: the overshoot is reflected obliquely back into the
    /// wedge. For normal reflection this is the mirror image.
    #[default]
    Mirror,
    /// Add the minimal `t v_i` that lands on the face.
    Project,
}

/// Pushes per step before falling back to the vertex.
const MAX_PUSHES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    /// Recorded steps per path, after burn-in.
    pub steps: u64,
    pub paths: u64,
    pub seed: u64,
    pub start: Vec2,
    /// Unrecorded steps at the start of every path.
    pub burn_in: u64,
    pub push: PushScheme,
    /// Test hook: `false` switches the Brownian increments off.
    pub noise: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 1_000_000,
            paths: 40,
            seed: 1,
            start: Vec2::new(0.5, 0.25),
            burn_in: 10_000,
            push: PushScheme::Mirror,
            noise: true,
        }
    }
}

impl SimConfig {
    fn check(&self, g: &WedgeGeometry) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(WedgeError::Domain(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if self.steps == 0 || self.paths == 0 {
            return Err(WedgeError::Domain(
                "steps and paths must be positive".into(),
            ));
        }
        if !g.contains(&self.start, 1e-12) {
            return Err(WedgeError::Domain(
                "start point lies outside the wedge".into(),
            ));
        }
        Ok(())
    }

    pub fn samples(&self) -> u64 {
        self.steps * self.paths
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub histogram: PolarHistogram,
    /// Per-batch histograms (paths grouped by index modulo the batch count),
    /// used for standard errors.
    pub batches: Vec<PolarHistogram>,
    pub visits: u64,
    pub vertex_projections: u64,
    pub mean_radius: f64,
    pub mean_radius_se: f64,
    /// Mean radius over the first and second half of each path's record.
    pub mean_radius_halves: (f64, f64),
    /// Drift outside the stability interval, or the radius kept growing.
    pub unstable: bool,
}

impl SimResult {
    /// L1 distance between the histograms of even and odd batches, and the
    /// scale of that distance expected from sampling noise alone.
    pub fn halves_l1(&self) -> (f64, f64) {
        let mut even = self.histogram.empty_like();
        let mut odd = self.histogram.empty_like();
        for (i, b) in self.batches.iter().enumerate() {
            if i % 2 == 0 {
                even.merge(b);
            } else {
                odd.merge(b);
            }
        }
        let se_even =
            histogram::bin_standard_errors(&self.batches.iter().step_by(2).collect::<Vec<_>>());
        let se_odd = histogram::bin_standard_errors(
            &self.batches.iter().skip(1).step_by(2).collect::<Vec<_>>(),
        );
        let pe = even.probabilities();
        let po = odd.probabilities();
        let l1 = pe.iter().zip(&po).map(|(a, b)| (a - b).abs()).sum();
        let se = se_even.iter().zip(&se_odd).map(|(a, b)| a.hypot(*b)).sum();
        (l1, se)
    }
}

struct PathOutcome {
    histogram: PolarHistogram,
    radius_sum: [f64; 2],
    radius_count: [u64; 2],
    vertex_projections: u64,
}

/// Brings `x` back into the wedge. Returns `false` if `MAX_PUSHES` pushes
/// did not suffice, in which case `x` is moved to the vertex.
fn push_inside(x: &mut Vec2, g: &WedgeGeometry, scheme: PushScheme) -> bool {
    let (n1, n2) = (g.n1(), g.n2());
    let (v1, v2) = (g.v1(), g.v2());
    let factor = match scheme {
        PushScheme::Mirror => 2.0,
        PushScheme::Project => 1.0,
    };
    for _ in 0..MAX_PUSHES {
        let (a1, a2) = (x.dot(&n1), x.dot(&n2));
        let tol = -1e-14 * (1.0 + x.norm());
        if a1 >= tol && a2 >= tol {
            return true;
        }
        // <v_i, n_i> = 1, so t = -a_i.
        if a1 < a2 {
            *x -= factor * a1 * v1;
        } else {
            *x -= factor * a2 * v2;
        }
    }
    let tol = -1e-14 * (1.0 + x.norm());
    if x.dot(&n1) >= tol && x.dot(&n2) >= tol {
        return true;
    }
    *x = Vec2::zeros();
    false
}

fn run_path(
    g: &WedgeGeometry,
    mu: Vec2,
    cfg: &SimConfig,
    template: &PolarHistogram,
    index: u64,
) -> Result<PathOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let sq = cfg.dt.sqrt();
    let step_drift = -cfg.dt * mu;
    let mut x = cfg.start;
    let mut out = PathOutcome {
        histogram: template.empty_like(),
        radius_sum: [0.0; 2],
        radius_count: [0; 2],
        vertex_projections: 0,
    };
    let total = cfg.burn_in + cfg.steps;
    let half = cfg.burn_in + cfg.steps / 2;
    for i in 0..total {
        x += step_drift;
        if cfg.noise {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            x += sq * Vec2::new(z1, z2);
        }
        if !push_inside(&mut x, g, cfg.push) {
            out.vertex_projections += 1;
        }
        if !(x.x.is_finite() && x.y.is_finite()) {
            return Err(WedgeError::NumericalBlowup(format!(
                "non-finite state on path {index} at step {i}"
            )));
        }
        if i >= cfg.burn_in {
            out.histogram.record(&x);
            let h = usize::from(i >= half);
            out.radius_sum[h] += x.norm();
            out.radius_count[h] += 1;
        }
    }
    Ok(out)
}

/// Simulates `cfg.paths` independent paths of the reflected process with
/// drift `-mu` and records their post-burn-in positions in a copy of
/// `template`.
///
/// Each path draws from its own ChaCha8 stream keyed by `(seed, path)`, so
/// the result does not depend on the number of threads.
pub fn simulate_srbm(
    g: &WedgeGeometry,
    d: &Drift,
    cfg: &SimConfig,
    template: &PolarHistogram,
) -> Result<SimResult> {
    if g.alpha().is_nan() || g.alpha() >= 1.0 {
        return Err(WedgeError::Domain(format!(
            "alpha = {} must be below 1 for the reflected process to exist",
            g.alpha()
        )));
    }
    cfg.check(g)?;
    let mu = d.mu();
    let n_batches = cfg.paths.min(32) as usize;
    let mut batches = vec![template.empty_like(); n_batches];
    let mut radius_sum = [0.0; 2];
    let mut radius_count = [0u64; 2];
    let mut batch_radius = vec![(0.0, 0u64); n_batches];
    let mut vertex_projections = 0;

    let indices: Vec<u64> = (0..cfg.paths).collect();
    for chunk in indices.chunks(n_batches) {
        let outcomes: Vec<Result<PathOutcome>> = chunk
            .par_iter()
            .map(|&i| run_path(g, mu, cfg, template, i))
            .collect();
        for (&i, outcome) in chunk.iter().zip(outcomes) {
            let o = outcome?;
            let b = i as usize % n_batches;
            batches[b].merge(&o.histogram);
            for h in 0..2 {
                radius_sum[h] += o.radius_sum[h];
                radius_count[h] += o.radius_count[h];
                batch_radius[b].0 += o.radius_sum[h];
                batch_radius[b].1 += o.radius_count[h];
            }
            vertex_projections += o.vertex_projections;
        }
    }

    let mut histogram = template.empty_like();
    for b in &batches {
        histogram.merge(b);
    }
    let visits = histogram.total();
    let mean_radius = (radius_sum[0] + radius_sum[1]) / visits as f64;
    let means: Vec<f64> = batch_radius.iter().map(|(s, c)| s / *c as f64).collect();
    let mean_radius_se = standard_error(&means);
    let halves = (
        radius_sum[0] / radius_count[0].max(1) as f64,
        radius_sum[1] / radius_count[1].max(1) as f64,
    );
    let (lo, hi) = g.stability_interval();
    let stable_angle = d.theta() > lo && d.theta() < hi;
    let growing = halves.1 > 1.5 * halves.0 + 3.0 * mean_radius_se;
    Ok(SimResult {
        histogram,
        batches,
        visits,
        vertex_projections,
        mean_radius,
        mean_radius_se,
        mean_radius_halves: halves,
        unstable: !stable_angle || growing,
    })
}

/// Standard error of the mean of `values`.
pub(crate) fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Face whose half-plane `x` violates the most, if any.
pub fn violated_face(g: &WedgeGeometry, x: &Vec2) -> Option<Face> {
    let (a1, a2) = (x.dot(&g.n1()), x.dot(&g.n2()));
    match (a1 < 0.0, a2 < 0.0) {
        (false, false) => None,
        _ if a1 < a2 => Some(Face::F1),
        _ => Some(Face::F2),
    }
}
