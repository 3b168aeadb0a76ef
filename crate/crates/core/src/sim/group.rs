use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::density::{density_expanded, normalize, ExponentialTerm, SumOfExponentials};
use crate::error::{Result, WedgeError};
use crate::geometry::{Drift, Face, LabelMatrix, Vec2, WedgeGeometry};
use crate::quadrature::{AngularRule, QuadratureSpec};

const GROUP_TOL: f64 = 1e-12;

/// The dihedral group of order `2m` generated by the reflections in the
/// walls of the wedge of angle `pi/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DihedralGroup {
    m: u32,
    elements: Vec<LabelMatrix>,
    signs: Vec<i8>,
}

impl DihedralGroup {
    /// Elements in the order `rho(0), R(xi), rho(2 xi), rho(2 xi) R(xi), ...`.
    pub fn new(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(WedgeError::Domain(format!(
                "dihedral group needs m >= 2, got {m}"
            )));
        }
        let xi = PI / m as f64;
        let mut elements = Vec::with_capacity(2 * m as usize);
        let mut signs = Vec::with_capacity(2 * m as usize);
        for k in 0..m {
            let rot = LabelMatrix::rotation(2.0 * k as f64 * xi);
            elements.push(rot);
            signs.push(1);
            elements.push(rot.compose(&LabelMatrix::reflection(xi)));
            signs.push(-1);
        }
        Ok(Self { m, elements, signs })
    }

    /// The `m` with `xi = pi/m`, if there is one.
    pub fn for_angle(xi: f64) -> Result<Self> {
        let m = (PI / xi).round();
        if !(m >= 2.0 && (m * xi - PI).abs() <= 1e-12) {
            return Err(WedgeError::Domain(format!("xi = {xi} is not pi/m")));
        }
        Self::new(m as u32)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn xi(&self) -> f64 {
        PI / self.m as f64
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[LabelMatrix] {
        &self.elements
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn iter(&self) -> impl Iterator<Item = (LabelMatrix, f64)> + '_ {
        self.elements
            .iter()
            .zip(&self.signs)
            .map(|(w, &s)| (*w, f64::from(s)))
    }

    /// The wedge with `delta = epsilon = xi = pi/m` (normal reflection).
    pub fn geometry(&self) -> WedgeGeometry {
        let xi = self.xi();
        WedgeGeometry::new(xi, xi, xi).expect("pi/m with m >= 2 is a valid wedge")
    }

    /// Every product of two elements is an element, with the sign
    /// multiplicative.
    pub fn is_closed(&self) -> bool {
        self.iter().all(|(a, sa)| {
            self.iter().all(|(b, sb)| {
                let ab = a.compose(&b);
                self.iter()
                    .any(|(c, sc)| c.same_as(&ab, GROUP_TOL) && sc == sa * sb)
            })
        })
    }
}

fn check_point(g_xi: f64, x: &Vec2) -> Result<()> {
    let g = WedgeGeometry::new(g_xi, g_xi, g_xi)?;
    if !(x.x.is_finite() && x.y.is_finite()) || !g.contains(x, 1e-14 * (1.0 + x.norm())) {
        return Err(WedgeError::Domain(format!(
            "x = ({}, {}) is not in the closed wedge",
            x.x, x.y
        )));
    }
    Ok(())
}

/// `sum_w sgn(w) exp(-<mu, (I - w) x>)`: the probability that free Brownian
/// motion started at `-x` with drift `-mu` never leaves `-S`.
pub fn biane_formula(group: &DihedralGroup, d: &Drift, x: &Vec2) -> Result<f64> {
    check_point(group.xi(), x)?;
    let mu = d.mu();
    let value: f64 = group
        .iter()
        .map(|(w, s)| s * (-w.exponent_for(&mu).dot(x)).exp())
        .sum();
    if !(-1e-10..=1.0 + 1e-10).contains(&value) {
        return Err(WedgeError::Inconsistency(format!(
            "survival probability {value} outside [0, 1]; mu or x is invalid"
        )));
    }
    Ok(value)
}

fn is_symmetric(group: &DihedralGroup, g: &WedgeGeometry) -> bool {
    let xi = group.xi();
    [g.xi(), g.delta(), g.epsilon()]
        .iter()
        .all(|a| (a - xi).abs() <= 1e-12)
}

/// Terms `sgn(w) <mu,(I-w) v2> <mu,(I-w) v1> exp(-<mu,(I-w) x>)` over the
/// group; the three elements whose prefactor vanishes are dropped.
pub fn density_from_group(
    group: &DihedralGroup,
    g: &WedgeGeometry,
    d: &Drift,
) -> Result<SumOfExponentials> {
    if !is_symmetric(group, g) {
        return Err(WedgeError::Domain(format!(
            "needs delta = epsilon = xi = pi/{}",
            group.m()
        )));
    }
    let mu = d.mu();
    if !(mu.dot(&g.n1()) > 0.0 && mu.dot(&g.n2()) > 0.0) {
        return Err(WedgeError::Domain("mu must lie in the open wedge".into()));
    }
    let (v1, v2) = (g.v1(), g.v2());
    let terms = group.iter().map(|(w, s)| {
        ExponentialTerm::labelled(s * w.defect(&mu, &v2) * w.defect(&mu, &v1), w, &mu)
    });
    SumOfExponentials::new(*g, *d, terms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalConfig {
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            paths: 20_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    /// Fraction of paths still inside at the horizon.
    pub estimate: f64,
    pub standard_error: f64,
    /// Same fraction at half the horizon; the gap to `estimate` bounds the
    /// finite-horizon bias.
    pub half_horizon_estimate: f64,
    pub paths: u64,
}

impl SurvivalEstimate {
    /// Whether the survival change over the second half of the horizon is
    /// below half a standard error.
    pub fn horizon_converged(&self) -> bool {
        (self.half_horizon_estimate - self.estimate).abs() < 0.5 * self.standard_error.max(1e-300)
    }
}

/// Remaining chance of ever hitting a face is below this: stop the path.
const SAFE_ESCAPE: f64 = 1e-10;

/// Returns `(alive at horizon/2, alive at horizon)` for one path of
/// `y = -B`, which starts at `x` with drift `mu` and is killed on leaving `S`.
fn survival_path(
    g: &WedgeGeometry,
    mu: Vec2,
    x: Vec2,
    horizon: f64,
    cfg: &SurvivalConfig,
    index: u64,
) -> (bool, bool) {
    let normals = [g.normal(Face::F1), g.normal(Face::F2)];
    let rates = [2.0 * mu.dot(&normals[0]), 2.0 * mu.dot(&normals[1])];
    let mut dist = [x.dot(&normals[0]), x.dot(&normals[1])];
    if dist.iter().any(|&a| a <= 0.0) {
        return (false, false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let u = rand_distr::Uniform::new(0.0f64, 1.0);
    let steps = (horizon / cfg.dt).ceil() as u64;
    let half = steps / 2;
    let sq = cfg.dt.sqrt();
    let mut y = x;
    for i in 0..steps {
        let escape: f64 = dist.iter().zip(&rates).map(|(a, r)| (-r * a).exp()).sum();
        if escape < SAFE_ESCAPE {
            return (true, true);
        }
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        y += cfg.dt * mu + sq * Vec2::new(z1, z2);
        let next = [y.dot(&normals[0]), y.dot(&normals[1])];
        let mut alive = next.iter().all(|&b| b > 0.0);
        if alive {
            // Brownian bridge: chance of touching face i between the grid
            // times, given both endpoints inside.
            let survive: f64 = (0..2)
                .map(|k| 1.0 - (-2.0 * dist[k] * next[k] / cfg.dt).exp())
                .product();
            let draw: f64 = u.sample(&mut rng);
            alive = draw < survive;
        }
        if !alive {
            return (i >= half, false);
        }
        dist = next;
    }
    (true, true)
}

/// Monte Carlo estimate of the probability that free Brownian motion from
/// `-x` with drift `-mu` stays in `-S` up to `horizon`, for `xi = pi/m`.
pub fn survival_mc(
    g: &WedgeGeometry,
    d: &Drift,
    x: &Vec2,
    horizon: f64,
    cfg: &SurvivalConfig,
) -> Result<SurvivalEstimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(WedgeError::Domain(format!(
            "horizon = {horizon} must be positive"
        )));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || cfg.paths == 0 {
        return Err(WedgeError::Domain("dt and paths must be positive".into()));
    }
    DihedralGroup::for_angle(g.xi())?;
    check_point(g.xi(), x)?;
    let mu = d.mu();
    let outcomes: Vec<(bool, bool)> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| survival_path(g, mu, *x, horizon, cfg, i))
        .collect();
    let n = cfg.paths as f64;
    let alive = outcomes.iter().filter(|o| o.1).count() as f64;
    let alive_half = outcomes.iter().filter(|o| o.0).count() as f64;
    let p = alive / n;
    Ok(SurvivalEstimate {
        estimate: p,
        standard_error: (p * (1.0 - p) / n).sqrt(),
        half_horizon_estimate: alive_half / n,
        paths: cfg.paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCheck {
    /// Stationary mass of `{y in S: <y, n_i> <= <x, n_i>}`.
    pub lhs: f64,
    /// Survival probability from the group formula.
    pub rhs: f64,
    pub diff: f64,
    /// Change of `lhs` when the quadrature is halved.
    pub quadrature_error_estimate: f64,
}

/// Composite Gauss-Legendre rule on `[0, len]` with panels of length at
/// most `0.25` and `nodes` per panel.
fn segment_rule(len: f64, nodes: usize) -> Vec<(f64, f64)> {
    let panels = (len / 0.25).ceil().max(1.0) as usize;
    let h = len / panels as f64;
    (0..panels)
        .flat_map(|p| {
            AngularRule::uniform(p as f64 * h, (p + 1) as f64 * h, nodes)
                .iter()
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Integral of `p` over the parallelogram `{s w(0) + t w(xi)}` with
/// `s in [0, s_max]`, `t in [0, t_max]`.
fn parallelogram_integral(
    p: impl Fn(&Vec2) -> f64,
    g: &WedgeGeometry,
    s_max: f64,
    t_max: f64,
    nodes: usize,
) -> f64 {
    let (w0, wx) = (g.face_direction(Face::F1), g.face_direction(Face::F2));
    let rs = segment_rule(s_max, nodes);
    let rt = segment_rule(t_max, nodes);
    let mut total = 0.0;
    for &(s, ws) in &rs {
        for &(t, wt) in &rt {
            total += ws * wt * p(&(s * w0 + t * wx));
        }
    }
    total * g.xi().sin()
}

/// Compares the stationary mass of the region below `x` in both normal
/// coordinates with the survival probability from `-x`.
pub fn duality_check(
    g: &WedgeGeometry,
    d: &Drift,
    x: &Vec2,
    quad: QuadratureSpec,
) -> Result<DualityCheck> {
    let group = DihedralGroup::for_angle(g.xi())?;
    if !is_symmetric(&group, g) {
        return Err(WedgeError::Domain(
            "duality needs delta = epsilon = xi".into(),
        ));
    }
    check_point(g.xi(), x)?;
    let den = normalize(&density_expanded(g, d)?, quad)?;
    let sin = g.xi().sin();
    let s_max = x.dot(&g.n2()) / sin;
    let t_max = x.dot(&g.n1()) / sin;
    let lhs = parallelogram_integral(|y| den.eval(y), g, s_max, t_max, 16);
    let coarse = parallelogram_integral(|y| den.eval(y), g, s_max, t_max, 8);
    let rhs = biane_formula(&group, d, x)?;
    Ok(DualityCheck {
        lhs,
        rhs,
        diff: lhs - rhs,
        quadrature_error_estimate: (lhs - coarse).abs() + den.quadrature_error_estimate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LabelKind;

    fn reflections(group: &DihedralGroup) -> usize {
        group
            .elements()
            .iter()
            .filter(|w| w.kind() == LabelKind::Reflection)
            .count()
    }

    fn quarter_oracle(mu: Vec2, x: Vec2) -> f64 {
        (1.0 - (-2.0 * mu.x * x.x).exp()) * (1.0 - (-2.0 * mu.y * x.y).exp())
    }

    #[test]
    fn group_structure() {
        for m in 2..7 {
            let gr = DihedralGroup::new(m).unwrap();
            assert_eq!(gr.order(), 2 * m as usize);
            assert_eq!(gr.signs().iter().map(|&s| i32::from(s)).sum::<i32>(), 0);
            assert_eq!(reflections(&gr), m as usize);
            assert!(gr.is_closed());
        }
        assert!(DihedralGroup::new(1).is_err());
        assert_eq!(DihedralGroup::for_angle(PI / 3.0).unwrap().m(), 3);
        assert!(DihedralGroup::for_angle(1.0).is_err());
    }

    #[test]
    fn quarter_plane_formula() {
        let gr = DihedralGroup::new(2).unwrap();
        let mu = Vec2::new(1.0, 1.0);
        let d = Drift::new(mu).unwrap();
        let x = Vec2::new(1.0, 1.0);
        let v = biane_formula(&gr, &d, &x).unwrap();
        assert!((v - quarter_oracle(mu, x)).abs() < 1e-15);
        assert!((v - 0.747_645_072_415_508_8).abs() < 1e-12);
        let d2 = Drift::new(Vec2::new(0.7, 1.9)).unwrap();
        let x2 = Vec2::new(0.3, 2.1);
        let v2 = biane_formula(&gr, &d2, &x2).unwrap();
        assert!((v2 - quarter_oracle(d2.mu(), x2)).abs() < 1e-14);
        assert_eq!(biane_formula(&gr, &d, &Vec2::zeros()).unwrap().abs(), 0.0);
    }

    #[test]
    fn formula_rejects_bad_inputs() {
        let gr = DihedralGroup::new(3).unwrap();
        let d = Drift::new(Vec2::new(1.0, 0.2)).unwrap();
        assert!(matches!(
            biane_formula(&gr, &d, &Vec2::new(-1.0, 0.5)),
            Err(WedgeError::Domain(_))
        ));
        // Drift pointing out of the wedge: the alternating sum leaves [0, 1].
        let bad = Drift::new(Vec2::new(-1.0, -3.0)).unwrap();
        assert!(matches!(
            biane_formula(&gr, &bad, &Vec2::new(1.0, 0.3)),
            Err(WedgeError::Inconsistency(_))
        ));
    }

    #[test]
    fn group_density_term_counts() {
        for m in 2..6u32 {
            let gr = DihedralGroup::new(m).unwrap();
            let g = gr.geometry();
            let d = Drift::from_polar(1.0, 0.4 * g.xi()).unwrap();
            let s = density_from_group(&gr, &g, &d).unwrap();
            assert_eq!(s.len(), 2 * m as usize - 3);
        }
        let gr = DihedralGroup::new(3).unwrap();
        let other = WedgeGeometry::new(PI / 3.0, 1.2, PI / 3.0).unwrap();
        let d = Drift::from_polar(1.0, 0.5).unwrap();
        assert!(density_from_group(&gr, &other, &d).is_err());
    }

    #[test]
    fn group_density_matches_expansion() {
        for m in 3..6u32 {
            let gr = DihedralGroup::new(m).unwrap();
            let g = gr.geometry();
            let d = Drift::from_polar(1.3, 0.35 * g.xi()).unwrap();
            let a = density_from_group(&gr, &g, &d).unwrap();
            let b = density_expanded(&g, &d).unwrap();
            let ratios: Vec<f64> = (0..20)
                .map(|i| {
                    let th = g.xi() * (0.05 + 0.045 * i as f64);
                    let r = 0.1 + 0.2 * i as f64;
                    let x = r * crate::geometry::unit(th);
                    a.eval(&x) / b.eval(&x)
                })
                .collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((hi - lo) / hi.abs() < 1e-10, "m = {m}: {lo} {hi}");
        }
    }

    #[test]
    fn duality_quarter_plane() {
        let gr = DihedralGroup::new(2).unwrap();
        let g = gr.geometry();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let x = Vec2::new(1.0, 1.0);
        let c = duality_check(&g, &d, &x, QuadratureSpec::default()).unwrap();
        let oracle = quarter_oracle(d.mu(), x);
        assert!((c.lhs - oracle).abs() < 1e-8);
        assert!((c.rhs - oracle).abs() < 1e-12);
        assert!(c.diff.abs() < 1e-8);
    }

    #[test]
    fn duality_three_and_far_point() {
        let gr = DihedralGroup::new(3).unwrap();
        let g = gr.geometry();
        let d = Drift::from_polar(1.0, 0.45 * g.xi()).unwrap();
        for x in [
            Vec2::new(0.6, 0.2),
            Vec2::new(1.5, 0.9),
            Vec2::new(0.4, 0.05),
        ] {
            let c = duality_check(&g, &d, &x, QuadratureSpec::default()).unwrap();
            assert!(c.diff.abs() <= 1e-6 + c.quadrature_error_estimate, "{c:?}");
        }
        let far = 30.0 * crate::geometry::unit(0.5 * g.xi());
        let c = duality_check(&g, &d, &far, QuadratureSpec::default()).unwrap();
        assert!(
            (c.lhs - 1.0).abs() < 1e-5 && (c.rhs - 1.0).abs() < 1e-5,
            "{c:?}"
        );
        assert!(c.diff.abs() < 1e-10);
    }

    #[test]
    fn survival_edge_cases() {
        let gr = DihedralGroup::new(2).unwrap();
        let g = gr.geometry();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let cfg = SurvivalConfig {
            paths: 200,
            ..SurvivalConfig::default()
        };
        assert!(survival_mc(&g, &d, &Vec2::new(1.0, 1.0), 0.0, &cfg).is_err());
        let boundary = survival_mc(&g, &d, &Vec2::new(1.0, 0.0), 5.0, &cfg).unwrap();
        assert_eq!(boundary.estimate, 0.0);
        let far = survival_mc(&g, &d, &Vec2::new(20.0, 20.0), 5.0, &cfg).unwrap();
        assert_eq!(far.estimate, 1.0);
        let a = survival_mc(&g, &d, &Vec2::new(0.5, 0.5), 5.0, &cfg).unwrap();
        let b = survival_mc(&g, &d, &Vec2::new(0.5, 0.5), 5.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn survival_quarter_plane_mc() {
        let gr = DihedralGroup::new(2).unwrap();
        let g = gr.geometry();
        let d = Drift::new(Vec2::new(1.0, 1.0)).unwrap();
        let x = Vec2::new(1.0, 1.0);
        let cfg = SurvivalConfig {
            paths: 4_000,
            ..SurvivalConfig::default()
        };
        let e = survival_mc(&g, &d, &x, 50.0, &cfg).unwrap();
        let oracle = quarter_oracle(d.mu(), x);
        assert!(
            (e.estimate - oracle).abs() <= 3.0 * e.standard_error,
            "{e:?} vs {oracle}"
        );
    }
}
