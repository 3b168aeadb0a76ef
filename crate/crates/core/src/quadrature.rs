//! Angular quadrature over `[0, xi]` for integrals of exponentials over
//! wedge-shaped regions. Radial integrals are always done in closed form;
//! only the angle is discretized.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Fractions of the angular interval at which panels break. The grading
/// toward both endpoints resolves integrands that are sharply peaked at a
/// face, e.g. Laplace transforms with a large component normal to the face.
const GRADING: [f64; 4] = [0.0, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    /// Total number of angular Gauss-Legendre nodes.
    pub angular_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { angular_nodes: 256 }
    }
}

impl QuadratureSpec {
    pub fn new(angular_nodes: usize) -> Self {
        Self { angular_nodes }
    }

    /// The coarser rule used for the error estimate.
    pub fn halved(&self) -> Self {
        Self {
            angular_nodes: (self.angular_nodes / 2).max(1),
        }
    }
}

/// Nodes and weights of a graded composite Gauss-Legendre rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct AngularRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularRule {
    pub fn new(a: f64, b: f64, spec: QuadratureSpec) -> Self {
        let mut breaks: Vec<f64> = GRADING.to_vec();
        breaks.push(0.5);
        breaks.extend(GRADING.iter().rev().map(|f| 1.0 - f));
        let panels = breaks.len() - 1;
        let per_panel = spec.angular_nodes.div_ceil(panels).max(1);
        let rule = GaussLegendre::new(NonZeroUsize::new(per_panel).expect("nonzero"));

        let mut nodes = Vec::with_capacity(per_panel * panels);
        let mut weights = Vec::with_capacity(per_panel * panels);
        for pair in breaks.windows(2) {
            let lo = a + (b - a) * pair[0];
            let hi = a + (b - a) * pair[1];
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.iter() {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    /// Plain Gauss-Legendre rule on `[a, b]` without grading; suited to short
    /// subintervals such as histogram bins.
    pub fn uniform(a: f64, b: f64, n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let (nodes, weights) = rule.iter().map(|(x, w)| (mid + half * x, half * w)).unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// `int_0^inf e^{-beta r} r dr = 1 / beta^2` for `beta > 0`.
pub fn radial_moment(beta: f64) -> f64 {
    1.0 / (beta * beta)
}

/// `int_r^inf e^{-beta s} s ds = e^{-beta r} (1 + beta r) / beta^2`.
pub fn radial_tail(beta: f64, r: f64) -> f64 {
    let br = beta * r;
    (-br).exp() * (1.0 + br) / (beta * beta)
}

/// `int_{r0}^{r1} e^{-beta s} s ds`.
pub fn radial_segment(beta: f64, r0: f64, r1: f64) -> f64 {
    radial_tail(beta, r0) - radial_tail(beta, r1)
}
