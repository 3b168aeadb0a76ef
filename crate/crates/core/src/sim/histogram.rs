use std::fmt::Write as _;

use super::SimResult;
use crate::density::NormalizedDensity;
use crate::geometry::Vec2;

/// Counts on a polar grid `[0, xi] x [0, r_max]`; points beyond `r_max`
/// go to a single overflow counter.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarHistogram {
    xi: f64,
    r_max: f64,
    n_theta: usize,
    n_r: usize,
    counts: Vec<u64>,
    overflow: u64,
}

impl PolarHistogram {
    pub fn new(xi: f64, r_max: f64, n_theta: usize, n_r: usize) -> Self {
        let (n_theta, n_r) = (n_theta.max(1), n_r.max(1));
        Self {
            xi,
            r_max,
            n_theta,
            n_r,
            counts: vec![0; n_theta * n_r],
            overflow: 0,
        }
    }

    /// Grid whose radial cutoff leaves less than `1e-4` of the mass of `den`
    /// outside.
    pub fn for_density(den: &NormalizedDensity, n_theta: usize, n_r: usize) -> Self {
        let r_max = den.radius_for_tail_mass(1e-4);
        Self::new(den.sum().geometry().xi(), r_max, n_theta, n_r)
    }

    pub fn empty_like(&self) -> Self {
        Self::new(self.xi, self.r_max, self.n_theta, self.n_r)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_theta, self.n_r)
    }

    pub fn count(&self, i_theta: usize, i_r: usize) -> u64 {
        self.counts[i_theta * self.n_r + i_r]
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn record(&mut self, x: &Vec2) {
        let r = x.norm();
        if r >= self.r_max {
            self.overflow += 1;
            return;
        }
        let theta = x.y.atan2(x.x).clamp(0.0, self.xi);
        let it = ((theta / self.xi * self.n_theta as f64) as usize).min(self.n_theta - 1);
        let ir = ((r / self.r_max * self.n_r as f64) as usize).min(self.n_r - 1);
        self.counts[it * self.n_r + ir] += 1;
    }

    /// Adds the counts of `other`, which must have the same grid.
    pub fn merge(&mut self, other: &PolarHistogram) {
        assert_eq!(self.shape(), other.shape(), "histogram grids differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
    }

    /// `(theta_lo, theta_hi, r_lo, r_hi)` of a bin.
    pub fn bin_edges(&self, i_theta: usize, i_r: usize) -> (f64, f64, f64, f64) {
        let dt = self.xi / self.n_theta as f64;
        let dr = self.r_max / self.n_r as f64;
        (
            i_theta as f64 * dt,
            (i_theta + 1) as f64 * dt,
            i_r as f64 * dr,
            (i_r + 1) as f64 * dr,
        )
    }

    /// Bin probabilities in row-major order followed by the overflow share.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .chain(std::iter::once(&self.overflow))
            .map(|&c| c as f64 / total)
            .collect()
    }

    /// CSV with columns `theta_lo, theta_hi, r_lo, r_hi, count,
    /// density_estimate`; the density is count over total visits and bin
    /// area.
    pub fn to_csv(&self) -> String {
        let total = self.total().max(1) as f64;
        let mut out = String::from("theta_lo,theta_hi,r_lo,r_hi,count,density_estimate\n");
        for it in 0..self.n_theta {
            for ir in 0..self.n_r {
                let (t0, t1, r0, r1) = self.bin_edges(it, ir);
                let area = 0.5 * (r1 * r1 - r0 * r0) * (t1 - t0);
                let c = self.count(it, ir);
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                    t0,
                    t1,
                    r0,
                    r1,
                    c,
                    c as f64 / total / area
                );
            }
        }
        out
    }
}

/// Per-bin (and overflow) standard errors of the pooled probabilities,
/// treating each batch as one observation.
pub(crate) fn bin_standard_errors(batches: &[&PolarHistogram]) -> Vec<f64> {
    let probs: Vec<Vec<f64>> = batches.iter().map(|b| b.probabilities()).collect();
    let n_bins = probs.first().map_or(0, |p| p.len());
    (0..n_bins)
        .map(|k| {
            let column: Vec<f64> = probs.iter().map(|p| p[k]).collect();
            super::standard_error(&column)
        })
        .collect()
}

/// Distances between a simulated histogram and the bin probabilities of a
/// closed-form density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// `sum |p_hat - p|` over bins and overflow.
    pub l1: f64,
    /// `sqrt(sum (p_hat - p)^2 / area)` over bins, an `L2` distance of
    /// densities.
    pub l2: f64,
    /// `sum` of per-bin standard errors: the size of `l1` expected from
    /// sampling noise.
    pub l1_noise: f64,
    /// Closed-form mass beyond the grid.
    pub tail_mass: f64,
}

pub fn compare(result: &SimResult, den: &NormalizedDensity) -> Comparison {
    let h = &result.histogram;
    let p_hat = h.probabilities();
    let (n_theta, n_r) = h.shape();
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut inside = 0.0;
    for it in 0..n_theta {
        for ir in 0..n_r {
            let (t0, t1, r0, r1) = h.bin_edges(it, ir);
            let p = den.cell_probability(t0, t1, r0, r1, 8);
            inside += p;
            let diff = p_hat[it * n_r + ir] - p;
            l1 += diff.abs();
            l2 += diff * diff / (0.5 * (r1 * r1 - r0 * r0) * (t1 - t0));
        }
    }
    let tail_mass = 1.0 - inside;
    l1 += (p_hat[n_theta * n_r] - tail_mass).abs();
    let refs: Vec<&PolarHistogram> = result.batches.iter().collect();
    let l1_noise = bin_standard_errors(&refs).iter().sum();
    Comparison {
        l1,
        l2: l2.sqrt(),
        l1_noise,
        tail_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_merge() {
        let mut h = PolarHistogram::new(1.0, 2.0, 4, 4);
        h.record(&Vec2::new(0.1, 0.01));
        h.record(&Vec2::new(1.9, 0.0));
        h.record(&Vec2::new(3.0, 0.1));
        assert_eq!(h.count(0, 0), 1);
        assert_eq!(h.count(0, 3), 1);
        assert_eq!(h.overflow(), 1);
        let mut g = h.empty_like();
        g.merge(&h);
        g.merge(&h);
        assert_eq!(g.total(), 6);
        let p = g.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let mut h = PolarHistogram::new(1.0, 2.0, 2, 3);
        h.record(&Vec2::new(0.5, 0.1));
        let csv = h.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "theta_lo,theta_hi,r_lo,r_hi,count,density_estimate"
        );
        assert_eq!(lines.len(), 7);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[4], "1");
        // density = 1 / (0.5 * (2/3)^2 * 0.5)
        let dens: f64 = first[5].parse().unwrap();
        assert!((dens - 9.0).abs() < 1e-12);
    }
}
