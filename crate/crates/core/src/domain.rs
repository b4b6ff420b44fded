//! Truncated, uniformly discretized working domain Ω = ℝ^d ∩ B(0,R) and
//! discrete probability carriers over its nodes.

use crate::error::{Error, Result};
use serde::Serialize;

/// A centered uniform lattice on [−R, R]^d filtered to the ball ‖x‖ ≤ R.
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub d: usize,
    pub r: f64,
    pub nodes_per_axis: usize,
    /// Node coordinates, lexicographic in axis order, symmetric under negation.
    pub nodes: Vec<Vec<f64>>,
    /// Axis spacing h = 2R/(n−1).
    pub h: f64,
    /// Cell measure h^d.
    pub cell_measure: f64,
}

impl GridDomain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node nearest to x.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (i, node) in self.nodes.iter().enumerate() {
            let d2: f64 = node
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        best
    }
}

/// Truncation radius R̄(ε/12): the max-of-three-terms closed form.
///
/// R̄(z)² = max{ 625·d·log(4/z), 4·d·log(4L/m),
///              4d + 8√(d·log(1/z)) + 8·log(1/z) } / (mβ).
pub fn truncation_radius(epsilon: f64, d: usize, m: f64, beta: f64, l: f64) -> f64 {
    assert!(epsilon > 0.0 && epsilon < 12.0, "need 0 < epsilon < 12");
    assert!(m > 0.0 && beta > 0.0 && l > 0.0);
    let z = epsilon / 12.0;
    let df = d as f64;
    let t1 = 625.0 * df * (4.0 / z).ln();
    let t2 = 4.0 * df * (4.0 * l / m).ln();
    let lz = (1.0 / z).ln();
    let t3 = 4.0 * df + 8.0 * (df * lz).sqrt() + 8.0 * lz;
    (t1.max(t2).max(t3) / (m * beta)).sqrt()
}

pub fn build_grid(d: usize, r: f64, n: usize) -> Result<GridDomain> {
    if d == 0 || d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    assert!(n >= 2, "n >= 2 required");
    assert!(r > 0.0, "R > 0 required");
    let h = 2.0 * r / (n as f64 - 1.0);
    let axis: Vec<f64> = (0..n).map(|i| -r + h * i as f64).collect();
    let mut nodes = Vec::new();
    match d {
        1 => {
            for &x in &axis {
                nodes.push(vec![x]);
            }
        }
        2 => {
            for &x in &axis {
                for &y in &axis {
                    if (x * x + y * y).sqrt() <= r * (1.0 + 1e-12) {
                        nodes.push(vec![x, y]);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    assert!(nodes.len() >= 2);
    Ok(GridDomain {
        d,
        r,
        nodes_per_axis: n,
        nodes,
        h,
        cell_measure: h.powi(d as i32),
    })
}

/// Probability vector aligned with GridDomain.nodes.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteDistribution {
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(DiscreteDistribution { weights })
    }

    pub fn uniform(n: usize) -> Self {
        DiscreteDistribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Inverse-CDF sampler over the node indices of a DiscreteDistribution.
/// Build once, then draw in O(log n).
pub struct CumulativeSampler {
    cdf: Vec<f64>,
}

impl CumulativeSampler {
    pub fn new(dist: &DiscreteDistribution) -> Self {
        let mut cdf = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for w in &dist.weights {
            acc += w;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        CumulativeSampler { cdf }
    }

    pub fn draw<R: rand::Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1)
    }
}

/// Total variation distance ½ Σ |p − q|.
pub fn total_variation(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    0.5 * p
        .weights
        .iter()
        .zip(&q.weights)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Hellinger distance √(½ Σ (√p − √q)²).
pub fn hellinger(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum::<f64>())
    .sqrt()
}

/// Bhattacharyya coefficient Σ √(p·q).
pub fn bhattacharyya(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    p.weights
        .iter()
        .zip(&q.weights)
        .map(|(a, b)| (a * b).sqrt())
        .sum()
}

/// Normalize exp(log_density(x))·cell_measure over the nodes, with
/// max-subtraction so adding a constant to the log-density is a no-op.
pub fn discretize_density<F: Fn(&[f64]) -> f64>(
    domain: &GridDomain,
    log_density: F,
) -> Result<DiscreteDistribution> {
    let logs: Vec<f64> = domain.nodes.iter().map(|x| log_density(x)).collect();
    if logs.iter().any(|v| v.is_nan()) {
        return Err(Error::DegenerateDensity);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let weights: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
    DiscreteDistribution::new(weights)
}
