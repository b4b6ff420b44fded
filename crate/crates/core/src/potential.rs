//! Finite-sum target potentials f(x) = (1/N) Σ f_k(x), their gradients,
//! stochastic gradients, and numerical certification of the smoothness /
//! dissipativity constants on a working domain.

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One scalar field f_k with an analytic gradient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Component {
    /// f(x) = 0.
    Zero,
    /// f(x) = (w/2)·‖x − c‖².
    Quadratic { center: Vec<f64>, weight: f64 },
    /// f(x) = s·(‖x‖² − 1)²/4, the radial double well with wells on ‖x‖ = 1.
    DoubleWell { scale: f64 },
}

impl Component {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Quadratic { center, weight } => {
                let r2: f64 = x
                    .iter()
                    .zip(center.iter())
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum();
                0.5 * weight * r2
            }
            Component::DoubleWell { scale } => {
                let r2: f64 = x.iter().map(|xi| xi * xi).sum();
                scale * (r2 - 1.0) * (r2 - 1.0) / 4.0
            }
        }
    }

    /// Same field scaled by a positive factor (all variants are linear in
    /// their magnitude parameter).
    pub fn scaled(&self, factor: f64) -> Component {
        match self {
            Component::Zero => Component::Zero,
            Component::Quadratic { center, weight } => Component::Quadratic {
                center: center.clone(),
                weight: weight * factor,
            },
            Component::DoubleWell { scale } => Component::DoubleWell {
                scale: scale * factor,
            },
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Component::Zero => vec![0.0; x.len()],
            Component::Quadratic { center, weight } => x
                .iter()
                .zip(center.iter())
                .map(|(xi, ci)| weight * (xi - ci))
                .collect(),
            Component::DoubleWell { scale } => {
                let r2: f64 = x.iter().map(|xi| xi * xi).sum();
                x.iter().map(|xi| scale * (r2 - 1.0) * xi).collect()
            }
        }
    }
}

/// The finite-sum target f = (1/N) Σ_k f_k with inverse temperature β.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub components: Vec<Component>,
    pub d: usize,
    pub beta: f64,
}

impl PotentialSpec {
    pub fn new(components: Vec<Component>, d: usize, beta: f64) -> Self {
        assert!(!components.is_empty(), "N >= 1 required");
        assert!(d >= 1, "d >= 1 required");
        assert!(beta > 0.0, "beta > 0 required");
        PotentialSpec {
            components,
            d,
            beta,
        }
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

/// A uniform-without-replacement index subset of {0..N-1}.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    indices: Vec<usize>,
}

impl MiniBatch {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > n {
            return Err(Error::InvalidBatch(format!(
                "batch size {} outside 1..={}",
                indices.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::InvalidBatch(format!("index {} out of range", i)));
            }
            if seen[i] {
                return Err(Error::InvalidBatch(format!("duplicate index {}", i)));
            }
            seen[i] = true;
        }
        Ok(MiniBatch { indices })
    }

    /// Draw a size-B batch uniformly without replacement.
    pub fn sample<R: Rng>(n: usize, b: usize, rng: &mut R) -> Result<Self> {
        if b == 0 || b > n {
            return Err(Error::InvalidBatch(format!(
                "batch size {} outside 1..={}",
                b, n
            )));
        }
        // Partial Fisher-Yates over the index pool.
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..b {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        let mut indices = pool[..b].to_vec();
        indices.sort_unstable();
        Ok(MiniBatch { indices })
    }

    /// All C(N,B) batches in lexicographic order.
    pub fn enumerate(n: usize, b: usize) -> Result<Vec<Self>> {
        if b == 0 || b > n {
            return Err(Error::InvalidBatch(format!(
                "batch size {} outside 1..={}",
                b, n
            )));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..b).collect();
        loop {
            out.push(MiniBatch {
                indices: idx.clone(),
            });
            // next combination
            let mut i = b;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if idx[i] != i + n - b {
                    break;
                }
                if i == 0 {
                    return Ok(out);
                }
            }
            idx[i] += 1;
            for j in i + 1..b {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Count of size-B subsets of an N-set, saturating.
pub fn binomial(n: u64, b: u64) -> u64 {
    if b > n {
        return 0;
    }
    let b = b.min(n - b);
    let mut acc: u64 = 1;
    for i in 0..b {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

pub fn eval(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    let n = spec.n_components() as f64;
    let v: f64 = spec.components.iter().map(|c| c.eval(x)).sum::<f64>() / n;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteEnergy)
    }
}

pub fn grad(spec: &PotentialSpec, x: &[f64]) -> Result<Vec<f64>> {
    let n = spec.n_components() as f64;
    let mut g = vec![0.0; x.len()];
    for c in &spec.components {
        for (gi, ci) in g.iter_mut().zip(c.grad(x)) {
            *gi += ci;
        }
    }
    for gi in g.iter_mut() {
        *gi /= n;
        if !gi.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
    }
    Ok(g)
}

pub fn stochastic_grad(spec: &PotentialSpec, x: &[f64], batch: &MiniBatch) -> Result<Vec<f64>> {
    let n = spec.n_components();
    let mut g = vec![0.0; x.len()];
    for &k in batch.indices() {
        if k >= n {
            return Err(Error::InvalidBatch(format!("index {} out of range", k)));
        }
        for (gi, ci) in g.iter_mut().zip(spec.components[k].grad(x)) {
            *gi += ci;
        }
    }
    let b = batch.size() as f64;
    for gi in g.iter_mut() {
        *gi /= b;
        if !gi.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
    }
    Ok(g)
}

/// Claimed landscape constants, audited by `certify_constants`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AssumptionConstants {
    /// Per-component smoothness: ‖∇f_k(x) − ∇f_k(y)‖ ≤ L‖x − y‖.
    pub l: f64,
    /// Dissipativity slope: ⟨∇f(x), x⟩ ≥ m‖x‖² − b.
    pub m: f64,
    pub b: f64,
    /// Gradient-at-origin bound: ‖∇f_k(0)‖ ≤ G.
    pub g: f64,
    pub c_lsi: f64,
    pub rho: f64,
}

impl AssumptionConstants {
    pub fn validate(&self) -> Result<()> {
        if self.l > 0.0 && self.m > 0.0 && self.b >= 0.0 && self.g >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(
                "constants require L > 0, m > 0, b >= 0, G >= 0".into(),
            ))
        }
    }
}

/// Result of auditing the four assumption inequalities over a probe set.
#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    /// max over probe pairs and components of ‖∇f_k(x)−∇f_k(y)‖ / ‖x−y‖.
    pub max_gradient_ratio: f64,
    /// min over probes of ⟨∇f(x), x⟩ − m‖x‖² + b.
    pub min_dissipativity_slack: f64,
    /// min over probes of f(x) − m‖x‖²/4 − f(x*) + b/2.
    pub min_lower_bound_slack: f64,
    /// max over probes and components of ‖∇f_k(x)‖ − L‖x‖ − G.
    pub max_growth_excess: f64,
    pub probes_used: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Audit claimed (L, m, b, G) on the working domain with a deterministic
/// probe set: the grid nodes (strided to the budget) plus seeded uniform
/// points in the ball.
pub fn certify_constants(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    probes: usize,
) -> Result<CertificationReport> {
    assert!(probes >= 2, "need at least 2 probes");
    constants.validate()?;

    let mut points: Vec<Vec<f64>> = Vec::new();
    let stride = (domain.nodes.len() / probes).max(1);
    for node in domain.nodes.iter().step_by(stride) {
        points.push(node.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    while points.len() < 2 * probes {
        let cand: Vec<f64> = (0..spec.d)
            .map(|_| rng.gen_range(-domain.r..domain.r))
            .collect();
        if norm(&cand) <= domain.r {
            points.push(cand);
        }
    }

    let mut max_gradient_ratio: f64 = 0.0;
    let mut ratio_witness = points[0].clone();
    let pair_cap = 512.min(points.len());
    for i in 0..pair_cap {
        for j in (i + 1)..pair_cap {
            let dx: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a - b)
                .collect();
            let dn = norm(&dx);
            if dn < 1e-14 {
                continue;
            }
            for c in &spec.components {
                let dg: Vec<f64> = c
                    .grad(&points[i])
                    .iter()
                    .zip(c.grad(&points[j]))
                    .map(|(a, b)| a - b)
                    .collect();
                let ratio = norm(&dg) / dn;
                if ratio > max_gradient_ratio {
                    max_gradient_ratio = ratio;
                    ratio_witness = points[i].clone();
                }
            }
        }
    }
    if max_gradient_ratio > constants.l * (1.0 + 1e-9) {
        return Err(Error::AssumptionViolation {
            inequality: "smoothness: ‖∇f_k(x)−∇f_k(y)‖ ≤ L‖x−y‖".into(),
            witness: ratio_witness,
            slack: constants.l - max_gradient_ratio,
        });
    }

    let f_star = points
        .iter()
        .map(|p| eval(spec, p).unwrap_or(f64::INFINITY))
        .fold(f64::INFINITY, f64::min);

    let mut min_dissipativity_slack = f64::INFINITY;
    let mut min_lower_bound_slack = f64::INFINITY;
    let mut max_growth_excess = f64::NEG_INFINITY;
    let mut diss_witness = points[0].clone();
    let mut lower_witness = points[0].clone();
    let mut growth_witness = points[0].clone();
    for p in &points {
        let g = grad(spec, p)?;
        let x2: f64 = p.iter().map(|x| x * x).sum();
        let inner: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
        let diss = inner - constants.m * x2 + constants.b;
        if diss < min_dissipativity_slack {
            min_dissipativity_slack = diss;
            diss_witness = p.clone();
        }
        let lower = eval(spec, p)? - constants.m * x2 / 4.0 - f_star + constants.b / 2.0;
        if lower < min_lower_bound_slack {
            min_lower_bound_slack = lower;
            lower_witness = p.clone();
        }
        for c in &spec.components {
            let excess = norm(&c.grad(p)) - constants.l * x2.sqrt() - constants.g;
            if excess > max_growth_excess {
                max_growth_excess = excess;
                growth_witness = p.clone();
            }
        }
    }
    if min_dissipativity_slack < -1e-9 {
        return Err(Error::AssumptionViolation {
            inequality: "dissipativity: ⟨∇f(x),x⟩ ≥ m‖x‖² − b".into(),
            witness: diss_witness,
            slack: min_dissipativity_slack,
        });
    }
    if min_lower_bound_slack < -1e-9 {
        return Err(Error::AssumptionViolation {
            inequality: "lower bound: f(x) ≥ m‖x‖²/4 + f(x*) − b/2".into(),
            witness: lower_witness,
            slack: min_lower_bound_slack,
        });
    }
    if max_growth_excess > 1e-9 {
        return Err(Error::AssumptionViolation {
            inequality: "gradient growth: ‖∇f_k(x)‖ ≤ L‖x‖ + G".into(),
            witness: growth_witness,
            slack: -max_growth_excess,
        });
    }

    Ok(CertificationReport {
        max_gradient_ratio,
        min_dissipativity_slack,
        min_lower_bound_slack,
        max_growth_excess,
        probes_used: points.len(),
    })
}

/// Shipped catalog, selected by name from the config document.
pub fn catalog(name: &str, params: &[f64], d: usize, beta: f64) -> Result<PotentialSpec> {
    match name {
        "zero" => Ok(PotentialSpec::new(vec![Component::Zero], d, beta)),
        "quadratic" => {
            let w = params.first().copied().unwrap_or(1.0);
            Ok(PotentialSpec::new(
                vec![Component::Quadratic {
                    center: vec![0.0; d],
                    weight: w,
                }],
                d,
                beta,
            ))
        }
        "double_well" => {
            let s = params.first().copied().unwrap_or(1.0);
            Ok(PotentialSpec::new(
                vec![Component::DoubleWell { scale: s }],
                d,
                beta,
            ))
        }
        "mixture" => {
            // params: flat list of component centers (d values each),
            // optional trailing weight applies to all.
            if params.is_empty() || params.len() % d != 0 {
                return Err(Error::Config(
                    "mixture params must be a flat list of centers".into(),
                ));
            }
            let comps: Vec<Component> = params
                .chunks(d)
                .map(|c| Component::Quadratic {
                    center: c.to_vec(),
                    weight: 1.0,
                })
                .collect();
            Ok(PotentialSpec::new(comps, d, beta))
        }
        other => Err(Error::Config(format!("unknown potential '{}'", other))),
    }
}
