//! Classical Markov kernels on the grid — ULA, lazy ULA, MALA, and
//! per-minibatch stochastic ULA — plus continuous-space samplers and
//! mixing diagnostics (stationary law, conductance, detailed balance).

use crate::domain::{self, DiscreteDistribution, GridDomain};
use crate::error::{Error, Result};
use crate::potential::{self, AssumptionConstants, MiniBatch, PotentialSpec};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelKind {
    Ula,
    Mala,
    /// Stochastic ULA with the identity of its minibatch.
    Sula(Vec<usize>),
}

/// Row-stochastic transition matrix over grid nodes.
#[derive(Debug, Clone)]
pub struct MarkovKernel {
    pub matrix: DMatrix<f64>,
    pub lazy: bool,
    pub kind: KernelKind,
    pub eta: f64,
    pub beta: f64,
}

impl MarkovKernel {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Max deviation of any row sum from 1 plus any negative entry mass.
    pub fn stochasticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            let mut sum = 0.0;
            for j in 0..self.matrix.ncols() {
                let v = self.matrix[(i, j)];
                defect = defect.max(-v);
                sum += v;
            }
            defect = defect.max((sum - 1.0).abs());
        }
        defect
    }
}

#[derive(Debug, Clone)]
pub struct MixingDiagnostics {
    pub stationary: DiscreteDistribution,
    pub conductance: f64,
    pub db_residual: f64,
    /// 1 − λ₂ of the kernel; populated for reversible kernels only.
    pub spectral_gap: Option<f64>,
}

fn drift_rows<F>(domain: &GridDomain, eta: f64, beta: f64, grad_at: F) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    // Row x ∝ N(x − η∇f(x), (2η/β)I) evaluated at the grid nodes,
    // renormalized over the truncated grid. Log domain per row.
    let n = domain.len();
    let inv_two_var = beta / (4.0 * eta); // 1/(2·(2η/β))
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let x = &domain.nodes[i];
        let g = grad_at(x);
        let mean: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
        let mut logs = vec![0.0; n];
        let mut max = f64::NEG_INFINITY;
        for (j, y) in domain.nodes.iter().enumerate() {
            let d2: f64 = y
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            logs[j] = -d2 * inv_two_var;
            if logs[j] > max {
                max = logs[j];
            }
        }
        let mut sum = 0.0;
        for j in 0..n {
            let w = (logs[j] - max).exp();
            m[(i, j)] = w;
            sum += w;
        }
        for j in 0..n {
            m[(i, j)] /= sum;
        }
    }
    m
}

fn make_lazy(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    m *= 0.5;
    for i in 0..n {
        m[(i, i)] += 0.5;
    }
    m
}

/// Step-size admissibility from the Hellinger lemma: η ≤ d/(β(LR+G)²).
pub fn eta_admissible(
    constants: &AssumptionConstants,
    domain: &GridDomain,
    beta: f64,
    eta: f64,
) -> bool {
    let lrg = constants.l * domain.r + constants.g;
    eta <= domain.d as f64 / (beta * lrg * lrg)
}

pub fn ula_kernel(
    spec: &PotentialSpec,
    _constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
    lazy: bool,
) -> Result<MarkovKernel> {
    if eta <= 0.0 {
        return Err(Error::InvalidStep);
    }
    let m = drift_rows(domain, eta, spec.beta, |x| {
        potential::grad(spec, x).expect("finite gradient")
    });
    let m = if lazy { make_lazy(m) } else { m };
    Ok(MarkovKernel {
        matrix: m,
        lazy,
        kind: KernelKind::Ula,
        eta,
        beta: spec.beta,
    })
}

pub fn sula_kernel(
    spec: &PotentialSpec,
    _constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
    batch: &MiniBatch,
    lazy: bool,
) -> Result<MarkovKernel> {
    if eta <= 0.0 {
        return Err(Error::InvalidStep);
    }
    for &k in batch.indices() {
        if k >= spec.n_components() {
            return Err(Error::InvalidBatch(format!("index {} out of range", k)));
        }
    }
    let m = drift_rows(domain, eta, spec.beta, |x| {
        potential::stochastic_grad(spec, x, batch).expect("finite gradient")
    });
    let m = if lazy { make_lazy(m) } else { m };
    Ok(MarkovKernel {
        matrix: m,
        lazy,
        kind: KernelKind::Sula(batch.indices().to_vec()),
        eta,
        beta: spec.beta,
    })
}

/// SULA kernel for a tempered stage target ∝ exp(−βf − w·β‖x‖²/2): the f
/// gradient is a minibatch estimate, the Gaussian confinement gradient w·x
/// is analytic and added in full.
pub fn sula_kernel_tempered(
    spec: &PotentialSpec,
    _constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
    batch: &MiniBatch,
    confinement_weight: f64,
    lazy: bool,
) -> Result<MarkovKernel> {
    if eta <= 0.0 {
        return Err(Error::InvalidStep);
    }
    for &k in batch.indices() {
        if k >= spec.n_components() {
            return Err(Error::InvalidBatch(format!("index {} out of range", k)));
        }
    }
    let w = confinement_weight;
    let m = drift_rows(domain, eta, spec.beta, |x| {
        let mut g = potential::stochastic_grad(spec, x, batch).expect("finite gradient");
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += w * xi;
        }
        g
    });
    let m = if lazy { make_lazy(m) } else { m };
    Ok(MarkovKernel {
        matrix: m,
        lazy,
        kind: KernelKind::Sula(batch.indices().to_vec()),
        eta,
        beta: spec.beta,
    })
}

/// Grid Gibbs law π ∝ e^{−βf} on the domain nodes.
pub fn gibbs_law(spec: &PotentialSpec, domain: &GridDomain) -> Result<DiscreteDistribution> {
    let beta = spec.beta;
    domain::discretize_density(domain, |x| -beta * potential::eval(spec, x).unwrap())
}

/// Metropolis-adjusted kernel over the lazy ULA proposal. Detailed balance
/// holds exactly on the grid because the acceptance ratio uses the
/// grid-renormalized proposal and grid-exact target weights: the
/// off-diagonal flow is the symmetric min(π_x q*_xy, π_y q*_yx).
pub fn mala_kernel(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
) -> Result<MarkovKernel> {
    let proposal = ula_kernel(spec, constants, domain, eta, true)?;
    let pi = gibbs_law(spec, domain)?;
    let n = domain.len();
    let q = &proposal.matrix;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut out_mass = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let flow = (pi.weights[i] * q[(i, j)]).min(pi.weights[j] * q[(j, i)]);
            let p = flow / pi.weights[i];
            m[(i, j)] = p;
            out_mass += p;
        }
        m[(i, i)] = 1.0 - out_mass;
    }
    Ok(MarkovKernel {
        matrix: m,
        lazy: true,
        kind: KernelKind::Mala,
        eta,
        beta: spec.beta,
    })
}

/// Left fixed point by power iteration to L1 residual ≤ 1e-12.
pub fn stationary(kernel: &MarkovKernel) -> Result<DiscreteDistribution> {
    let n = kernel.len();
    let p = &kernel.matrix;
    let mut v = vec![1.0 / n as f64; n];
    let cap = 1_000_000;
    for _ in 0..cap {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                next[j] += vi * p[(i, j)];
            }
        }
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        let residual: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if residual <= 1e-13 {
            return DiscreteDistribution::new(v);
        }
    }
    Err(Error::StationaryNotConverged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductanceMode {
    Exact,
    Sweep,
}

/// Conductance φ = min over S with π(S) ≤ ½ of Q(S, Sᶜ)/π(S),
/// Q(S,Sᶜ) = Σ_{x∈S, y∉S} π_x p_xy. Exact mode enumerates all subsets
/// (|nodes| ≤ 14); sweep mode restricts to sublevel sets of π-sorted
/// nodes and is an upper bound.
pub fn conductance(
    kernel: &MarkovKernel,
    pi: &DiscreteDistribution,
    mode: ConductanceMode,
) -> Result<f64> {
    let n = kernel.len();
    let p = &kernel.matrix;
    let ratio = |in_s: &dyn Fn(usize) -> bool| -> Option<f64> {
        let mut mass = 0.0;
        let mut flow = 0.0;
        for x in 0..n {
            if !in_s(x) {
                continue;
            }
            mass += pi.weights[x];
            for y in 0..n {
                if !in_s(y) {
                    flow += pi.weights[x] * p[(x, y)];
                }
            }
        }
        if mass > 0.0 && mass <= 0.5 + 1e-12 {
            Some(flow / mass)
        } else {
            None
        }
    };
    match mode {
        ConductanceMode::Exact => {
            if n > 14 {
                return Err(Error::TooLargeForExact(n));
            }
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << n) - 1 {
                if let Some(v) = ratio(&|x| mask >> x & 1 == 1) {
                    best = best.min(v);
                }
            }
            Ok(if best.is_finite() { best } else { 0.0 })
        }
        ConductanceMode::Sweep => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| pi.weights[a].total_cmp(&pi.weights[b]));
            let mut best = f64::INFINITY;
            for k in 1..n {
                let prefix: Vec<bool> = {
                    let mut f = vec![false; n];
                    for &x in &order[..k] {
                        f[x] = true;
                    }
                    f
                };
                if let Some(v) = ratio(&|x| prefix[x]) {
                    best = best.min(v);
                }
                if let Some(v) = ratio(&|x| !prefix[x]) {
                    best = best.min(v);
                }
            }
            Ok(if best.is_finite() { best } else { 0.0 })
        }
    }
}

/// max over pairs of |π_x p_xy − π_y p_yx|.
pub fn detailed_balance_residual(kernel: &MarkovKernel, pi: &DiscreteDistribution) -> f64 {
    let n = kernel.len();
    let p = &kernel.matrix;
    let mut r: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            r = r.max((pi.weights[x] * p[(x, y)] - pi.weights[y] * p[(y, x)]).abs());
        }
    }
    r
}

/// Spectral gap 1 − λ₂ of a reversible kernel via the symmetrized matrix
/// A_xy = √(π_x/π_y)·p_xy.
pub fn spectral_gap(kernel: &MarkovKernel, pi: &DiscreteDistribution) -> f64 {
    let n = kernel.len();
    let mut a = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            a[(x, y)] = (pi.weights[x] / pi.weights[y]).sqrt() * kernel.matrix[(x, y)];
        }
    }
    let sym = (&a + a.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    1.0 - eig[1]
}

pub fn diagnostics(kernel: &MarkovKernel, mode: ConductanceMode) -> Result<MixingDiagnostics> {
    let pi = stationary(kernel)?;
    let db = detailed_balance_residual(kernel, &pi);
    let phi = conductance(kernel, &pi, mode)?;
    let gap = if db <= 1e-8 {
        Some(spectral_gap(kernel, &pi))
    } else {
        None
    };
    Ok(MixingDiagnostics {
        stationary: pi,
        conductance: phi,
        db_residual: db,
        spectral_gap: gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Ula,
    Mala,
    Sgld,
}

/// One recorded step of a continuous-space trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub x: Vec<f64>,
    /// MALA only; true for ULA/SGLD steps.
    pub accepted: bool,
}

/// Continuous-space Langevin trajectory: x' = x − η∇f(x) + √(2η/β)z,
/// with MALA adding the Metropolis filter and SGLD drawing a fresh
/// uniform no-replacement batch each step. Deterministic given seed.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    sampler: Sampler,
    spec: &PotentialSpec,
    _constants: &AssumptionConstants,
    r_bound: f64,
    x0: &[f64],
    eta: f64,
    steps: usize,
    seed: u64,
    batch_size: usize,
) -> Result<Vec<TrajectoryStep>> {
    assert!(steps >= 1);
    if eta <= 0.0 {
        return Err(Error::InvalidStep);
    }
    let beta = spec.beta;
    let d = spec.d;
    let noise_scale = (2.0 * eta / beta).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);

    // log of the continuum proposal density q(x → y), up to the constant
    // normalizer which cancels in the MALA ratio.
    let log_q = |from: &[f64], to: &[f64], g: &[f64]| -> f64 {
        let mut d2 = 0.0;
        for i in 0..d {
            let diff = to[i] - (from[i] - eta * g[i]);
            d2 += diff * diff;
        }
        -d2 * beta / (4.0 * eta)
    };

    for _ in 0..steps {
        let g = match sampler {
            Sampler::Sgld => {
                let batch = MiniBatch::sample(spec.n_components(), batch_size, &mut rng)?;
                potential::stochastic_grad(spec, &x, &batch)?
            }
            _ => potential::grad(spec, &x)?,
        };
        let mut y = vec![0.0; d];
        for i in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[i] = x[i] - eta * g[i] + noise_scale * z;
        }
        let accepted = match sampler {
            Sampler::Mala => {
                let gy = potential::grad(spec, &y)?;
                let log_ratio = -beta * potential::eval(spec, &y)? + log_q(&y, &x, &gy)
                    - (-beta * potential::eval(spec, &x)? + log_q(&x, &y, &g));
                let u: f64 = rng.gen();
                u.ln() <= log_ratio
            }
            _ => true,
        };
        if accepted {
            x = y;
        }
        let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 10.0 * r_bound {
            return Err(Error::DivergenceDetected);
        }
        out.push(TrajectoryStep {
            x: x.clone(),
            accepted,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_grid;
    use crate::potential::catalog;
    use approx::assert_relative_eq;

    fn consts() -> AssumptionConstants {
        AssumptionConstants {
            l: 1.0,
            m: 1.0,
            b: 0.0,
            g: 0.0,
            c_lsi: 1.0,
            rho: 0.5,
        }
    }

    fn two_state_kernel(a: f64, b: f64) -> MarkovKernel {
        MarkovKernel {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0 - a, a, b, 1.0 - b]),
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        }
    }

    #[test]
    fn single_node_kernel_is_identity() {
        let spec = catalog("quadratic", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 0.5, 2).unwrap();
        // smallest legal grid; check each row is a probability vector
        let k = ula_kernel(&spec, &consts(), &g, 0.1, false).unwrap();
        assert!(k.stochasticity_defect() < 1e-12);
    }

    #[test]
    fn zero_potential_symmetric_grid() {
        let spec = catalog("zero", &[], 1, 1.0).unwrap();
        let g = build_grid(1, 1.0, 2).unwrap();
        let k = ula_kernel(&spec, &consts(), &g, 0.1, false).unwrap();
        assert_relative_eq!(k.matrix[(0, 1)], k.matrix[(1, 0)], epsilon = 1e-14);
    }

    #[test]
    fn ula_row_gaussian_oracle() {
        // f=½x², nodes {−1,0,1}, η=0.1, β=1: row at x=1 ∝ N(0.9, 0.2).
        let spec = catalog("quadratic", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.0, 3).unwrap();
        let k = ula_kernel(&spec, &consts(), &g, 0.1, false).unwrap();
        let dens = |y: f64| (-(y - 0.9f64).powi(2) / (2.0 * 0.2)).exp();
        let (w0, w1, w2) = (dens(-1.0), dens(0.0), dens(1.0));
        let z = w0 + w1 + w2;
        assert_relative_eq!(k.matrix[(2, 0)], w0 / z, epsilon = 1e-12);
        assert_relative_eq!(k.matrix[(2, 1)], w1 / z, epsilon = 1e-12);
        assert_relative_eq!(k.matrix[(2, 2)], w2 / z, epsilon = 1e-12);
    }

    #[test]
    fn lazy_diagonal_floor() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = ula_kernel(&spec, &consts(), &g, 0.05, true).unwrap();
        for i in 0..k.len() {
            assert!(k.matrix[(i, i)] >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn mala_constant_potential_equals_lazy_ula() {
        // Uniform target + genuinely symmetric proposal → acceptance ≡ 1.
        // The proposal is only exactly symmetric when every row shares the
        // same truncation renormalizer, as on the 2-node grid; larger grids
        // break q_xy = q_yx at the boundary.
        let spec = catalog("zero", &[], 1, 1.0).unwrap();
        let g = build_grid(1, 1.0, 2).unwrap();
        let lazy = ula_kernel(&spec, &consts(), &g, 0.1, true).unwrap();
        let mala = mala_kernel(&spec, &consts(), &g, 0.1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(mala.matrix[(i, j)], lazy.matrix[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mala_detailed_balance_exact() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let pi = gibbs_law(&spec, &g).unwrap();
        assert!(detailed_balance_residual(&k, &pi) <= 1e-14);
    }

    #[test]
    fn mala_stationary_is_gibbs() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let st = stationary(&k).unwrap();
        let pi = gibbs_law(&spec, &g).unwrap();
        assert!(domain::total_variation(&st, &pi) <= 1e-10);
    }

    #[test]
    fn sula_full_batch_matches_ula() {
        let spec = catalog("mixture", &[-1.0, 0.5, 1.5, 2.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 7).unwrap();
        let batch = MiniBatch::new(vec![0, 1, 2, 3], 4).unwrap();
        let u = ula_kernel(&spec, &consts(), &g, 0.05, false).unwrap();
        let s = sula_kernel(&spec, &consts(), &g, 0.05, &batch, false).unwrap();
        assert_relative_eq!(
            (u.matrix.clone() - s.matrix.clone()).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sula_batches_average_with_jensen_gap() {
        let spec = catalog("mixture", &[-1.0, 0.5, 1.5, 2.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 7).unwrap();
        let batches = MiniBatch::enumerate(4, 2).unwrap();
        let mut mean = DMatrix::zeros(7, 7);
        for b in &batches {
            mean += sula_kernel(&spec, &consts(), &g, 0.05, b, false)
                .unwrap()
                .matrix;
        }
        mean /= 6.0;
        let full = ula_kernel(&spec, &consts(), &g, 0.05, false).unwrap();
        // entrywise mean differs from the full-gradient kernel (Jensen gap)
        assert!((mean.clone() - full.matrix.clone()).norm() > 1e-6);
        // but each row's destination mean matches the full-gradient drift
        // up to boundary truncation; check an interior row.
        let row = 3;
        let x = g.nodes[row][0];
        let drift = x - 0.05 * potential::grad(&spec, &[x]).unwrap()[0];
        let mean_dest: f64 = (0..7).map(|j| mean[(row, j)] * g.nodes[j][0]).sum();
        assert_relative_eq!(mean_dest, drift, epsilon = 0.05);
    }

    #[test]
    fn stationary_doubly_stochastic_uniform() {
        let k = two_state_kernel(0.3, 0.3);
        let st = stationary(&k).unwrap();
        assert_relative_eq!(st.weights[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn stationary_two_state_oracle() {
        let k = two_state_kernel(0.3, 0.1);
        let st = stationary(&k).unwrap();
        // balance: π₀·0.3 = π₁·0.1 → π = (0.25, 0.75)
        assert_relative_eq!(st.weights[0], 0.25, epsilon = 1e-10);
        assert_relative_eq!(st.weights[1], 0.75, epsilon = 1e-10);
    }

    #[test]
    fn conductance_two_state() {
        // φ restricted to π(S) ≤ ½ leaves only S = {0}: (0.25·0.3)/0.25 = 0.3.
        let k = two_state_kernel(0.3, 0.1);
        let pi = stationary(&k).unwrap();
        let phi = conductance(&k, &pi, ConductanceMode::Exact).unwrap();
        assert_relative_eq!(phi, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn conductance_complete_uniform() {
        let n = 4;
        let k = MarkovKernel {
            matrix: DMatrix::from_element(n, n, 1.0 / n as f64),
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let pi = DiscreteDistribution::uniform(n);
        let phi = conductance(&k, &pi, ConductanceMode::Exact).unwrap();
        assert_relative_eq!(phi, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn conductance_disconnected_blocks() {
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5, 0.5, 0.0, 0.0, //
                0.5, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.5, //
                0.0, 0.0, 0.5, 0.5,
            ],
        );
        let k = MarkovKernel {
            matrix: m,
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let pi = DiscreteDistribution::uniform(4);
        let phi = conductance(&k, &pi, ConductanceMode::Exact).unwrap();
        assert_relative_eq!(phi, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sweep_upper_bounds_exact() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        for &n in &[5usize, 9, 12] {
            let g = build_grid(1, 1.5, n).unwrap();
            let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
            let pi = stationary(&k).unwrap();
            let exact = conductance(&k, &pi, ConductanceMode::Exact).unwrap();
            let sweep = conductance(&k, &pi, ConductanceMode::Sweep).unwrap();
            assert!(sweep >= exact - 1e-12, "n={}: {} < {}", n, sweep, exact);
        }
    }

    #[test]
    fn db_residual_positive_for_ula() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = ula_kernel(&spec, &consts(), &g, 0.05, false).unwrap();
        let pi = stationary(&k).unwrap();
        assert!(detailed_balance_residual(&k, &pi) > 1e-8);
    }

    #[test]
    fn simulate_tiny_step_stays_put() {
        let spec = catalog("quadratic", &[1.0], 1, 1.0).unwrap();
        let traj = simulate(
            Sampler::Ula,
            &spec,
            &consts(),
            3.0,
            &[0.5],
            1e-8,
            10,
            7,
            1,
        )
        .unwrap();
        for step in &traj {
            assert!((step.x[0] - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn simulate_ar1_variance() {
        // ULA on f=½x², β=1 is an AR(1): stationary variance 2η/(1−(1−η)²);
        // at η=0.1 this is 0.2/0.19 ≈ 1.0526.
        let spec = catalog("quadratic", &[1.0], 1, 1.0).unwrap();
        let traj = simulate(
            Sampler::Ula,
            &spec,
            &consts(),
            6.0,
            &[0.0],
            0.1,
            100_000,
            123,
            1,
        )
        .unwrap();
        let xs: Vec<f64> = traj.iter().skip(1000).map(|s| s.x[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert_relative_eq!(var, 1.0526, epsilon = 0.05);
    }

    #[test]
    fn simulate_mala_matches_gibbs_histogram() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 2.0, 17).unwrap();
        let traj = simulate(
            Sampler::Mala,
            &spec,
            &consts(),
            3.0,
            &[1.0],
            0.2,
            1_000_000,
            99,
            1,
        )
        .unwrap();
        let mut hist = vec![0.0; g.len()];
        for step in &traj {
            hist[g.nearest_node(&step.x)] += 1.0;
        }
        let emp = DiscreteDistribution::new(hist).unwrap();
        let pi = gibbs_law(&spec, &g).unwrap();
        assert!(domain::total_variation(&emp, &pi) <= 0.05);
    }
}
