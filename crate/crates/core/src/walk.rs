//! Szegedy walk quantization of Markov kernels: discriminants, walk
//! unitaries on the product space, phase gaps, coherent states, spectral
//! projectors, operator distances, and stochastic (per-batch) walk families.
//!
//! The walk U = S(2Σ_x|ψ_x⟩⟨ψ_x| − I) with |ψ_x⟩ = Σ_y √p_xy |x⟩|y⟩ is real
//! orthogonal for any row-stochastic kernel. Its dynamics on states of
//! interest live in the active subspace span{ψ_x} + S·span{ψ_x} (dimension
//! ≤ 2n); the orthogonal complement is U-invariant with inert phases {0, π}
//! that carry no kernel information, so spectra and projectors are reported
//! on the active subspace.

use crate::chains::{self, KernelKind, MarkovKernel};
use crate::domain::{DiscreteDistribution, GridDomain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::potential::{self, AssumptionConstants, MiniBatch, PotentialSpec};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMode {
    Full,
    DiscriminantOnly,
}

/// Unit-norm amplitude vector on the grid (length n) or the walk's product
/// space (length n²).
#[derive(Debug, Clone)]
pub struct StateVector {
    pub amplitudes: DVector<f64>,
}

impl StateVector {
    pub fn new(amplitudes: DVector<f64>) -> Self {
        let v = StateVector { amplitudes };
        debug_assert!((v.amplitudes.norm() - 1.0).abs() < 1e-10);
        v
    }
}

#[derive(Debug, Clone)]
pub struct WalkOperator {
    pub mode: WalkMode,
    pub kernel_kind: KernelKind,
    pub n_nodes: usize,
    pub eta: f64,
    pub beta: f64,
    /// Entrywise square root of the kernel matrix; row x holds the |x⟩-block
    /// of |ψ_x⟩.
    pub sqrt_p: DMatrix<f64>,
    /// Discriminant D_xy = √(p_xy p_yx).
    pub d_mat: DMatrix<f64>,
    /// Full mode: the walk unitary on the n²-dimensional product space.
    pub u: Option<DMatrix<f64>>,
    /// Full mode: orthonormal basis of the active subspace (n² × r).
    pub active_basis: Option<DMatrix<f64>>,
    /// Full mode: restriction W = BᵀUB (r × r, orthogonal).
    pub w_active: Option<DMatrix<f64>>,
    /// Sorted eigenphases. Full mode: signed phases of W on the active
    /// subspace; discriminant mode: arccos of D's singular values.
    pub eigenphases: Vec<f64>,
}

/// D_xy = √(p_xy p_yx).
pub fn discriminant(kernel: &MarkovKernel) -> DMatrix<f64> {
    let n = kernel.len();
    let p = &kernel.matrix;
    DMatrix::from_fn(n, n, |x, y| (p[(x, y)] * p[(y, x)]).sqrt())
}

fn swap_in_place(v: &mut DVector<f64>, n: usize) {
    for x in 0..n {
        for y in (x + 1)..n {
            v.swap_rows(x * n + y, y * n + x);
        }
    }
}

/// Apply U = S(2ΨΨᵀ − I) in O(n²) using the block structure of Ψ.
pub fn apply_u(sqrt_p: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = sqrt_p.nrows();
    let mut out = DVector::zeros(n * n);
    for x in 0..n {
        let block = v.rows(x * n, n);
        let c: f64 = (0..n).map(|y| sqrt_p[(x, y)] * block[y]).sum();
        for y in 0..n {
            out[x * n + y] = 2.0 * c * sqrt_p[(x, y)] - block[y];
        }
    }
    swap_in_place(&mut out, n);
    out
}

/// Signed phases of an orthogonal matrix from its symmetric part: each
/// eigenvalue cos θ ∈ (−1, 1) of (W+Wᵀ)/2 appears with even multiplicity
/// and contributes a ±θ pair; eigenvalues ±1 contribute phases 0 / π.
fn signed_phases(w: &DMatrix<f64>) -> Vec<f64> {
    let sym = (w + w.transpose()) * 0.5;
    let (vals, _) = linalg::symmetric_eigen_desc(&sym);
    let mut phases = Vec::new();
    let mut pending: Vec<f64> = Vec::new();
    for &c in &vals {
        let c = c.clamp(-1.0, 1.0);
        if 1.0 - c.abs() < 1e-12 {
            phases.push(c.acos()); // 0 or π
        } else {
            pending.push(c.acos());
        }
    }
    // interior eigenvalues arrive sorted; equal cosines are adjacent
    let mut i = 0;
    while i + 1 < pending.len() {
        let theta = 0.5 * (pending[i] + pending[i + 1]);
        phases.push(theta);
        phases.push(-theta);
        i += 2;
    }
    if i < pending.len() {
        phases.push(pending[i]);
    }
    phases.sort_by(f64::total_cmp);
    phases
}

pub fn build_walk(kernel: &MarkovKernel, mode: WalkMode) -> Result<WalkOperator> {
    let n = kernel.len();
    let sqrt_p = kernel.matrix.map(f64::sqrt);
    let d_mat = discriminant(kernel);
    match mode {
        WalkMode::DiscriminantOnly => {
            let phases: Vec<f64> = {
                let mut p: Vec<f64> = linalg::singular_values_desc(&d_mat)
                    .iter()
                    .map(|s| s.clamp(0.0, 1.0).acos())
                    .collect();
                p.sort_by(f64::total_cmp);
                p
            };
            Ok(WalkOperator {
                mode,
                kernel_kind: kernel.kind.clone(),
                n_nodes: n,
                eta: kernel.eta,
                beta: kernel.beta,
                sqrt_p,
                d_mat,
                u: None,
                active_basis: None,
                w_active: None,
                eigenphases: phases,
            })
        }
        WalkMode::Full => {
            if n > 40 {
                return Err(Error::TooLargeForFull(n));
            }
            // active subspace: ψ_x columns then Sψ_x columns
            let mut cols: Vec<DVector<f64>> = Vec::with_capacity(2 * n);
            for x in 0..n {
                let mut psi = DVector::zeros(n * n);
                for y in 0..n {
                    psi[x * n + y] = sqrt_p[(x, y)];
                }
                cols.push(psi);
            }
            for x in 0..n {
                let mut s_psi = cols[x].clone();
                swap_in_place(&mut s_psi, n);
                cols.push(s_psi);
            }
            let basis = linalg::orthonormalize(&cols, 1e-9);
            let r = basis.ncols();
            let mut ub = DMatrix::zeros(n * n, r);
            for k in 0..r {
                let col: DVector<f64> = basis.column(k).into();
                ub.set_column(k, &apply_u(&sqrt_p, &col));
            }
            let w = basis.transpose() * &ub;
            let phases = signed_phases(&w);
            // materialize U (n ≤ 40 keeps this at ≤ 1600²)
            let mut u = DMatrix::zeros(n * n, n * n);
            for k in 0..n * n {
                let mut e = DVector::zeros(n * n);
                e[k] = 1.0;
                u.set_column(k, &apply_u(&sqrt_p, &e));
            }
            Ok(WalkOperator {
                mode,
                kernel_kind: kernel.kind.clone(),
                n_nodes: n,
                eta: kernel.eta,
                beta: kernel.beta,
                sqrt_p,
                d_mat,
                u: Some(u),
                active_basis: Some(basis),
                w_active: Some(w),
                eigenphases: phases,
            })
        }
    }
}

/// Phase gap Δ = 2·arccos λ₁, λ₁ the second-largest singular value of D.
pub fn phase_gap(walk: &WalkOperator) -> Result<f64> {
    let sv = linalg::singular_values_desc(&walk.d_mat);
    if sv.len() < 2 {
        return Ok(std::f64::consts::PI); // single node: no second branch
    }
    let lambda1 = sv[1].clamp(0.0, 1.0);
    if 1.0 - lambda1 <= 1e-12 {
        return Err(Error::ZeroPhaseGap);
    }
    Ok(2.0 * lambda1.acos())
}

/// Coherent state |μ⟩ on the grid: amplitudes √μ(x).
pub fn coherent_state(dist: &DiscreteDistribution) -> StateVector {
    StateVector::new(DVector::from_iterator(
        dist.len(),
        dist.weights.iter().map(|w| w.sqrt()),
    ))
}

/// Lift a grid distribution into the product space: Σ_x √μ(x) |ψ_x⟩.
/// For a reversible kernel with stationary law μ this is the walk's unique
/// active phase-0 eigenvector.
pub fn lift_distribution(walk: &WalkOperator, dist: &DiscreteDistribution) -> DVector<f64> {
    let n = walk.n_nodes;
    let mut v = DVector::zeros(n * n);
    for x in 0..n {
        let a = dist.weights[x].sqrt();
        for y in 0..n {
            v[x * n + y] = a * walk.sqrt_p[(x, y)];
        }
    }
    v
}

/// Spectral-norm distance between two full-mode walks on the same grid.
pub fn op_distance(a: &WalkOperator, b: &WalkOperator) -> Result<f64> {
    let (ua, ub) = match (&a.u, &b.u) {
        (Some(ua), Some(ub)) if ua.nrows() == ub.nrows() => (ua, ub),
        _ => {
            return Err(Error::ModeMismatch(
                "op_distance requires two full-mode walks on the same grid".into(),
            ))
        }
    };
    Ok(linalg::spectral_norm(&(ua - ub)))
}

/// max over rows x of the Hellinger distance between p(x,·) and p̃(x,·).
pub fn max_row_hellinger(a: &MarkovKernel, b: &MarkovKernel) -> f64 {
    let n = a.len();
    let mut best: f64 = 0.0;
    for x in 0..n {
        let pa: Vec<f64> = (0..n).map(|y| a.matrix[(x, y)]).collect();
        let pb: Vec<f64> = (0..n).map(|y| b.matrix[(x, y)]).collect();
        best = best.max(crate::domain::hellinger(&pa, &pb));
    }
    best
}

/// Spectral projector onto the active-subspace eigenvectors of U with
/// |eigenphase| < γ, stored in factored form P = F·Fᵀ. The inert complement
/// (which contains swap-antisymmetric phase-0 vectors carrying no kernel
/// information) is excluded, so for a reversible gapped walk and γ below
/// the gap the projector is exactly rank 1 onto the lifted stationary law.
#[derive(Debug, Clone)]
pub struct ActiveProjector {
    /// n² × rank; P = factor · factorᵀ.
    pub factor: DMatrix<f64>,
    pub rank: usize,
}

impl ActiveProjector {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.factor * (self.factor.transpose() * v)
    }
}

pub fn projector_below(walk: &WalkOperator, gamma: f64) -> Result<ActiveProjector> {
    if gamma <= 0.0 {
        return Err(Error::InvalidThreshold);
    }
    let (basis, w) = match (&walk.active_basis, &walk.w_active) {
        (Some(b), Some(w)) => (b, w),
        _ => {
            return Err(Error::ModeMismatch(
                "projector_below requires a full-mode walk".into(),
            ))
        }
    };
    let threshold = gamma.min(std::f64::consts::PI).cos();
    let sym = (w + w.transpose()) * 0.5;
    let (vals, vecs) = linalg::symmetric_eigen_desc(&sym);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > threshold || gamma > std::f64::consts::PI)
        .collect();
    let mut factor = DMatrix::zeros(basis.nrows(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let col = basis * DVector::from_column_slice(vecs.column(i).as_slice());
        factor.set_column(k, &col);
    }
    Ok(ActiveProjector {
        rank: keep.len(),
        factor,
    })
}

/// Projector onto ALL eigenvectors of U with |eigenphase| < γ, inert
/// phase-0 space included, via the symmetric part (U + Uᵀ)/2. Unlike
/// `projector_below` this is basis-free, so projectors of two different
/// walks on the same grid are directly comparable; it costs a dense n²×n²
/// eigendecomposition.
pub fn projector_full_below(walk: &WalkOperator, gamma: f64) -> Result<ActiveProjector> {
    if gamma <= 0.0 {
        return Err(Error::InvalidThreshold);
    }
    let u = walk.u.as_ref().ok_or_else(|| {
        Error::ModeMismatch("projector_full_below requires a full-mode walk".into())
    })?;
    let sym = (u + u.transpose()) * 0.5;
    let threshold = gamma.min(std::f64::consts::PI).cos();
    let (vals, vecs) = linalg::symmetric_eigen_desc(&sym);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > threshold).collect();
    let mut factor = DMatrix::zeros(u.nrows(), keep.len());
    for (k, &i) in keep.iter().enumerate() {
        factor.set_column(k, &vecs.column(i));
    }
    Ok(ActiveProjector {
        rank: keep.len(),
        factor,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Enumeration {
    Exact,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct StochasticWalkFamily {
    pub walks: Vec<WalkOperator>,
    /// Entrywise mean of the member unitaries.
    pub expected_u: DMatrix<f64>,
}

/// One full-mode walk per minibatch kernel, plus the expected operator.
pub fn stochastic_walk_family(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
    batch_size: usize,
    lazy: bool,
    enumeration: Enumeration,
) -> Result<StochasticWalkFamily> {
    let n_comp = spec.n_components();
    let batches: Vec<MiniBatch> = match enumeration {
        Enumeration::Exact => {
            let count = potential::binomial(n_comp as u64, batch_size as u64);
            if count > 64 {
                return Err(Error::TooManyBatches(count));
            }
            MiniBatch::enumerate(n_comp, batch_size)?
        }
        Enumeration::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| MiniBatch::sample(n_comp, batch_size, &mut rng))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut walks = Vec::with_capacity(batches.len());
    let mut expected_u: Option<DMatrix<f64>> = None;
    for b in &batches {
        let kernel = chains::sula_kernel(spec, constants, domain, eta, b, lazy)?;
        let walk = build_walk(&kernel, WalkMode::Full)?;
        let u = walk.u.as_ref().unwrap();
        expected_u = Some(match expected_u {
            None => u.clone(),
            Some(acc) => acc + u,
        });
        walks.push(walk);
    }
    let m = walks.len() as f64;
    Ok(StochasticWalkFamily {
        expected_u: expected_u.unwrap() / m,
        walks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{mala_kernel, ula_kernel, ConductanceMode};
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
    fn discriminant_symmetric_kernel() {
        let k = MarkovKernel {
            matrix: DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.3, 0.7]),
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let d = discriminant(&k);
        assert_relative_eq!((d - k.matrix.clone()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn discriminant_two_state_oracle() {
        let d = discriminant(&two_state_kernel(0.3, 0.1));
        let off = 0.03f64.sqrt();
        assert_relative_eq!(d[(0, 0)], 0.7);
        assert_relative_eq!(d[(0, 1)], off);
        assert_relative_eq!(d[(1, 0)], off);
        assert_relative_eq!(d[(1, 1)], 0.9);
        let (vals, _) = linalg::symmetric_eigen_desc(&d);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn discriminant_complete_uniform_rank_one() {
        let n = 4;
        let k = MarkovKernel {
            matrix: DMatrix::from_element(n, n, 0.25),
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let sv = linalg::singular_values_desc(&discriminant(&k));
        assert_relative_eq!(sv[0], 1.0, epsilon = 1e-12);
        for s in &sv[1..] {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn walk_unitary() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 7).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let w = build_walk(&k, WalkMode::Full).unwrap();
        let u = w.u.as_ref().unwrap();
        let defect = (u.transpose() * u - DMatrix::identity(49, 49)).norm();
        assert!(defect < 1e-10);
    }

    #[test]
    fn walk_two_state_active_phases() {
        let k = two_state_kernel(0.3, 0.1);
        let w = build_walk(&k, WalkMode::Full).unwrap();
        let expect = 0.6f64.acos();
        let phases = &w.eigenphases;
        assert!(phases.iter().any(|p| (p - expect).abs() < 1e-9));
        assert!(phases.iter().any(|p| (p + expect).abs() < 1e-9));
        assert!(phases.iter().any(|p| p.abs() < 1e-9));
    }

    #[test]
    fn full_and_discriminant_gap_agree() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let full = build_walk(&k, WalkMode::Full).unwrap();
        let disc = build_walk(&k, WalkMode::DiscriminantOnly).unwrap();
        let delta_disc = phase_gap(&disc).unwrap();
        // smallest positive active phase of the full walk
        let min_pos = full
            .eigenphases
            .iter()
            .cloned()
            .filter(|p| *p > 1e-9)
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(delta_disc, 2.0 * min_pos.cos().acos(), epsilon = 1e-9);
        assert_relative_eq!(delta_disc / 2.0, min_pos, epsilon = 1e-9);
    }

    #[test]
    fn spectral_correspondence_reversible() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 7).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let w = build_walk(&k, WalkMode::Full).unwrap();
        let sv = linalg::singular_values_desc(&w.d_mat);
        // σ within rounding of 1 contributes a single phase-0 vector
        // (arccos amplifies eigenvalue rounding to ~1e-8 phase error)
        let mut expected: Vec<f64> = sv
            .iter()
            .flat_map(|s| {
                if *s > 1.0 - 1e-12 {
                    vec![0.0]
                } else {
                    let t = s.clamp(0.0, 1.0).acos();
                    vec![t, -t]
                }
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        assert_eq!(expected.len(), w.eigenphases.len());
        for (a, b) in expected.iter().zip(&w.eigenphases) {
            assert!((a - b).abs() < 1e-6, "phase {} vs {}", a, b);
        }
    }

    #[test]
    fn phase_gap_complete_uniform() {
        let n = 4;
        let k = MarkovKernel {
            matrix: DMatrix::from_element(n, n, 0.25),
            lazy: false,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let w = build_walk(&k, WalkMode::DiscriminantOnly).unwrap();
        assert_relative_eq!(phase_gap(&w).unwrap(), std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn phase_gap_two_state() {
        let w = build_walk(&two_state_kernel(0.3, 0.1), WalkMode::DiscriminantOnly).unwrap();
        assert_relative_eq!(phase_gap(&w).unwrap(), 2.0 * 0.6f64.acos(), epsilon = 1e-10);
        assert_relative_eq!(phase_gap(&w).unwrap(), 1.8546, epsilon = 1e-3);
    }

    #[test]
    fn phase_gap_identity_kernel() {
        let k = MarkovKernel {
            matrix: DMatrix::identity(3, 3),
            lazy: true,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let w = build_walk(&k, WalkMode::DiscriminantOnly).unwrap();
        assert!(matches!(phase_gap(&w), Err(Error::ZeroPhaseGap)));
    }

    #[test]
    fn coherent_state_examples() {
        let u = coherent_state(&DiscreteDistribution::uniform(4));
        for a in u.amplitudes.iter() {
            assert_relative_eq!(*a, 0.5);
        }
        let point = coherent_state(&DiscreteDistribution::new(vec![0.0, 1.0, 0.0]).unwrap());
        assert_relative_eq!(point.amplitudes[1], 1.0);
        let e1 = (-1.0f64).exp();
        let z = 1.0 + 2.0 * e1;
        let d = DiscreteDistribution::new(vec![e1, 1.0, e1]).unwrap();
        let c = coherent_state(&d);
        assert_relative_eq!(c.amplitudes[0], (e1 / z).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(c.amplitudes.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lift_is_phase_zero_eigenvector() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let pi = chains::gibbs_law(&spec, &g).unwrap();
        let w = build_walk(&k, WalkMode::Full).unwrap();
        let lift = lift_distribution(&w, &pi);
        assert_relative_eq!(lift.norm(), 1.0, epsilon = 1e-10);
        let residual = (apply_u(&w.sqrt_p, &lift) - &lift).norm();
        assert!(residual < 1e-9, "residual {}", residual);
    }

    #[test]
    fn op_distance_basics() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let ku = ula_kernel(&spec, &consts(), &g, 0.02, true).unwrap();
        let km = mala_kernel(&spec, &consts(), &g, 0.02).unwrap();
        let wu = build_walk(&ku, WalkMode::Full).unwrap();
        let wm = build_walk(&km, WalkMode::Full).unwrap();
        assert_relative_eq!(op_distance(&wu, &wu).unwrap(), 0.0, epsilon = 1e-10);
        let d = op_distance(&wu, &wm).unwrap();
        assert!(d > 0.0 && d <= 2.0 + 1e-12);
        // Lemma 1 chaining
        let hell = max_row_hellinger(&ku, &km);
        assert!(d <= 4.0 * 2f64.sqrt() * hell + 1e-12);
    }

    #[test]
    fn hellinger_gaussian_rows_closed_form() {
        // Two continuum Gaussian rows; the grid value reproduces the
        // closed form within 5% at n = 65.
        let g = build_grid(1, 3.0, 65).unwrap();
        let eta = 0.05;
        let beta = 1.0;
        let delta = 2.0;
        let make = |shift: f64| {
            let mut m = DMatrix::zeros(g.len(), g.len());
            let inv_two_var = beta / (4.0 * eta);
            for (j, y) in g.nodes.iter().enumerate() {
                m[(0, j)] = (-(y[0] - shift) * (y[0] - shift) * inv_two_var).exp();
            }
            let s: f64 = m.row(0).iter().sum();
            for j in 0..g.len() {
                m[(0, j)] /= s;
            }
            for i in 1..g.len() {
                m[(i, i)] = 1.0;
            }
            MarkovKernel {
                matrix: m,
                lazy: false,
                kind: KernelKind::Ula,
                eta,
                beta,
            }
        };
        let a = make(0.0);
        let b = make(eta * delta);
        // means Δμ = ηδ apart, variance σ² = 2η/β:
        // H² = 1 − exp(−Δμ²/(8σ²)) = 1 − exp(−βηδ²/16)
        let h = max_row_hellinger(&a, &b);
        let h2_exact = 1.0 - (-beta * eta * delta * delta / 16.0).exp();
        assert_relative_eq!(h * h, h2_exact, epsilon = 0.05 * h2_exact);
    }

    #[test]
    fn projector_below_rank_one() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let w = build_walk(&k, WalkMode::Full).unwrap();
        // smallest nonzero active phase is Δ/2 = arccos λ₁; any threshold
        // strictly inside (0, Δ/2) selects only the lifted stationary law
        let delta = phase_gap(&w).unwrap();
        let p = projector_below(&w, 0.999 * delta / 2.0).unwrap();
        assert_eq!(p.rank, 1);
        let pi = chains::gibbs_law(&spec, &g).unwrap();
        let lift = lift_distribution(&w, &pi);
        let overlap = (p.factor.column(0).dot(&lift)).abs();
        assert_relative_eq!(overlap, 1.0, epsilon = 1e-8);
        // idempotent and self-adjoint
        let m = p.matrix();
        assert!((&m * &m - &m).norm() < 1e-10);
        assert!((&m - m.transpose()).norm() < 1e-12);
    }

    #[test]
    fn projector_above_pi_is_identity_on_active() {
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 7).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let w = build_walk(&k, WalkMode::Full).unwrap();
        let p = projector_below(&w, std::f64::consts::PI + 0.1).unwrap();
        let basis = w.active_basis.as_ref().unwrap();
        assert_eq!(p.rank, basis.ncols());
        let m = p.matrix();
        let diff = (&m * basis - basis).norm();
        assert!(diff < 1e-10);
    }

    #[test]
    fn projector_gapless_zero_rank() {
        let k = MarkovKernel {
            matrix: DMatrix::identity(3, 3),
            lazy: true,
            kind: KernelKind::Ula,
            eta: 0.1,
            beta: 1.0,
        };
        let w = build_walk(&k, WalkMode::Full).unwrap();
        // all active phases are 0 for the identity kernel; γ below them
        // selects nothing
        let p = projector_below(&w, 1e-15_f64.max(f64::MIN_POSITIVE)).unwrap();
        assert_eq!(p.rank, 0);
    }

    #[test]
    fn stochastic_family_full_batch() {
        let spec = catalog("mixture", &[-1.0, 0.5, 1.5, 2.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 5).unwrap();
        let fam = stochastic_walk_family(
            &spec,
            &consts(),
            &g,
            0.05,
            4,
            true,
            Enumeration::Exact,
        )
        .unwrap();
        assert_eq!(fam.walks.len(), 1);
        let ku = ula_kernel(&spec, &consts(), &g, 0.05, true).unwrap();
        let wu = build_walk(&ku, WalkMode::Full).unwrap();
        assert!((fam.expected_u.clone() - wu.u.unwrap()).norm() < 1e-12);
    }

    #[test]
    fn stochastic_family_too_many() {
        let spec = catalog(
            "mixture",
            &(0..14).map(|i| i as f64 * 0.1).collect::<Vec<_>>(),
            1,
            1.0,
        )
        .unwrap();
        let g = build_grid(1, 1.5, 5).unwrap();
        let err = stochastic_walk_family(
            &spec,
            &consts(),
            &g,
            0.05,
            7,
            true,
            Enumeration::Exact,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooManyBatches(_)));
    }

    #[test]
    fn phase_gap_vs_conductance() {
        // Δ ≥ √2·φ on a small reversible chain
        let spec = catalog("double_well", &[1.0], 1, 1.0).unwrap();
        let g = build_grid(1, 1.5, 9).unwrap();
        let k = mala_kernel(&spec, &consts(), &g, 0.05).unwrap();
        let pi = chains::stationary(&k).unwrap();
        let phi = chains::conductance(&k, &pi, ConductanceMode::Exact).unwrap();
        let w = build_walk(&k, WalkMode::DiscriminantOnly).unwrap();
        let delta = phase_gap(&w).unwrap();
        assert!(delta >= 2f64.sqrt() * phi, "Δ={} φ={}", delta, phi);
    }
}
