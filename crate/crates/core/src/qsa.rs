//! Quantum simulated annealing driver: per-stage reflections built from
//! walk spectral projectors, π/3 fixed-point amplitude amplification, and
//! end-to-end state driving through the schedule, with a query ledger
//! tracking walk applications and oracle calls per backend.

use crate::anneal::{self, AnnealSchedule};
use crate::chains;
use crate::domain::{CumulativeSampler, DiscreteDistribution, GridDomain};
use crate::error::{Error, Result};
use crate::potential::{AssumptionConstants, MiniBatch, PotentialSpec};
use crate::walk::{self, WalkMode, WalkOperator};
use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type CVector = DVector<Complex<f64>>;

/// Walk applications charged per reflection: ceil(C_PROJ / Δ).
pub const C_PROJ: f64 = 10.0;
/// Abort threshold on the measured source-target overlap |⟨t|ψ⟩|.
pub const MIN_OVERLAP: f64 = 0.05;
const MAX_DEPTH: u32 = 15;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct QueryLedger {
    pub walk_applications: u64,
    pub gradient_component_evals: u64,
    pub function_evals: u64,
    pub reflections: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AmplifyPlan {
    /// π/3 recursion depth k; the recursion applies 3^k − 1 reflections.
    pub depth: u32,
    /// (1 − p₀)^{3^k} for the planned depth.
    pub predicted_failure: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkBackend {
    Mala,
    Ula,
    Sula { batch_size: usize },
}

/// Phase-ω reflection about a projector subspace in the lifted (product)
/// space: V = I + (ω − 1)·F·Fᵀ with FᵀF = I.
#[derive(Debug, Clone)]
pub struct Reflection {
    /// n² × rank orthonormal factor of the projector.
    pub factor: DMatrix<f64>,
    pub rank: usize,
    /// Phase gap of the walk the projector was synthesized from.
    pub delta: f64,
    /// Walk applications charged per application of this reflection.
    pub walk_cost: u64,
    /// Gradient components charged per walk application.
    pub grad_per_walk: u64,
    /// Function evaluations charged per walk application.
    pub func_per_walk: u64,
}

impl Reflection {
    pub fn apply(&self, v: &CVector, omega: Complex<f64>) -> CVector {
        let w1 = omega - Complex::new(1.0, 0.0);
        let mut out = v.clone();
        for j in 0..self.rank {
            let col = self.factor.column(j);
            let mut c = Complex::new(0.0, 0.0);
            for (k, f) in col.iter().enumerate() {
                c += v[k] * *f;
            }
            let cw = c * w1;
            for (k, f) in col.iter().enumerate() {
                out[k] += cw * *f;
            }
        }
        out
    }

    pub fn matrix(&self, omega: Complex<f64>) -> DMatrix<Complex<f64>> {
        let n = self.factor.nrows();
        let mut m = DMatrix::from_diagonal_element(n, n, Complex::new(1.0, 0.0));
        let w1 = omega - Complex::new(1.0, 0.0);
        let p = &self.factor * self.factor.transpose();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w1 * p[(i, j)];
            }
        }
        m
    }

    fn charge(&self, ledger: &mut QueryLedger) {
        ledger.reflections += 1;
        ledger.walk_applications += self.walk_cost;
        ledger.gradient_component_evals += self.walk_cost * self.grad_per_walk;
        ledger.function_evals += self.walk_cost * self.func_per_walk;
    }
}

/// Walk and anchor data for one annealing stage under a given backend.
pub struct StageOperators {
    /// Reflections to cycle through; one entry except for the stochastic
    /// backend, which holds one independently batched projector per
    /// expected application.
    pub reflections: Vec<Reflection>,
    /// Normalized lift of the stage law under its Metropolis walk — the
    /// exact phase-0 eigenvector used as overlap/fidelity reference.
    pub anchor: DVector<f64>,
}

impl StageOperators {
    fn cycle(&self, k: usize) -> &Reflection {
        &self.reflections[k % self.reflections.len()]
    }
}

fn perturbed_projector(
    walk: &WalkOperator,
    gamma: f64,
    perturbation: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<walk::ActiveProjector> {
    match perturbation {
        None => walk::projector_below(walk, gamma),
        Some(scale) => {
            let mut w = walk.clone();
            let wa = w.w_active.as_ref().ok_or(Error::ModeMismatch(
                "perturbation requires a full-mode walk".into(),
            ))?;
            let q = crate::linalg::random_orthogonal_perturbation(wa.nrows(), scale, rng);
            w.w_active = Some(q * wa);
            walk::projector_below(&w, gamma)
        }
    }
}

/// Build the stage reflection for one backend. The Metropolis walk fixes
/// the lifted stage law exactly, so its reflection is the rank-1 phase on
/// that vector; the unadjusted backends substitute their own walk and take
/// the spectral projector below the Metropolis-derived threshold (the
/// midpoint of the open spectral gap).
pub fn reflection(
    spec: &PotentialSpec,
    schedule: &AnnealSchedule,
    stage: usize,
    backend: &WalkBackend,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    eta: f64,
    c_proj: f64,
    perturbation: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Reflection> {
    assert!(c_proj > 0.0);
    let stage_spec = anneal::stage_potential(spec, schedule, stage);
    let stage_spec = &stage_spec;
    let stage_dist = &schedule.stage_dists[stage];
    let mala = chains::mala_kernel(stage_spec, constants, domain, eta)?;
    let mala_walk = walk::build_walk(&mala, WalkMode::Full)?;
    let gap = walk::phase_gap(&mala_walk)?;
    // oracle charge per walk application: f's component gradients only (the
    // tempering gradient is analytic)
    let n_grad = spec.n_components() as u64;
    match backend {
        WalkBackend::Mala => {
            if perturbation.is_none() {
                let mut anchor = walk::lift_distribution(&mala_walk, stage_dist);
                anchor /= anchor.norm();
                let resid = (walk::apply_u(&mala_walk.sqrt_p, &anchor) - &anchor).norm();
                assert!(
                    resid <= 1e-8,
                    "lifted stage law not fixed by the walk: residual {}",
                    resid
                );
                let factor = DMatrix::from_column_slice(anchor.len(), 1, anchor.as_slice());
                Ok(Reflection {
                    factor,
                    rank: 1,
                    delta: gap,
                    walk_cost: (c_proj / gap).ceil() as u64,
                    grad_per_walk: n_grad,
                    func_per_walk: 2,
                })
            } else {
                let proj = perturbed_projector(&mala_walk, gap / 4.0, perturbation, rng)?;
                Ok(Reflection {
                    rank: proj.rank,
                    factor: proj.factor,
                    delta: gap,
                    walk_cost: (c_proj / gap).ceil() as u64,
                    grad_per_walk: n_grad,
                    func_per_walk: 2,
                })
            }
        }
        WalkBackend::Ula => {
            let kernel = chains::ula_kernel(stage_spec, constants, domain, eta, true)?;
            let w = walk::build_walk(&kernel, WalkMode::Full)?;
            let own_gap = walk::phase_gap(&w).unwrap_or(gap);
            let proj = perturbed_projector(&w, gap / 4.0, perturbation, rng)?;
            Ok(Reflection {
                rank: proj.rank,
                factor: proj.factor,
                delta: own_gap,
                walk_cost: (c_proj / own_gap).ceil() as u64,
                grad_per_walk: n_grad,
                func_per_walk: 0,
            })
        }
        WalkBackend::Sula { batch_size } => {
            // minibatch over f's own components; the Gaussian confinement
            // gradient is analytic and enters in full. Stage 0 has no f.
            let f_spec = if stage == 0 {
                PotentialSpec::new(
                    vec![crate::potential::Component::Zero],
                    spec.d,
                    spec.beta,
                )
            } else {
                spec.clone()
            };
            let b = (*batch_size).min(f_spec.n_components());
            // the projector synthesis consumes ceil(c_proj/Δ) walk
            // applications, each with its own fresh batch; phase estimation
            // concentrates on their mean, so build the projector from the
            // averaged kernel of that many independent draws
            let draws = ((c_proj / gap).ceil() as usize).clamp(1, 32);
            let mut mean: Option<chains::MarkovKernel> = None;
            for _ in 0..draws {
                let batch = MiniBatch::sample(f_spec.n_components(), b, rng)?;
                let kernel = chains::sula_kernel_tempered(
                    &f_spec,
                    constants,
                    domain,
                    eta,
                    &batch,
                    schedule.inv_sigma_sq[stage] / spec.beta,
                    true,
                )?;
                mean = Some(match mean {
                    None => kernel,
                    Some(mut acc) => {
                        acc.matrix += kernel.matrix;
                        acc
                    }
                });
            }
            let mut kernel = mean.unwrap();
            kernel.matrix /= draws as f64;
            let w = walk::build_walk(&kernel, WalkMode::Full)?;
            let own_gap = walk::phase_gap(&w).unwrap_or(gap);
            let proj = perturbed_projector(&w, gap / 4.0, perturbation, rng)?;
            Ok(Reflection {
                rank: proj.rank,
                factor: proj.factor,
                delta: own_gap,
                walk_cost: (c_proj / own_gap).ceil() as u64,
                grad_per_walk: *batch_size as u64,
                func_per_walk: 0,
            })
        }
    }
}

/// Smallest depth k with (1 − p₀)^{3^k} ≤ target_error.
pub fn plan_amplification(p0: f64, target_error: f64) -> Result<AmplifyPlan> {
    if !(p0 > 0.0) {
        return Err(Error::NoOverlap);
    }
    let p0 = p0.min(1.0);
    let base = 1.0 - p0;
    let mut depth = 0u32;
    loop {
        let failure = base.powf(3f64.powi(depth as i32));
        if failure <= target_error || depth >= MAX_DEPTH {
            return Ok(AmplifyPlan {
                depth,
                predicted_failure: failure,
                p0,
            });
        }
        depth += 1;
    }
}

/// π/3 fixed-point recursion A_{m+1} = A_m V_s A_m† V_t A_m (rightmost
/// applied first) with phase ω = e^{iπ/3} on both reflections. Applied to
/// |s⟩ the depth-k circuit leaves squared target infidelity (1−p₀)^{3^k}
/// when the reflections are exact.
pub fn amplify(
    state: &CVector,
    source: &StageOperators,
    target: &StageOperators,
    plan: &AmplifyPlan,
    ledger: &mut QueryLedger,
) -> CVector {
    let omega = Complex::from_polar(1.0, std::f64::consts::PI / 3.0);
    // per-side application counters so the stochastic backend cycles
    // through independently batched projectors
    let mut ks = 0usize;
    let mut kt = 0usize;
    fn rec(
        m: u32,
        conj: bool,
        v: CVector,
        source: &StageOperators,
        target: &StageOperators,
        omega: Complex<f64>,
        ks: &mut usize,
        kt: &mut usize,
        ledger: &mut QueryLedger,
    ) -> CVector {
        if m == 0 {
            return v;
        }
        let om = if conj { omega.conj() } else { omega };
        if !conj {
            let v = rec(m - 1, false, v, source, target, omega, ks, kt, ledger);
            let r = target.cycle(*kt);
            *kt += 1;
            r.charge(ledger);
            let v = r.apply(&v, om);
            let v = rec(m - 1, true, v, source, target, omega, ks, kt, ledger);
            let r = source.cycle(*ks);
            *ks += 1;
            r.charge(ledger);
            let v = r.apply(&v, om);
            rec(m - 1, false, v, source, target, omega, ks, kt, ledger)
        } else {
            // (A V_s A† V_t A)† = A† V_s† A V_t† A†
            let v = rec(m - 1, true, v, source, target, omega, ks, kt, ledger);
            let r = source.cycle(*ks);
            *ks += 1;
            r.charge(ledger);
            let v = r.apply(&v, om);
            let v = rec(m - 1, false, v, source, target, omega, ks, kt, ledger);
            let r = target.cycle(*kt);
            *kt += 1;
            r.charge(ledger);
            let v = r.apply(&v, om);
            rec(m - 1, true, v, source, target, omega, ks, kt, ledger)
        }
    }
    rec(
        plan.depth,
        false,
        state.clone(),
        source,
        target,
        omega,
        &mut ks,
        &mut kt,
        ledger,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub stage: usize,
    pub p0: f64,
    pub depth: u32,
    pub predicted_failure: f64,
    pub measured_infidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub backend: String,
    pub eta: f64,
    pub epsilon: f64,
    pub stages: usize,
    pub per_stage: Vec<StageReport>,
    pub ledger: QueryLedger,
    pub final_tv: f64,
    pub seed: u64,
}

pub struct AnnealingOutcome {
    pub state: CVector,
    pub report: RunReport,
}

fn backend_name(b: &WalkBackend) -> String {
    match b {
        WalkBackend::Mala => "mala".into(),
        WalkBackend::Ula => "ula".into(),
        WalkBackend::Sula { batch_size } => format!("sula(b={})", batch_size),
    }
}

fn complex_from_real(v: &DVector<f64>) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| Complex::new(x, 0.0)))
}

fn fidelity_to_anchor(state: &CVector, anchor: &DVector<f64>) -> f64 {
    let mut ip = Complex::new(0.0, 0.0);
    for (s, a) in state.iter().zip(anchor.iter()) {
        ip += s.conj() * *a;
    }
    ip.norm_sqr()
}

/// Marginal law of the node register: prob(x) = Σ_y |amp(x,y)|².
pub fn node_marginal(state: &CVector, n_nodes: usize) -> DiscreteDistribution {
    let mut w = vec![0.0; n_nodes];
    for (k, a) in state.iter().enumerate() {
        w[k / n_nodes] += a.norm_sqr();
    }
    DiscreteDistribution::new(w).expect("normalized state")
}

fn build_stage(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    schedule: &AnnealSchedule,
    stage: usize,
    backend: &WalkBackend,
    eta: f64,
    c_proj: f64,
    pool: usize,
    rng: &mut ChaCha8Rng,
) -> Result<StageOperators> {
    let stage_spec = anneal::stage_potential(spec, schedule, stage);
    let dist = &schedule.stage_dists[stage];
    // the tempered potential's smoothness is L_i = L + 1/(βσ_i²); clamp the
    // step so the early, sharply confined stages stay in the stable regime
    let l_stage = constants.l + schedule.inv_sigma_sq[stage] / spec.beta;
    let eta = eta.min(1.0 / (spec.beta * l_stage));
    let copies = match backend {
        WalkBackend::Sula { .. } => pool.max(1),
        _ => 1,
    };
    let mut reflections = Vec::with_capacity(copies);
    for _ in 0..copies {
        reflections.push(reflection(
            spec, schedule, stage, backend, constants, domain, eta, c_proj, None, rng,
        )?);
    }
    // reference anchor from the Metropolis walk (exact for any backend)
    let mala = chains::mala_kernel(&stage_spec, constants, domain, eta)?;
    let mala_walk = walk::build_walk(&mala, WalkMode::DiscriminantOnly)?;
    let mut anchor = walk::lift_distribution(&mala_walk, dist);
    anchor /= anchor.norm();
    Ok(StageOperators {
        reflections,
        anchor,
    })
}

/// Drive |μ₀⟩ through the full schedule. Returns the final lifted state,
/// its node-marginal TV against π, and the accumulated ledger. `warm_start`
/// skips ahead: the run begins at that stage from its exact coherent state.
pub fn run_annealing(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    schedule: &AnnealSchedule,
    backend: &WalkBackend,
    eta: f64,
    epsilon: f64,
    c_proj: f64,
    seed: u64,
    warm_start: Option<usize>,
) -> Result<AnnealingOutcome> {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    let m = schedule.m_stages;
    let start = warm_start.unwrap_or(0).min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = QueryLedger::default();
    let mut per_stage = Vec::new();

    // per-stage failure budget: amplitude errors add across stages, so a
    // (ε/(4M))² infidelity target per rung keeps the final TV within ε
    let rungs = (m - start).max(1) as f64;
    let stage_target = (epsilon / (4.0 * rungs)).powi(2);
    // expected reflections per side at the typical depth, sizing the
    // stochastic backend's projector pool
    let pool = 13;

    let mut current = build_stage(
        spec, constants, domain, schedule, start, backend, eta, c_proj, pool, &mut rng,
    )?;
    let mut state = complex_from_real(&current.anchor);

    for i in start..m {
        let next = build_stage(
            spec,
            constants,
            domain,
            schedule,
            i + 1,
            backend,
            eta,
            c_proj,
            pool,
            &mut rng,
        )?;
        let p0 = fidelity_to_anchor(&state, &next.anchor);
        if p0.sqrt() < MIN_OVERLAP {
            return Err(Error::AnnealingFailed(i));
        }
        let plan = plan_amplification(p0, stage_target)?;
        state = amplify(&state, &current, &next, &plan, &mut ledger);
        let norm = state.norm();
        assert!((norm - 1.0).abs() < 1e-8, "norm drift {}", norm);
        state /= Complex::new(norm, 0.0);
        let fid = fidelity_to_anchor(&state, &next.anchor);
        per_stage.push(StageReport {
            stage: i + 1,
            p0,
            depth: plan.depth,
            predicted_failure: plan.predicted_failure,
            measured_infidelity: (1.0 - fid).max(0.0),
        });
        current = next;
    }

    let marginal = node_marginal(&state, domain.len());
    let final_tv = crate::domain::total_variation(&marginal, &schedule.stage_dists[m]);
    Ok(AnnealingOutcome {
        state,
        report: RunReport {
            backend: backend_name(backend),
            eta,
            epsilon,
            stages: m,
            per_stage,
            ledger,
            final_tv,
            seed,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasurementReport {
    pub samples: Vec<usize>,
    /// empirical TV between the sample histogram and the amplitude law
    pub empirical_tv: f64,
}

/// Simulate computational-basis measurements of the node register.
pub fn measure(
    state: &CVector,
    n_nodes: usize,
    shots: usize,
    seed: u64,
) -> MeasurementReport {
    assert!(shots >= 1);
    let law = node_marginal(state, n_nodes);
    let sampler = CumulativeSampler::new(&law);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; n_nodes];
    let mut samples = Vec::with_capacity(shots);
    for _ in 0..shots {
        let k = sampler.draw(&mut rng);
        counts[k] += 1;
        samples.push(k);
    }
    let empirical_tv = 0.5
        * counts
            .iter()
            .zip(&law.weights)
            .map(|(&c, &w)| (c as f64 / shots as f64 - w).abs())
            .sum::<f64>();
    MeasurementReport {
        samples,
        empirical_tv,
    }
}
