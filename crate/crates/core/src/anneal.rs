//! Annealing schedule for non-logconcave targets: the geometric σ-sequence,
//! tempered stage distributions μ_i ∝ exp(−βf(x) − ‖x‖²/(2σ_i²)), pairwise
//! Bhattacharyya overlaps, and the stopping rule, with the terminal stage
//! pinned to the target Gibbs law itself.

use crate::chains;
use crate::domain::{self, DiscreteDistribution, GridDomain};
use crate::error::{Error, Result};
use crate::potential::{self, AssumptionConstants, PotentialSpec};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct AnnealSchedule {
    /// σ₁² … σ_M², geometric with ratio 1+α.
    pub sigma_sq: Vec<f64>,
    pub alpha: f64,
    /// Stage count; stage indices run 0..=M with stage M the target π.
    pub m_stages: usize,
    /// Stage distributions, length M+1.
    pub stage_dists: Vec<DiscreteDistribution>,
    /// log of the unnormalized grid mass Σ_x w_i(x)·h^d per stage,
    /// retained for the partition telescoping.
    pub log_masses: Vec<f64>,
    /// 1/σ² coefficient entering each stage's Gaussian factor
    /// (stage 0: 1/σ₁², stage i: 1/σ_i², stage M: 0).
    pub inv_sigma_sq: Vec<f64>,
    /// Unnormalized log-weights per stage and node (cell measure excluded);
    /// consecutive differences give the telescoping ratio integrands.
    pub log_weights: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub d: usize,
}

/// Log-weights of one stage on the grid. Stage 0 is the pure Gaussian;
/// stage M is π itself (inv = 0 and f on).
fn stage_log_weight(
    spec: &PotentialSpec,
    x: &[f64],
    inv_sigma_sq: f64,
    include_f: bool,
) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let mut lw = -0.5 * inv_sigma_sq * r2;
    if include_f {
        lw -= spec.beta * potential::eval(spec, x).unwrap();
    }
    lw
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn build_schedule(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    epsilon: f64,
    alpha_scale: f64,
) -> Result<AnnealSchedule> {
    assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon in (0,1)");
    assert!(alpha_scale > 0.0);
    let d = domain.d as f64;
    let (l, m, c_lsi) = (constants.l, constants.m, constants.c_lsi);
    let sigma1_sq = epsilon / (2.0 * d * l);
    let alpha = alpha_scale * c_lsi * (m / (d * l)).sqrt();
    let target = (d * l / (m * c_lsi * c_lsi)).sqrt();
    if alpha >= 1.0 && sigma1_sq < target {
        return Err(Error::GrowthTooAggressive(alpha));
    }
    let mut sigma_sq = vec![sigma1_sq];
    while *sigma_sq.last().unwrap() < target {
        sigma_sq.push(sigma_sq.last().unwrap() * (1.0 + alpha));
        if sigma_sq.len() > 10_000 {
            return Err(Error::ScheduleTooLong);
        }
    }
    let m_stages = sigma_sq.len();

    let mut stage_dists = Vec::with_capacity(m_stages + 1);
    let mut log_masses = Vec::with_capacity(m_stages + 1);
    let mut inv_sigma_sq = Vec::with_capacity(m_stages + 1);
    let mut log_weights = Vec::with_capacity(m_stages + 1);
    let log_cell = domain.cell_measure.ln();
    for i in 0..=m_stages {
        let (inv, include_f) = if i == 0 {
            (1.0 / sigma1_sq, false)
        } else if i < m_stages {
            (1.0 / sigma_sq[i - 1], true)
        } else {
            (0.0, true)
        };
        let logs: Vec<f64> = domain
            .nodes
            .iter()
            .map(|x| stage_log_weight(spec, x, inv, include_f))
            .collect();
        log_masses.push(log_sum_exp(&logs) + log_cell);
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
        stage_dists.push(DiscreteDistribution::new(weights)?);
        inv_sigma_sq.push(inv);
        log_weights.push(logs);
    }

    Ok(AnnealSchedule {
        sigma_sq,
        alpha,
        m_stages,
        stage_dists,
        log_masses,
        inv_sigma_sq,
        log_weights,
        epsilon,
        d: domain.d,
    })
}

/// Potential whose Gibbs law at spec.beta is exactly stage i's
/// distribution: βf_i = βf·[stage uses f] + ‖x‖²/(2σ_i²). The tempering
/// term is folded in as an extra averaged component, with the original
/// components rescaled so the finite-sum mean is preserved.
pub fn stage_potential(
    spec: &PotentialSpec,
    schedule: &AnnealSchedule,
    i: usize,
) -> PotentialSpec {
    assert!(i <= schedule.m_stages, "stage index out of range");
    let inv = schedule.inv_sigma_sq[i];
    if i == 0 {
        // pure Gaussian: βf = inv·‖x‖²/2
        return PotentialSpec::new(
            vec![potential::Component::Quadratic {
                center: vec![0.0; spec.d],
                weight: inv / spec.beta,
            }],
            spec.d,
            spec.beta,
        );
    }
    if inv == 0.0 {
        return spec.clone();
    }
    let n = spec.n_components() as f64;
    let factor = (n + 1.0) / n;
    let mut components: Vec<potential::Component> = spec
        .components
        .iter()
        .map(|c| c.scaled(factor))
        .collect();
    components.push(potential::Component::Quadratic {
        center: vec![0.0; spec.d],
        weight: (n + 1.0) * inv / spec.beta,
    });
    PotentialSpec::new(components, spec.d, spec.beta)
}

pub fn stage_distribution(schedule: &AnnealSchedule, i: usize) -> &DiscreteDistribution {
    assert!(i <= schedule.m_stages, "stage index out of range");
    &schedule.stage_dists[i]
}

/// Bhattacharyya coefficient Σ_x √(μ_i μ_j) = ⟨μ_i|μ_j⟩ of the coherent
/// states.
pub fn overlap(schedule: &AnnealSchedule, i: usize, j: usize) -> f64 {
    assert!(i <= schedule.m_stages && j <= schedule.m_stages);
    domain::bhattacharyya(&schedule.stage_dists[i], &schedule.stage_dists[j])
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScheduleThresholds {
    pub min_consecutive_overlap: f64,
    pub min_final_overlap: f64,
    /// M must be within this multiple of the √(dL/(m c²_LSI)) reference.
    pub stage_count_slack: f64,
}

impl Default for ScheduleThresholds {
    fn default() -> Self {
        ScheduleThresholds {
            min_consecutive_overlap: 0.5,
            min_final_overlap: 0.5,
            stage_count_slack: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleReport {
    pub m_stages: usize,
    pub min_consecutive_overlap: f64,
    pub final_overlap: f64,
    /// Reference stage count log(target/σ₁²)/log(1+α).
    pub m_reference: f64,
    pub consecutive_overlaps: Vec<f64>,
    pub pass: bool,
}

pub fn validate_schedule(
    schedule: &AnnealSchedule,
    thresholds: &ScheduleThresholds,
) -> ScheduleReport {
    let m = schedule.m_stages;
    let consecutive: Vec<f64> = (0..m).map(|i| overlap(schedule, i, i + 1)).collect();
    let min_consecutive = consecutive.iter().cloned().fold(f64::INFINITY, f64::min);
    let final_overlap = overlap(schedule, m - 1, m);
    let target = schedule.sigma_sq[0]
        * (1.0 + schedule.alpha).powi((m as i32 - 1).max(0))
        / schedule.sigma_sq[0];
    let m_reference = if m > 1 {
        (target.ln() / (1.0 + schedule.alpha).ln()).max(1.0)
    } else {
        1.0
    };
    let pass = min_consecutive >= thresholds.min_consecutive_overlap
        && final_overlap >= thresholds.min_final_overlap
        && (m as f64) <= thresholds.stage_count_slack * (m_reference + 1.0);
    ScheduleReport {
        m_stages: m,
        min_consecutive_overlap: min_consecutive,
        final_overlap,
        m_reference,
        consecutive_overlaps: consecutive,
        pass,
    }
}

/// Gibbs-measure moment products used as conditioning proxies by the
/// partition estimator: E_π[e^{−s‖x‖²}]·E_π[e^{s‖x‖²}] (≥ 1 by
/// Cauchy-Schwarz) and the tempered second moment E_{π_s}[‖x‖²].
#[derive(Debug, Clone, Serialize)]
pub struct MomentProxies {
    pub s: f64,
    pub exp_product: f64,
    /// C with exp_product = exp(C·d·L·s²/m).
    pub c_recorded: f64,
    pub tempered_second_moment: f64,
    /// C' with E_{π_s}[‖x‖²] = C'·L·d/m.
    pub c_prime_recorded: f64,
}

pub fn moment_proxies(
    spec: &PotentialSpec,
    constants: &AssumptionConstants,
    domain: &GridDomain,
    s: f64,
) -> Result<MomentProxies> {
    let pi = chains::gibbs_law(spec, domain)?;
    let r2: Vec<f64> = domain
        .nodes
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum())
        .collect();
    let e_neg: f64 = pi
        .weights
        .iter()
        .zip(&r2)
        .map(|(w, r)| w * (-s * r).exp())
        .sum();
    let e_pos: f64 = pi
        .weights
        .iter()
        .zip(&r2)
        .map(|(w, r)| w * (s * r).exp())
        .sum();
    let exp_product = e_neg * e_pos;
    let d = domain.d as f64;
    let scale = d * constants.l * s * s / constants.m;
    let c_recorded = if scale > 0.0 {
        exp_product.ln() / scale
    } else {
        0.0
    };
    // tempered measure π_s ∝ π·e^{−s‖x‖²}
    let tempered: Vec<f64> = pi
        .weights
        .iter()
        .zip(&r2)
        .map(|(w, r)| w * (-s * r).exp())
        .collect();
    let z: f64 = tempered.iter().sum();
    let second: f64 = tempered
        .iter()
        .zip(&r2)
        .map(|(w, r)| w * r)
        .sum::<f64>()
        / z;
    let c_prime_recorded = second / (constants.l * d / constants.m);
    Ok(MomentProxies {
        s,
        exp_product,
        c_recorded,
        tempered_second_moment: second,
        c_prime_recorded,
    })
}
