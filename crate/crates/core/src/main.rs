use clap::{Parser, Subcommand};
use gibbswalk::error::Error;
use gibbswalk::harness::config::ExperimentConfig;
use gibbswalk::harness::{report, verify};
use gibbswalk::{anneal, chains, partition, potential, qsa, walk};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gibbswalk", version, about = "Quantum-walk Gibbs sampling simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Audit the claimed landscape constants on the working grid
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        probes: usize,
    },
    /// Build the configured Markov kernel and report mixing diagnostics
    Chains {
        #[arg(long)]
        config: PathBuf,
    },
    /// Eigenphase spectrum and phase gap of the walk operator
    WalkSpectrum {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build and validate the annealing schedule
    Anneal {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full annealing run plus simulated measurements
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// override backend.kind from the config
        #[arg(long)]
        backend: Option<String>,
    },
    /// Telescoping partition-function estimate
    Partition {
        #[arg(long)]
        config: PathBuf,
        /// exact | sampled
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Run an inequality-verification suite
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 30)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Time representative kernel, walk, and schedule builds
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
}

/// The only environment override: GIBBSWALK_SEED replaces the seed from
/// config or flags.
fn seed_override(seed: u64) -> u64 {
    match std::env::var("GIBBSWALK_SEED") {
        Ok(v) => v.parse().unwrap_or(seed),
        Err(_) => seed,
    }
}

fn emit<T: Serialize>(value: &T, cfg: Option<&ExperimentConfig>) -> Result<(), Error> {
    let text = report::json_string(value)?;
    if let Some(path) = cfg
        .and_then(|c| c.output.as_ref())
        .and_then(|o| o.json.as_ref())
    {
        std::fs::write(path, &text)?;
    }
    print!("{}", text);
    Ok(())
}

fn build_kernel(cfg: &ExperimentConfig) -> Result<chains::MarkovKernel, Error> {
    let spec = cfg.potential_spec()?;
    let constants = cfg.assumption_constants();
    let grid = cfg.grid()?;
    match cfg.backend.kind.as_str() {
        "mala" => chains::mala_kernel(&spec, &constants, &grid, cfg.chain.eta),
        "ula" => chains::ula_kernel(&spec, &constants, &grid, cfg.chain.eta, cfg.chain.lazy),
        _ => {
            let b = cfg.backend.batch.unwrap_or(1).min(spec.n_components());
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                seed_override(cfg.run.seed),
            );
            let batch = potential::MiniBatch::sample(spec.n_components(), b, &mut rng)?;
            chains::sula_kernel(&spec, &constants, &grid, cfg.chain.eta, &batch, cfg.chain.lazy)
        }
    }
}

#[derive(Serialize)]
struct ChainsOut {
    kind: String,
    eta: f64,
    nodes: usize,
    conductance: f64,
    conductance_mode: String,
    db_residual: f64,
    spectral_gap: Option<f64>,
    stationary: Vec<f64>,
}

fn cmd_chains(cfg: &ExperimentConfig) -> Result<(), Error> {
    let kernel = build_kernel(cfg)?;
    let mode = if kernel.len() <= 14 {
        chains::ConductanceMode::Exact
    } else {
        chains::ConductanceMode::Sweep
    };
    let diag = chains::diagnostics(&kernel, mode)?;
    emit(
        &ChainsOut {
            kind: cfg.backend.kind.clone(),
            eta: cfg.chain.eta,
            nodes: kernel.len(),
            conductance: diag.conductance,
            conductance_mode: format!("{:?}", mode),
            db_residual: diag.db_residual,
            spectral_gap: diag.spectral_gap,
            stationary: diag.stationary.weights,
        },
        Some(cfg),
    )
}

#[derive(Serialize)]
struct SpectrumOut {
    phase_gap: f64,
    phases: Vec<f64>,
}

fn cmd_walk_spectrum(cfg: &ExperimentConfig) -> Result<(), Error> {
    let kernel = build_kernel(cfg)?;
    let w = walk::build_walk(&kernel, walk::WalkMode::DiscriminantOnly)?;
    let gap = walk::phase_gap(&w)?;
    // |π⟩-lift overlap per branch: for reversible kernels the top singular
    // vector of D is √π, so overlaps are taken against it.
    let pi = chains::stationary(&kernel)?;
    let sqrt_pi: Vec<f64> = pi.weights.iter().map(|x| x.sqrt()).collect();
    let svd = nalgebra::SVD::new(w.d_mat.clone(), true, false);
    let u = svd.u.as_ref().expect("svd vectors");
    // pair phases (ascending) with singular vectors (descending σ)
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut rows = Vec::new();
    for (idx, &phase) in w.eigenphases.iter().enumerate() {
        let overlap: f64 = if idx < order.len() {
            u.column(order[idx])
                .iter()
                .zip(sqrt_pi.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
        } else {
            0.0
        };
        rows.push(vec![idx.to_string(), phase.to_string(), overlap.to_string()]);
    }
    if let Some(path) = cfg.output.as_ref().and_then(|o| o.csv.as_ref()) {
        report::write_csv(&["index", "phase", "pi_overlap"], &rows, path.as_ref())?;
    }
    emit(
        &SpectrumOut {
            phase_gap: gap,
            phases: w.eigenphases.clone(),
        },
        Some(cfg),
    )
}

fn cmd_anneal(cfg: &ExperimentConfig) -> Result<(), Error> {
    let spec = cfg.potential_spec()?;
    let constants = cfg.assumption_constants();
    let grid = cfg.grid()?;
    let sched = anneal::build_schedule(
        &spec,
        &constants,
        &grid,
        cfg.schedule.epsilon,
        cfg.schedule.alpha_scale,
    )?;
    let rep = anneal::validate_schedule(&sched, &anneal::ScheduleThresholds::default());
    if let Some(path) = cfg.output.as_ref().and_then(|o| o.csv.as_ref()) {
        let rows: Vec<Vec<String>> = (0..sched.m_stages)
            .map(|i| {
                vec![
                    i.to_string(),
                    sched.sigma_sq[i].to_string(),
                    rep.consecutive_overlaps[i].to_string(),
                ]
            })
            .collect();
        report::write_csv(&["stage", "sigma_sq", "overlap_next"], &rows, path.as_ref())?;
    }
    emit(&rep, Some(cfg))
}

#[derive(Serialize)]
struct SampleOut {
    run: qsa::RunReport,
    empirical_tv: f64,
    shots: usize,
}

fn cmd_sample(cfg: &ExperimentConfig, backend_flag: Option<&str>) -> Result<(), Error> {
    let mut cfg = cfg.clone();
    if let Some(kind) = backend_flag {
        cfg.backend.kind = kind.to_string();
        if kind == "sula" && cfg.backend.batch.is_none() {
            cfg.backend.batch = Some(1);
        }
    }
    let spec = cfg.potential_spec()?;
    let constants = cfg.assumption_constants();
    let grid = cfg.grid()?;
    let sched = anneal::build_schedule(
        &spec,
        &constants,
        &grid,
        cfg.schedule.epsilon,
        cfg.schedule.alpha_scale,
    )?;
    let seed = seed_override(cfg.run.seed);
    let out = qsa::run_annealing(
        &spec,
        &constants,
        &grid,
        &sched,
        &cfg.walk_backend(),
        cfg.chain.eta,
        cfg.run.epsilon,
        cfg.backend.c_proj,
        seed,
        None,
    )?;
    let meas = qsa::measure(&out.state, grid.len(), cfg.run.shots, seed.wrapping_add(1));
    if let Some(path) = cfg.output.as_ref().and_then(|o| o.csv.as_ref()) {
        let mut counts = vec![0usize; grid.len()];
        for &s in &meas.samples {
            counts[s] += 1;
        }
        let rows: Vec<Vec<String>> = (0..grid.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    grid.nodes[i][0].to_string(),
                    counts[i].to_string(),
                ]
            })
            .collect();
        report::write_csv(&["node", "x", "count"], &rows, path.as_ref())?;
    }
    emit(
        &SampleOut {
            run: out.report,
            empirical_tv: meas.empirical_tv,
            shots: cfg.run.shots,
        },
        Some(&cfg),
    )
}

#[derive(Serialize)]
struct PartitionOut {
    estimate: partition::PartitionEstimate,
    grid_reference: f64,
}

fn cmd_partition(cfg: &ExperimentConfig, mode: &str) -> Result<(), Error> {
    let mode = match mode {
        "exact" => partition::EstimateMode::Exact,
        "sampled" => partition::EstimateMode::Sampled,
        other => return Err(Error::Config(format!("unknown mode '{}'", other))),
    };
    let spec = cfg.potential_spec()?;
    let constants = cfg.assumption_constants();
    let grid = cfg.grid()?;
    let sched = anneal::build_schedule(
        &spec,
        &constants,
        &grid,
        cfg.schedule.epsilon,
        cfg.schedule.alpha_scale,
    )?;
    let est = partition::estimate_partition(
        &sched,
        cfg.run.epsilon,
        mode,
        seed_override(cfg.run.seed),
    )?;
    emit(
        &PartitionOut {
            estimate: est,
            grid_reference: partition::grid_partition(&sched),
        },
        Some(cfg),
    )
}

fn cmd_verify(
    suite: &str,
    instances: usize,
    seed: u64,
    json: Option<&PathBuf>,
    csv: Option<&PathBuf>,
) -> Result<bool, Error> {
    let rep = verify::verify_suite(suite, instances, seed_override(seed))?;
    if let Some(path) = json {
        report::write_json(&rep, path)?;
    }
    if let Some(path) = csv {
        report::write_csv(&verify::SuiteReport::CSV_HEADER, &rep.csv_rows(), path)?;
    }
    print!("{}", report::json_string(&rep)?);
    Ok(rep.pass)
}

#[derive(Serialize)]
struct BenchOut {
    kernel_ms: f64,
    walk_ms: Option<f64>,
    schedule_ms: f64,
}

fn cmd_bench(cfg: &ExperimentConfig) -> Result<(), Error> {
    let spec = cfg.potential_spec()?;
    let constants = cfg.assumption_constants();
    let grid = cfg.grid()?;

    let t = std::time::Instant::now();
    let kernel = build_kernel(cfg)?;
    let kernel_ms = t.elapsed().as_secs_f64() * 1e3;

    let walk_ms = if grid.len() <= 40 {
        let t = std::time::Instant::now();
        walk::build_walk(&kernel, walk::WalkMode::Full)?;
        Some(t.elapsed().as_secs_f64() * 1e3)
    } else {
        None
    };

    let t = std::time::Instant::now();
    anneal::build_schedule(
        &spec,
        &constants,
        &grid,
        cfg.schedule.epsilon,
        cfg.schedule.alpha_scale,
    )?;
    let schedule_ms = t.elapsed().as_secs_f64() * 1e3;

    emit(
        &BenchOut {
            kernel_ms,
            walk_ms,
            schedule_ms,
        },
        Some(cfg),
    )
}

fn run(cli: Cli) -> Result<bool, Error> {
    match &cli.cmd {
        Cmd::Certify { config, probes } => {
            let cfg = ExperimentConfig::load(config)?;
            let rep = potential::certify_constants(
                &cfg.potential_spec()?,
                &cfg.assumption_constants(),
                &cfg.grid()?,
                *probes,
            )?;
            emit(&rep, Some(&cfg))?;
            Ok(true)
        }
        Cmd::Chains { config } => {
            cmd_chains(&ExperimentConfig::load(config)?)?;
            Ok(true)
        }
        Cmd::WalkSpectrum { config } => {
            cmd_walk_spectrum(&ExperimentConfig::load(config)?)?;
            Ok(true)
        }
        Cmd::Anneal { config } => {
            cmd_anneal(&ExperimentConfig::load(config)?)?;
            Ok(true)
        }
        Cmd::Sample { config, backend } => {
            cmd_sample(&ExperimentConfig::load(config)?, backend.as_deref())?;
            Ok(true)
        }
        Cmd::Partition { config, mode } => {
            cmd_partition(&ExperimentConfig::load(config)?, mode)?;
            Ok(true)
        }
        Cmd::Verify {
            suite,
            instances,
            seed,
            json,
            csv,
        } => cmd_verify(suite, *instances, *seed, json.as_ref(), csv.as_ref()),
        Cmd::Bench { config } => {
            cmd_bench(&ExperimentConfig::load(config)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e);
            match e {
                Error::Config(_) | Error::Io(_) | Error::UnknownSuite(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
