use thiserror::Error;

/// Domain errors shared across all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite energy at probe point")]
    NonFiniteEnergy,
    #[error("non-finite gradient at probe point")]
    NonFiniteGradient,
    #[error("minibatch invalid: {0}")]
    InvalidBatch(String),
    #[error("assumption violated: {inequality} at witness {witness:?} (slack {slack:.6e})")]
    AssumptionViolation {
        inequality: String,
        witness: Vec<f64>,
        slack: f64,
    },
    #[error("dimension {0} unsupported (d must be 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("density has no mass on the grid")]
    DegenerateDensity,
    #[error("invalid step size: eta must be positive")]
    InvalidStep,
    #[error("stationary law did not converge within the iteration cap")]
    StationaryNotConverged,
    #[error("exact conductance requires at most 14 nodes, got {0}")]
    TooLargeForExact(usize),
    #[error("trajectory escaped 10R; step size likely too large")]
    DivergenceDetected,
    #[error("full walk mode requires at most 40 nodes, got {0}")]
    TooLargeForFull(usize),
    #[error("phase gap is zero within tolerance")]
    ZeroPhaseGap,
    #[error("walk operator mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("phase threshold must be positive")]
    InvalidThreshold,
    #[error("batch enumeration too large: C(N,B) = {0} exceeds 64")]
    TooManyBatches(u64),
    #[error("annealing growth rate alpha = {0:.4} >= 1; lower alpha_scale")]
    GrowthTooAggressive(f64),
    #[error("annealing schedule exceeds 10^4 stages")]
    ScheduleTooLong,
    #[error("initial overlap is zero; amplification cannot make progress")]
    NoOverlap,
    #[error("annealing failed at stage {0}: overlap below abort floor")]
    AnnealingFailed(usize),
    #[error("rung {rung} relative variance {relvar:.3} exceeds cap {cap:.3}")]
    IllConditionedSchedule { rung: usize, relvar: f64, cap: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown verification suite: {0}")]
    UnknownSuite(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
