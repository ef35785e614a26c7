use thiserror::Error;

/// Errors produced by model construction, training, solvers, and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Array shapes are inconsistent.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input is degenerate (e.g. a correlation vector of norm zero).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A weight or state magnitude exceeded the divergence threshold.
    #[error("numerical divergence: {0}")]
    Divergence(String),

    /// The requested equation has no solution in the admissible range.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A phase-detection threshold was never reached on the trajectory.
    #[error("phase threshold not reached: {0}")]
    PhaseNotFound(String),

    /// Malformed or inconsistent experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
