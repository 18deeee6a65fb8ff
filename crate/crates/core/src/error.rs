use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The state has (numerically) vanished, usually because an upstream
    /// collapse selected an outcome of probability ~0.
    #[error("near-zero norm ({0:e})")]
    ZeroNorm(f64),

    #[error("projector '{label}' has null weight ({weight:e}) on this state")]
    NullWeight { label: String, weight: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// Guidance velocity requested where the density is below the node floor.
    #[error("node encountered at t={time}, x={position:?} (rho={density:e})")]
    Node {
        time: f64,
        position: Vec<f64>,
        density: f64,
    },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
