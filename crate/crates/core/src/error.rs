use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid road network: {0}")]
    InvalidNetwork(String),
    #[error("segments {0} -> {1} are not joined by an edge")]
    NotAnEdge(usize, usize),
    #[error("embedding dimension {dim} outside 1..={max}")]
    DimensionOutOfRange { dim: usize, max: usize },
    #[error("invalid distance matrix: {0}")]
    InvalidDistances(String),
    #[error("invalid kernel hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("matrix of order {order} is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { order: usize, jitter: f64 },
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("invalid support set: {0}")]
    InvalidSupport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("a joint walk needs at least one sensor")]
    EmptyComponent,
    #[error("joint-walk search needs {required} evaluations but the budget is {budget}")]
    SearchBudgetExceeded { required: u128, budget: u64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
