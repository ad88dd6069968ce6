use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("negative value {value} at cell {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("result does not fit inside the grid margin")]
    MarginOverflow,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("domain is empty")]
    EmptyDomain,

    #[error("domain is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("target volume {target} exceeds grid capacity {capacity}")]
    CapacityExceeded { target: f64, capacity: f64 },

    #[error("unknown suite '{0}'")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
