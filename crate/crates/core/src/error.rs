use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("invalid coefficient: {0}")]
    Coefficient(String),
    #[error("horizon {delta} exceeds grid collar {collar}")]
    HorizonExceedsCollar { delta: f64, collar: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("covering failed: {0}")]
    Covering(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
