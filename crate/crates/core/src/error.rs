use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("covariance matrix is not positive definite after jitter (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("circulant embedding has a negative eigenvalue {min_eigenvalue:e} (relative {relative:e})")]
    EmbeddingFailure { min_eigenvalue: f64, relative: f64 },

    #[error("phi kernel is singular on the diagonal s = t = {0}")]
    DiagonalSingularity(f64),

    #[error("operation requires H > 1/2, got H = {0}")]
    LongMemoryRequired(f64),

    #[error("exponential functional overflow guard: squared phi-norm {0} exceeds 700")]
    Overflow(f64),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("drift is not finite at t = {t}, x = {x}")]
    DriftBlowup { t: f64, x: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last delta {last_delta:e})")]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}
