use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration; nothing has been computed or written.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] fracwick_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("plot error: {0}")]
    Plot(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
