//! Experiment runner for the fracwick verification suites.

pub mod config;
pub mod error;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod suites;

pub use config::{ExperimentConfig, Suite};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use suites::{execute, run_suite, SuiteOutput};

/// Worker count from `FRACWICK_THREADS`, if set.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var("FRACWICK_THREADS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("FRACWICK_THREADS: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("FRACWICK_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}
