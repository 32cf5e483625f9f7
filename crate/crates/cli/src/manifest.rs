use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::suites::SuiteOutput;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// What is promised to be reproducible across re-runs.
pub const GUARANTEE_SCOPE: &str = "Every CSV file produced from identical config bytes and seed is \
byte-identical across runs and worker-thread counts on the same binary. SVG plots carry no \
timestamps and are identical too. Only this manifest's timestamp and wall-clock fields vary.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestVerdict {
    pub name: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteTiming {
    pub suite: String,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub timestamp: String,
    pub guarantee_scope: String,
    pub passed: bool,
    pub tests: Vec<TestVerdict>,
    pub suites: Vec<SuiteTiming>,
    pub artifacts: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, config_bytes: &[u8], out: &SuiteOutput, suites: Vec<SuiteTiming>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: sha256_hex(config_bytes),
            master_seed: cfg.seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            guarantee_scope: GUARANTEE_SCOPE.to_string(),
            passed: out.passed(),
            tests: out
                .rows
                .iter()
                .map(|r| TestVerdict {
                    name: r.id(),
                    verdict: r.verdict.to_string(),
                })
                .collect(),
            suites,
            artifacts: out.artifacts.iter().map(|a| a.name.clone()).collect(),
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }
}
