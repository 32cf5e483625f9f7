use fracwick_core::fbm::io::fmt_f64;
use fracwick_core::stats::{MonteCarloReport, Verdict};
use std::io::{self, Write};

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub test_name: String,
    pub n_paths: usize,
    pub grid_n: usize,
    pub estimate: f64,
    pub oracle: f64,
    pub stderr: f64,
    pub z: f64,
    pub verdict: Verdict,
}

impl ReportRow {
    pub fn from_mc(test_name: impl Into<String>, grid_n: usize, r: &MonteCarloReport) -> Self {
        Self {
            test_name: test_name.into(),
            n_paths: r.n_paths,
            grid_n,
            estimate: r.estimate,
            oracle: r.oracle,
            stderr: r.stderr,
            z: r.z_score,
            verdict: r.verdict,
        }
    }

    /// A deterministic comparison: passes iff `ok`; `stderr` and `z` are NaN.
    pub fn check(test_name: impl Into<String>, n_paths: usize, grid_n: usize, estimate: f64, oracle: f64, ok: bool) -> Self {
        Self {
            test_name: test_name.into(),
            n_paths,
            grid_n,
            estimate,
            oracle,
            stderr: f64::NAN,
            z: f64::NAN,
            verdict: Verdict::from_bool(ok),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Name qualified by grid size, unique within a suite.
    pub fn id(&self) -> String {
        format!("{}[n={}]", self.test_name, self.grid_n)
    }
}

pub const REPORT_HEADER: &str = "test_name,n_paths,grid_n,estimate,oracle,stderr,z,verdict";

pub fn write_report_csv<W: Write>(mut out: W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.test_name,
            r.n_paths,
            r.grid_n,
            fmt_f64(r.estimate),
            fmt_f64(r.oracle),
            fmt_f64(r.stderr),
            fmt_f64(r.z),
            r.verdict
        )?;
    }
    Ok(())
}
