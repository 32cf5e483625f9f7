//! Experiment configuration. The file is TOML with a strict schema: unknown
//! keys and out-of-range values are rejected before anything runs.

use crate::error::{CliError, CliResult};
use fracwick_core::fbm::Generator;
use fracwick_core::wick::Cylinder;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Generate,
    VerifyIto,
    VerifyProductRule,
    VerifyWentzell,
    Girsanov,
    Isometry,
    SolveSde,
    Converge,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Generate,
        Suite::VerifyIto,
        Suite::VerifyProductRule,
        Suite::VerifyWentzell,
        Suite::Girsanov,
        Suite::Isometry,
        Suite::SolveSde,
        Suite::Converge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Generate => "generate",
            Suite::VerifyIto => "verify-ito",
            Suite::VerifyProductRule => "verify-product-rule",
            Suite::VerifyWentzell => "verify-wentzell",
            Suite::Girsanov => "girsanov",
            Suite::Isometry => "isometry",
            Suite::SolveSde => "solve-sde",
            Suite::Converge => "converge",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Option<Suite>,
    pub hurst: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub grid_sizes: Vec<usize>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub plots: bool,
    #[serde(default)]
    pub cases: Cases,
}

/// Case registry selections; each suite reads the keys relevant to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cases {
    /// Path generators for `generate`.
    pub generators: Vec<String>,
    /// Noise generator for every other suite.
    pub noise: String,
    /// Functions `f` for `verify-ito`, `isometry` and `converge`.
    pub functions: Vec<String>,
    /// `x*w`, `x*const`, `x*t` for `verify-product-rule`.
    pub product: Vec<String>,
    /// `x-times-w`, `constant`, `deterministic` for `verify-wentzell`.
    pub wentzell: Vec<String>,
    /// `(F, c)` pairs for `girsanov`, shift `g = c·1_{[0,T]}`.
    pub girsanov: Vec<(String, f64)>,
    /// Largest accepted log–log slope in `converge`.
    pub max_slope: f64,
    pub sde: SdeCase,
}

impl Default for Cases {
    fn default() -> Self {
        Self {
            generators: Generator::ALL.iter().map(|g| g.name().to_string()).collect(),
            noise: "circulant".into(),
            functions: vec!["x^2".into()],
            product: vec!["x*w".into(), "x*const".into(), "x*t".into()],
            wentzell: vec!["x-times-w".into(), "constant".into(), "deterministic".into()],
            girsanov: vec![("x".into(), 1.0), ("x^2".into(), 1.0), ("exp(x)".into(), 0.5)],
            max_slope: -0.4,
            sde: SdeCase::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeCase {
    pub lambda: f64,
    pub sigma: f64,
    pub x0: f64,
    /// `flow-euler`, `flow-rk4`, `direct-euler` or `picard`.
    pub solver: String,
    pub checkpoints: Vec<f64>,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SdeCase {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            sigma: 1.0,
            x0: 1.0,
            solver: "flow-rk4".into(),
            checkpoints: vec![0.25, 0.5, 1.0],
            picard_tol: 1e-10,
            picard_max_iter: 200,
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fracwick-out")
}

pub const SOLVERS: [&str; 4] = ["flow-euler", "flow-rk4", "direct-euler", "picard"];
pub const PRODUCT_CASES: [&str; 3] = ["x*w", "x*const", "x*t"];
pub const WENTZELL_CASES: [&str; 3] = ["x-times-w", "constant", "deterministic"];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::from_toml(text)?, bytes))
    }

    /// The largest grid size; every other size must divide it.
    pub fn finest(&self) -> usize {
        *self.grid_sizes.last().unwrap()
    }

    pub fn validate(&self, suite: Suite) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(s) = self.suite {
            if s != suite {
                return bad(format!("config is for suite `{s}` but `{suite}` was requested"));
            }
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return bad(format!("hurst must lie in (0, 1), got {}", self.hurst));
        }
        if suite != Suite::Generate && self.hurst <= 0.5 {
            return bad(format!("suite `{suite}` needs hurst > 1/2, got {}", self.hurst));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.grid_sizes.is_empty() || self.grid_sizes.contains(&0) {
            return bad("grid_sizes must be a non-empty list of positive sizes".into());
        }
        if self.grid_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("grid_sizes must be strictly increasing".into());
        }
        if self.grid_sizes.iter().any(|n| self.finest() % n != 0) {
            return bad("every grid size must divide the largest one".into());
        }
        if matches!(suite, Suite::Converge) && self.grid_sizes.len() < 3 {
            return bad("converge needs at least three grid sizes".into());
        }
        let min_paths = if suite == Suite::Isometry { 1000 } else { 2 };
        if self.n_paths < min_paths {
            return bad(format!("suite `{suite}` needs n_paths >= {min_paths}, got {}", self.n_paths));
        }
        let c = &self.cases;
        for g in c.generators.iter().chain(std::iter::once(&c.noise)) {
            g.parse::<Generator>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if suite == Suite::Generate && c.generators.is_empty() {
            return bad("cases.generators is empty".into());
        }
        for f in &c.functions {
            f.parse::<Cylinder>().map_err(|e| CliError::Config(e.to_string()))?;
        }
        for (f, k) in &c.girsanov {
            f.parse::<Cylinder>().map_err(|e| CliError::Config(e.to_string()))?;
            if !k.is_finite() {
                return bad(format!("girsanov shift level for `{f}` is not finite"));
            }
        }
        for p in &c.product {
            if !PRODUCT_CASES.contains(&p.as_str()) {
                return bad(format!("unknown product-rule case `{p}`"));
            }
        }
        for w in &c.wentzell {
            if !WENTZELL_CASES.contains(&w.as_str()) {
                return bad(format!("unknown Wentzell case `{w}`"));
            }
        }
        let s = &c.sde;
        if !SOLVERS.contains(&s.solver.as_str()) {
            return bad(format!("unknown solver `{}`", s.solver));
        }
        if !(s.lambda > 0.0 && s.lambda.is_finite() && s.sigma.is_finite() && s.x0.is_finite()) {
            return bad("sde.lambda must be positive and sde.sigma, sde.x0 finite".into());
        }
        if !(s.picard_tol > 0.0) || s.picard_max_iter == 0 {
            return bad("sde.picard_tol must be positive and sde.picard_max_iter non-zero".into());
        }
        if s.checkpoints.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
            return bad("sde.checkpoints must lie in [0, horizon]".into());
        }
        if suite == Suite::SolveSde {
            let n = self.finest() as f64;
            for t in &s.checkpoints {
                let k = t / self.horizon * n;
                if (k - k.round()).abs() > 1e-9 {
                    return bad(format!("sde checkpoint {t} is not a node of the {} cell grid", self.finest()));
                }
            }
        }
        if !c.max_slope.is_finite() {
            return bad("cases.max_slope must be finite".into());
        }
        Ok(())
    }
}
