use super::{CholeskySampler, CirculantSampler, HoskingSampler, HurstParameter, SamplePath, TimeGrid};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Cholesky,
    Circulant,
    Hosking,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Cholesky, Generator::Circulant, Generator::Hosking];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Cholesky => "cholesky",
            Generator::Circulant => "circulant",
            Generator::Hosking => "hosking",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown generator `{s}`")))
    }
}

enum Sampler {
    Cholesky(CholeskySampler),
    Circulant(CirculantSampler),
    Hosking(HoskingSampler),
}

impl Sampler {
    fn sample(&self, seed: SeedSpec) -> SamplePath {
        match self {
            Sampler::Cholesky(s) => s.sample(seed),
            Sampler::Circulant(s) => s.sample(seed),
            Sampler::Hosking(s) => s.sample(seed),
        }
    }
}

/// A collection of paths on one shared grid; path `k` uses stream index `k`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub grid: Arc<TimeGrid>,
    pub hurst: HurstParameter,
    pub master_seed: u64,
    pub paths: Vec<SamplePath>,
}

impl Ensemble {
    /// Generates `n_paths` replications in parallel. Output does not depend on
    /// the number of worker threads.
    pub fn generate(
        generator: Generator,
        grid: &TimeGrid,
        hurst: HurstParameter,
        master_seed: u64,
        n_paths: usize,
    ) -> Result<Self> {
        let sampler = match generator {
            Generator::Cholesky => Sampler::Cholesky(CholeskySampler::new(Arc::new(grid.clone()), hurst)?),
            Generator::Circulant | Generator::Hosking => {
                if !grid.is_uniform() {
                    return Err(Error::InvalidGrid(format!("{generator} sampler needs a uniform grid")));
                }
                let (n, t) = (grid.n_intervals(), grid.horizon());
                if generator == Generator::Circulant {
                    Sampler::Circulant(CirculantSampler::new(n, t, hurst)?)
                } else {
                    Sampler::Hosking(HoskingSampler::new(n, t, hurst)?)
                }
            }
        };
        let paths: Vec<SamplePath> = (0..n_paths as u64)
            .into_par_iter()
            .map(|k| sampler.sample(SeedSpec::new(master_seed, k)))
            .collect();
        let grid = paths
            .first()
            .map(|p| p.grid.clone())
            .unwrap_or_else(|| Arc::new(grid.clone()));
        Ok(Self {
            grid,
            hurst,
            master_seed,
            paths,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Every path observed on a coarser sub-grid; no noise is regenerated.
    pub fn restrict(&self, coarse: &TimeGrid) -> Result<Self> {
        let coarse = Arc::new(coarse.clone());
        let idx = self.grid.embed(&coarse)?;
        let paths = self
            .paths
            .iter()
            .map(|p| SamplePath {
                grid: coarse.clone(),
                values: idx.iter().map(|&i| p.values[i]).collect(),
                label: p.label.clone(),
            })
            .collect();
        Ok(Self {
            grid: coarse,
            hurst: self.hurst,
            master_seed: self.master_seed,
            paths,
        })
    }

    pub fn terminal_values(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.terminal()).collect()
    }
}
