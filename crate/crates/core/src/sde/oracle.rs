use super::solvers::{solve, SolverChoice};
use super::model::SdeSpec;
use crate::error::{Error, Result};
use crate::fbm::{Ensemble, Generator, TimeGrid};
use crate::phi::{phi_norm_sq, PhiKernelContext, StepFunction};
use crate::stats::{variance_estimate, MeanEstimate, MonteCarloReport};
use rayon::prelude::*;
use std::sync::Arc;

/// Cells used to project the OU kernel in [`fou_oracle`].
pub const FOU_ORACLE_CELLS: usize = 2048;

/// `σ² ‖e^{−λ(t−·)} 1_{[0,t]}‖²_φ` with the kernel replaced by its cell averages
/// on `n_cells` uniform cells of `[0, t]`.
pub fn fou_variance(lambda: f64, sigma: f64, t: f64, n_cells: usize, ctx: &PhiKernelContext) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let grid = Arc::new(TimeGrid::uniform(n_cells, t)?);
    let p = grid.points();
    let levels: Vec<f64> = p
        .windows(2)
        .map(|c| ((-lambda * (t - c[1])).exp() - (-lambda * (t - c[0])).exp()) / (lambda * (c[1] - c[0])))
        .collect();
    let f = StepFunction::new(grid, levels)?;
    Ok(sigma * sigma * phi_norm_sq(&f, ctx)?)
}

/// Mean `x0 e^{−λt}` and variance of the fractional OU process at every node.
pub fn fou_oracle(
    lambda: f64,
    sigma: f64,
    x0: f64,
    grid: &TimeGrid,
    ctx: &PhiKernelContext,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mean = grid.points().iter().map(|t| x0 * (-lambda * t).exp()).collect();
    let var = grid
        .points()
        .par_iter()
        .map(|&t| fou_variance(lambda, sigma, t, FOU_ORACLE_CELLS, ctx))
        .collect::<Result<Vec<f64>>>()?;
    Ok((mean, var))
}

/// Oracle moments at one checkpoint time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointOracle {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointReport {
    pub t: f64,
    pub mean: MonteCarloReport,
    pub variance: MonteCarloReport,
}

/// Solves the SDE on `n_paths` circulant-embedding noise paths (stream index =
/// replication) and compares the moments of `X` at each checkpoint.
pub fn sde_mc_stats(
    sde: &SdeSpec,
    n_paths: usize,
    grid: &TimeGrid,
    seed: u64,
    solver: SolverChoice,
    ctx: &PhiKernelContext,
    checkpoints: &[CheckpointOracle],
) -> Result<Vec<CheckpointReport>> {
    let idx = checkpoints
        .iter()
        .map(|c| {
            grid.index_of(c.t)
                .ok_or_else(|| Error::GridMismatch(format!("checkpoint {} is not a grid node", c.t)))
        })
        .collect::<Result<Vec<usize>>>()?;
    let noise = Ensemble::generate(Generator::Circulant, grid, ctx.hurst(), seed, n_paths)?;
    let sols: Vec<Vec<f64>> = noise
        .paths
        .par_iter()
        .map(|p| solve(sde, p, solver).map(|r| idx.iter().map(|&i| r.path.values[i]).collect()))
        .collect::<Result<_>>()?;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let xs: Vec<f64> = sols.iter().map(|s| s[k]).collect();
            CheckpointReport {
                t: c.t,
                mean: MonteCarloReport::from_mean(MeanEstimate::from_samples(&xs), c.mean),
                variance: MonteCarloReport::from_mean(variance_estimate(&xs), c.variance),
            }
        })
        .collect())
}
