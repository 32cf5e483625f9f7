use super::functions::DriftDiffusion;
use super::montecarlo::{common_grid, rms};
use super::residual::{ItoCase, PreparedIto, PreparedProduct, PreparedWentzell, Residual};
use super::wentzell::WentzellCase;
use crate::error::{Error, Result};
use crate::fbm::{SamplePath, TimeGrid};
use crate::phi::PhiKernelContext;
use crate::stats::loglog_slope;
use rayon::prelude::*;
use std::sync::Arc;

/// A residual operation together with its case.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualOp {
    Ito(ItoCase),
    ProductRule(DriftDiffusion, DriftDiffusion),
    Wentzell(WentzellCase),
}

impl ResidualOp {
    pub fn prepare(&self, grid: Arc<TimeGrid>, ctx: &PhiKernelContext) -> Result<Box<dyn Residual + Send>> {
        Ok(match self {
            ResidualOp::Ito(c) => Box::new(PreparedIto::new(c, grid, ctx)?),
            ResidualOp::ProductRule(x, y) => Box::new(PreparedProduct::new(x, y, grid, ctx)?),
            ResidualOp::Wentzell(c) => Box::new(PreparedWentzell::new(c, grid, ctx)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln rms` against `ln n`; `None` when some RMS is 0.
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn new(rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.windows(2).any(|w| w[1].n <= w[0].n) {
            return Err(Error::InvalidGrid("grid sizes must be strictly increasing".into()));
        }
        if rows.iter().any(|r| !(r.rms_residual >= 0.0)) {
            return Err(Error::Domain("RMS residuals must be non-negative".into()));
        }
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.rms_residual).collect();
        let slope = loglog_slope(&xs, &ys);
        Ok(Self { rows, slope })
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rms_residual < w[0].rms_residual)
    }
}

/// RMS residual on each coarse grid of `grid_sizes` cells, every rung using
/// restrictions of the same fine paths. The fine grid must have
/// `lcm(grid_sizes)`-compatible resolution, i.e. every size divides the
/// number of fine intervals.
pub fn convergence_study(
    op: &ResidualOp,
    grid_sizes: &[usize],
    fine_paths: &[SamplePath],
    ctx: &PhiKernelContext,
) -> Result<ConvergenceTable> {
    if grid_sizes.len() < 3 {
        return Err(Error::Domain("a convergence study needs at least three grid sizes".into()));
    }
    if grid_sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid sizes must be strictly increasing".into()));
    }
    let fine = common_grid(fine_paths)?;
    let n_fine = fine.n_intervals();
    let mut grids = Vec::with_capacity(grid_sizes.len());
    let mut prepared = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        if n == 0 || n_fine % n != 0 {
            return Err(Error::InvalidGrid(format!(
                "grid size {n} does not divide the {n_fine} fine intervals"
            )));
        }
        let g = Arc::new(fine.coarsen(n_fine / n)?);
        prepared.push(op.prepare(g.clone(), ctx)?);
        grids.push(g);
    }
    // One replication runs its whole ladder.
    let per_path: Vec<Vec<f64>> = fine_paths
        .par_iter()
        .map(|p| {
            grids
                .iter()
                .zip(&prepared)
                .map(|(g, r)| r.residual(&p.restrict(g.clone())?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let rows = grid_sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let col: Vec<f64> = per_path.iter().map(|r| r[k]).collect();
            ConvergenceRow { n, rms_residual: rms(&col) }
        })
        .collect();
    ConvergenceTable::new(rows)
}
