//! Pathwise residuals `LHS − discrete RHS` for the Itô formula, the product
//! rule and the Itô–Wentzell formula.
//!
//! Shared discretization: left-point evaluation on each cell, Wick products
//! with increments replaced by ordinary products minus the exact phi-derivative
//! along the cell, and `ds` terms carrying exact cell integrals of the kernel
//! factors. Residuals are accumulated cell by cell, so cancellations that hold
//! algebraically on a cell hold in floating point as well.

use super::functions::{DriftDiffusion, SpaceTimeFn};
use super::wentzell::WentzellCase;
use crate::error::{Error, Result};
use crate::fbm::{SamplePath, TimeGrid};
use crate::phi::{CellKernels, PhiKernelContext, StepFunction};
use crate::stats::CompensatedSum;
use crate::wick::levels_on_grid;
use std::sync::Arc;

/// Integrand `a` of `η = ∫ a dW`.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    One,
    Step(StepFunction),
}

/// `f(t, η_t)` with `η = ∫ a dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItoCase {
    pub f: SpaceTimeFn,
    pub integrand: Integrand,
}

impl ItoCase {
    /// Validates the symbolic derivatives of `f` by finite differences.
    pub fn new(f: SpaceTimeFn, integrand: Integrand) -> Result<Self> {
        f.check_derivatives()?;
        Ok(Self { f, integrand })
    }

    pub fn unit(f: SpaceTimeFn) -> Result<Self> {
        Self::new(f, Integrand::One)
    }
}

/// Residual operation with per-grid kernel weights computed once.
pub trait Residual: Sync {
    fn residual(&self, path: &SamplePath) -> Result<f64>;
}

/// Everything a residual needs that depends on the grid but not on the path.
pub(crate) struct ProcessWeights {
    pub drift: Vec<f64>,
    pub diffusion: Vec<f64>,
    /// `D_{Φ1_i} X_{t_i}`
    pub wick: Vec<f64>,
    /// `∫_{cell_i} (D^φX)_s ds`
    pub diag: Vec<f64>,
}

impl ProcessWeights {
    fn new(drift: Vec<f64>, diffusion: Vec<f64>, kernels: &CellKernels) -> Self {
        let n = kernels.n_cells();
        let (wick, diag) = if diffusion.iter().all(|b| *b == 0.0) {
            (vec![0.0; n], vec![0.0; n])
        } else if diffusion.iter().all(|b| *b == 1.0) {
            ((0..n).map(|i| kernels.past_overlap(i)).collect(), (0..n).map(|i| kernels.diagonal_cell(i)).collect())
        } else {
            kernels.integrand_weights(&diffusion)
        };
        Self {
            drift,
            diffusion,
            wick,
            diag,
        }
    }

    pub(crate) fn for_process(p: &DriftDiffusion, kernels: &CellKernels) -> Result<Self> {
        let g = kernels.grid();
        Ok(Self::new(p.drift.levels(g)?, p.diffusion.levels(g)?, kernels))
    }

    #[inline]
    pub(crate) fn increment(&self, i: usize, dt: f64, dw: f64) -> f64 {
        self.drift[i] * dt + self.diffusion[i] * dw
    }
}

pub(crate) fn check_path(path: &SamplePath, kernels: &CellKernels) -> Result<()> {
    if path.grid.len() < 2 {
        return Err(Error::InvalidGrid("residuals need at least two grid points".into()));
    }
    if Arc::ptr_eq(&path.grid, kernels.grid()) || *path.grid == **kernels.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch("path grid differs from the prepared grid".into()))
    }
}

/// [`ItoCase`] bound to a grid.
pub struct PreparedIto {
    case: ItoCase,
    kernels: CellKernels,
    weights: ProcessWeights,
}

impl PreparedIto {
    pub fn new(case: &ItoCase, grid: Arc<TimeGrid>, ctx: &PhiKernelContext) -> Result<Self> {
        let kernels = CellKernels::new(grid.clone(), *ctx);
        let a = match &case.integrand {
            Integrand::One => vec![1.0; grid.n_intervals()],
            Integrand::Step(f) => levels_on_grid(f, &grid)?,
        };
        let weights = ProcessWeights::new(vec![0.0; a.len()], a, &kernels);
        Ok(Self {
            case: case.clone(),
            kernels,
            weights,
        })
    }
}

impl Residual for PreparedIto {
    fn residual(&self, path: &SamplePath) -> Result<f64> {
        check_path(path, &self.kernels)?;
        let f = &self.case.f;
        let grid = self.kernels.grid();
        let t = grid.points();
        let w = &self.weights;
        let mut acc = CompensatedSum::new();
        let mut eta = 0.0;
        for i in 0..grid.n_intervals() {
            let (s0, s1) = (t[i], t[i + 1]);
            let dw = path.increment(i);
            let a = w.diffusion[i];
            let d = a * dw;
            let time_inc = f.eval(s1, eta) - f.eval(s0, eta);
            let lhs = time_inc + f.x_increment(s1, eta, d);
            let fx = f.dx(s0, eta);
            let fxx = f.dxx(s0, eta);
            // ∂_s f exactly over the cell, Wick sum of ∂_x f · a, kernel term.
            let ds_term = time_inc;
            let dw_term = fx * d - fxx * a * w.wick[i];
            let kernel_term = fxx * a * w.diag[i];
            acc.add(lhs - ds_term - dw_term - kernel_term);
            eta += d;
        }
        Ok(acc.value())
    }
}

/// `f(t, η_t) − [f(0, 0) + ∫∂_s f ds + ∫ ∂_x f · a ⋄ dW + ∫ ∂²_x f · a · D^φη ds]`
/// at the path horizon.
pub fn ito_residual_path(case: &ItoCase, path: &SamplePath, ctx: &PhiKernelContext) -> Result<f64> {
    PreparedIto::new(case, path.grid.clone(), ctx)?.residual(path)
}

/// Product rule bound to a grid.
pub struct PreparedProduct {
    x: DriftDiffusion,
    y: DriftDiffusion,
    kernels: CellKernels,
    wx: ProcessWeights,
    wy: ProcessWeights,
}

impl PreparedProduct {
    pub fn new(x: &DriftDiffusion, y: &DriftDiffusion, grid: Arc<TimeGrid>, ctx: &PhiKernelContext) -> Result<Self> {
        let kernels = CellKernels::new(grid, *ctx);
        let wx = ProcessWeights::for_process(x, &kernels)?;
        let wy = ProcessWeights::for_process(y, &kernels)?;
        Ok(Self {
            x: x.clone(),
            y: y.clone(),
            kernels,
            wx,
            wy,
        })
    }
}

impl Residual for PreparedProduct {
    fn residual(&self, path: &SamplePath) -> Result<f64> {
        check_path(path, &self.kernels)?;
        let grid = self.kernels.grid();
        let (wx, wy) = (&self.wx, &self.wy);
        let (mut x, mut y) = (self.x.x0, self.y.x0);
        let mut acc = CompensatedSum::new();
        for i in 0..grid.n_intervals() {
            let (dt, dw) = (grid.spacing(i), path.increment(i));
            let dx = wx.increment(i, dt, dw);
            let dy = wy.increment(i, dt, dw);
            let (b1, b2) = (wx.diffusion[i], wy.diffusion[i]);
            acc.add(x * dy);
            acc.add(y * dx);
            acc.add(dx * dy);
            // X ⋄ dY and Y ⋄ dX
            acc.add(-(x * dy - b2 * wx.wick[i]));
            acc.add(-(y * dx - b1 * wy.wick[i]));
            acc.add(-(b1 * wy.diag[i] + b2 * wx.diag[i]));
            x += dx;
            y += dy;
        }
        Ok(acc.value())
    }
}

/// `X_T Y_T − X_0 Y_0 − Σ[X ⋄ dY + Y ⋄ dX + (B¹ D^φY + B² D^φX) dt]`
pub fn product_rule_residual(
    x: &DriftDiffusion,
    y: &DriftDiffusion,
    path: &SamplePath,
    ctx: &PhiKernelContext,
) -> Result<f64> {
    PreparedProduct::new(x, y, path.grid.clone(), ctx)?.residual(path)
}

/// Itô–Wentzell case bound to a grid.
pub struct PreparedWentzell {
    case: WentzellCase,
    kernels: CellKernels,
    wx: ProcessWeights,
}

impl PreparedWentzell {
    pub fn new(case: &WentzellCase, grid: Arc<TimeGrid>, ctx: &PhiKernelContext) -> Result<Self> {
        let kernels = CellKernels::new(grid, *ctx);
        let wx = ProcessWeights::for_process(&case.x, &kernels)?;
        Ok(Self {
            case: case.clone(),
            kernels,
            wx,
        })
    }
}

impl Residual for PreparedWentzell {
    fn residual(&self, path: &SamplePath) -> Result<f64> {
        check_path(path, &self.kernels)?;
        let c = &self.case;
        let grid = self.kernels.grid();
        let t = grid.points();
        let w = &path.values;
        let wx = &self.wx;
        let mut x = c.x.x0;
        let mut acc = CompensatedSum::new();
        for i in 0..grid.n_intervals() {
            let (dt, dw) = (grid.spacing(i), path.increment(i));
            let dx = wx.increment(i, dt, dw);
            let (a, b) = (wx.drift[i], wx.diffusion[i]);
            let (f1, f2) = (c.field_d1(t[i], w[i], x), c.field_d2(t[i], w[i], x));
            let (hv, h1) = (c.h_eval(0, x), c.h_eval(1, x));
            let po = self.kernels.past_overlap(i);
            let dc = self.kernels.diagonal_cell(i);
            let terms = [
                f1 * a * dt,
                b * (f1 * dw - f2 * wx.wick[i] - h1 * po),
                f2 * b * wx.diag[i],
                c.g_eval(0, x) * dt,
                hv * dw - h1 * wx.wick[i],
                h1 * b * dc,
                h1 * wx.diag[i],
            ];
            acc.add(c.field(t[i + 1], w[i + 1], x + dx) - c.field(t[i], w[i], x));
            for term in terms {
                acc.add(-term);
            }
            x += dx;
        }
        Ok(acc.value())
    }
}

/// `F_T(X_T) − [F_0(X_0) + eight-term discrete RHS]`
pub fn wentzell_residual(case: &WentzellCase, path: &SamplePath, ctx: &PhiKernelContext) -> Result<f64> {
    PreparedWentzell::new(case, path.grid.clone(), ctx)?.residual(path)
}

/// `F_{t_i}(X_{t_i})` at every node, from the closed form of the random field.
pub fn wentzell_closed_form(case: &WentzellCase, path: &SamplePath) -> Result<Vec<f64>> {
    let grid = path.grid.clone();
    let drift = case.x.drift.levels(&grid)?;
    let diffusion = case.x.diffusion.levels(&grid)?;
    let t = grid.points();
    let mut x = case.x.x0;
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        out.push(case.field(t[i], path.values[i], x));
        if i < grid.n_intervals() {
            x += drift[i] * grid.spacing(i) + diffusion[i] * path.increment(i);
        }
    }
    Ok(out)
}
