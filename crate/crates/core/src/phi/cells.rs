use super::PhiKernelContext;
use crate::fbm::TimeGrid;
use std::sync::Arc;

/// Exact phi-kernel weights attached to the cells `[t_i, t_{i+1})` of a grid.
///
/// These are the only kernel quantities the left-point Wick–Riemann sums need;
/// they are computed once per grid and shared by every path.
#[derive(Debug, Clone)]
pub struct CellKernels {
    grid: Arc<TimeGrid>,
    ctx: PhiKernelContext,
    past_overlap: Vec<f64>,
    self_half: Vec<f64>,
}

impl CellKernels {
    pub fn new(grid: Arc<TimeGrid>, ctx: PhiKernelContext) -> Self {
        let pts = grid.points();
        let mut past_overlap = Vec::with_capacity(grid.n_intervals());
        let mut self_half = Vec::with_capacity(grid.n_intervals());
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            past_overlap.push(0.5 * (ctx.pow2h(b) - ctx.pow2h(a) - ctx.pow2h(b - a)));
            self_half.push(0.5 * ctx.pow2h(b - a));
        }
        Self {
            grid,
            ctx,
            past_overlap,
            self_half,
        }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn ctx(&self) -> &PhiKernelContext {
        &self.ctx
    }

    pub fn n_cells(&self) -> usize {
        self.past_overlap.len()
    }

    /// `⟨1_{[0,t_i]}, 1_{[t_i,t_{i+1}]}⟩_φ = R(t_i, t_{i+1}) − t_i^{2H}`: the Wick
    /// correction weight `D_{Φ1_i} W_{t_i}`.
    pub fn past_overlap(&self, i: usize) -> f64 {
        self.past_overlap[i]
    }

    /// `∫_{t_i}^{t_{i+1}} ∫_{t_i}^s φ(s, v) dv ds = ½ Δ_i^{2H}`.
    pub fn self_half(&self, i: usize) -> f64 {
        self.self_half[i]
    }

    /// `∫_{t_i}^{t_{i+1}} K(s, s) ds = ½(t_{i+1}^{2H} − t_i^{2H})`, the cell integral
    /// of `D_s^φ W_s`.
    pub fn diagonal_cell(&self, i: usize) -> f64 {
        self.past_overlap[i] + self.self_half[i]
    }

    /// `∫∫_{cell_i × cell_j} φ`
    pub fn rect(&self, i: usize, j: usize) -> f64 {
        let p = self.grid.points();
        self.ctx.rect(p[i], p[i + 1], p[j], p[j + 1])
    }

    /// Row-major `n × n` matrix of [`CellKernels::rect`].
    pub fn rect_matrix(&self) -> Vec<f64> {
        let n = self.n_cells();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.rect(i, j);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    }

    /// `A_{ij} = ∫_{cell_j} K(v, t_i) dv = R(t_{j+1}, t_i) − R(t_j, t_i)`, the
    /// directional derivative `D_{Φ1_j} W_{t_i}`; row-major `n × n`.
    pub fn derivative_matrix(&self) -> Vec<f64> {
        let n = self.n_cells();
        let p = self.grid.points();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = self.ctx.rect(0.0, p[i], p[j], p[j + 1]);
            }
        }
        m
    }

    /// For a deterministic integrand with cell levels `a`, returns per cell
    /// `(Σ_{k<i} a_k rect(k, i), Σ_{k<i} a_k rect(k, i) + a_i ½Δ_i^{2H})`:
    /// the Wick correction weight `D_{Φ1_i} η_{t_i}` and the exact cell integral
    /// `∫_{cell_i} D_s^φ η_s ds` of `η = ∫ a dW`.
    pub fn integrand_weights(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_cells();
        assert_eq!(a.len(), n);
        let mut wick = vec![0.0; n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let past: f64 = (0..i).filter(|&k| a[k] != 0.0).map(|k| a[k] * self.rect(k, i)).sum();
            wick[i] = past;
            diag[i] = past + a[i] * self.self_half[i];
        }
        (wick, diag)
    }
}
