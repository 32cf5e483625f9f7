use super::PhiKernelContext;
use crate::error::{Error, Result};
use crate::fbm::io::fmt_f64;
use crate::fbm::TimeGrid;
use crate::stats::CompensatedSum;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

/// Piecewise-constant function `f(u) = c_i` on `[t_i, t_{i+1})`, zero outside `[0, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    grid: Arc<TimeGrid>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: Arc<TimeGrid>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != grid.n_intervals() {
            return Err(Error::GridMismatch(format!(
                "{} levels for {} cells",
                levels.len(),
                grid.n_intervals()
            )));
        }
        if levels.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("step levels must be finite".into()));
        }
        Ok(Self { grid, levels })
    }

    /// `c · 1_{[0, T)}`
    pub fn constant(horizon: f64, c: f64) -> Result<Self> {
        Self::new(Arc::new(TimeGrid::uniform(1, horizon)?), vec![c])
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::constant(horizon, 0.0)
    }

    /// `1_{[a, b)}` for `0 <= a < b`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b > a) {
            return Err(Error::Domain(format!("indicator needs 0 <= a < b, got [{a}, {b})")));
        }
        if a == 0.0 {
            Self::constant(b, 1.0)
        } else {
            Self::new(Arc::new(TimeGrid::new(vec![0.0, a, b])?), vec![0.0, 1.0])
        }
    }

    /// Projection of `f` onto `grid` by sampling at cell midpoints.
    pub fn from_fn_midpoint<F: Fn(f64) -> f64>(grid: Arc<TimeGrid>, f: F) -> Result<Self> {
        let levels = grid.points().windows(2).map(|w| f(0.5 * (w[0] + w[1]))).collect();
        Self::new(grid, levels)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let pts = self.grid.points();
        if t < 0.0 || t >= self.horizon() {
            return 0.0;
        }
        let i = pts.partition_point(|&p| p <= t);
        self.levels[i - 1]
    }

    /// The same function on a grid containing all of its breakpoints.
    pub fn refine(&self, grid: Arc<TimeGrid>) -> Result<Self> {
        self.grid.embed_check(&grid)?;
        let levels = grid.points().windows(2).map(|w| self.value_at(w[0])).collect();
        Self::new(grid, levels)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            levels: self.levels.iter().map(|c| alpha * c).collect(),
        }
    }

    /// Pointwise sum on the union of both grids.
    pub fn add(&self, other: &StepFunction) -> Self {
        let grid = Arc::new(self.grid.union(&other.grid));
        let levels = grid
            .points()
            .windows(2)
            .map(|w| self.value_at(w[0]) + other.value_at(w[0]))
            .collect();
        Self { grid, levels }
    }

    /// Nonzero jumps `(t_k, f(t_k+) − f(t_k−))`, including the drop at the horizon.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let pts = self.grid.points();
        let mut out = Vec::with_capacity(self.levels.len() + 1);
        let mut prev = 0.0;
        for (i, &c) in self.levels.iter().enumerate() {
            if c != prev {
                out.push((pts[i], c - prev));
            }
            prev = c;
        }
        if prev != 0.0 {
            out.push((self.horizon(), -prev));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t_left,t_right,level")?;
        for (w, c) in self.grid.points().windows(2).zip(&self.levels) {
            writeln!(out, "{},{},{}", fmt_f64(w[0]), fmt_f64(w[1]), fmt_f64(*c))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != "t_left,t_right,level" {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut points = vec![0.0];
        let mut levels = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
            let [left, right, level] = fields[..] else {
                return Err(Error::Parse(format!("line {}: expected 3 fields", k + 2)));
            };
            if left != *points.last().unwrap() {
                return Err(Error::Parse(format!("line {}: cells must be contiguous from 0", k + 2)));
            }
            points.push(right);
            levels.push(level);
        }
        Self::new(Arc::new(TimeGrid::new(points)?), levels)
    }
}

impl TimeGrid {
    fn embed_check(&self, fine: &TimeGrid) -> Result<()> {
        fine.embed(self).map(|_| ())
    }
}

/// `⟨f, g⟩_φ = ∫∫ f(u) g(v) φ(u, v) du dv`, exact for step functions.
///
/// Summing the rectangle integrals `Σ c_i d_j ∫∫_{cell_i × cell_j} φ` by parts
/// leaves only the jumps of `f` and `g`:
/// `⟨f, g⟩_φ = −½ Σ_{k,l} Δf_k Δg_l |t_k − t_l|^{2H}`.
pub fn inner_product_pc(f: &StepFunction, g: &StepFunction, ctx: &PhiKernelContext) -> Result<f64> {
    let jf = f.jumps();
    let jg = g.jumps();
    if (Arc::ptr_eq(&f.grid, &g.grid) || f.grid == g.grid) && f.grid.is_uniform() {
        return Ok(uniform_jump_sum(&jf, &jg, &f.grid, ctx));
    }
    let mut acc = CompensatedSum::new();
    for &(tk, dk) in &jf {
        let row: f64 = jg.iter().map(|&(tl, dl)| dl * ctx.pow2h(tk - tl)).sum();
        acc.add(dk * row);
    }
    Ok(-0.5 * acc.value())
}

/// Jump sum on a uniform lattice, where `|t_k − t_l|^{2H}` depends on `|k − l|` only.
fn uniform_jump_sum(jf: &[(f64, f64)], jg: &[(f64, f64)], grid: &TimeGrid, ctx: &PhiKernelContext) -> f64 {
    let n = grid.n_intervals();
    let step = grid.horizon() / n as f64;
    let table: Vec<f64> = (0..=n).map(|d| ctx.pow2h(d as f64 * step)).collect();
    let index = |t: f64| (t / step).round() as usize;
    let jg_idx: Vec<(usize, f64)> = jg.iter().map(|&(t, d)| (index(t), d)).collect();
    let mut acc = CompensatedSum::new();
    for &(tk, dk) in jf {
        let k = index(tk);
        let row: f64 = jg_idx.iter().map(|&(l, dl)| dl * table[k.abs_diff(l)]).sum();
        acc.add(dk * row);
    }
    -0.5 * acc.value()
}

/// `‖f‖²_φ`
pub fn phi_norm_sq(f: &StepFunction, ctx: &PhiKernelContext) -> Result<f64> {
    Ok(inner_product_pc(f, f, ctx)?.max(0.0))
}

/// `(Φg)(t) = ∫_0^∞ φ(t, u) g(u) du`, summed cellwise with `K` antiderivatives.
pub fn phi_operator(g: &StepFunction, t: f64, ctx: &PhiKernelContext) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("phi_operator needs t >= 0, got {t}")));
    }
    let pts = g.grid.points();
    Ok(g.levels
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| c * (ctx.k(t, pts[i + 1]) - ctx.k(t, pts[i])))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{covariance, HurstParameter};

    fn ctx(h: f64) -> PhiKernelContext {
        PhiKernelContext::from_value(h).unwrap()
    }

    /// Direct double sum over cells of the common refinement.
    fn cellwise(f: &StepFunction, g: &StepFunction, c: &PhiKernelContext) -> f64 {
        let u = f.grid.union(&g.grid);
        let p = u.points();
        let mut s = 0.0;
        for i in 0..p.len() - 1 {
            for j in 0..p.len() - 1 {
                s += f.value_at(p[i]) * g.value_at(p[j]) * c.rect(p[i], p[i + 1], p[j], p[j + 1]);
            }
        }
        s
    }

    #[test]
    fn indicator_norms_and_products() {
        let c = ctx(0.75);
        let one = StepFunction::indicator(0.0, 1.0).unwrap();
        assert!((phi_norm_sq(&one, &c).unwrap() - 1.0).abs() < 1e-15);
        let two = one.scaled(2.0);
        assert!((phi_norm_sq(&two, &c).unwrap() - 4.0).abs() < 1e-14);
        let long = StepFunction::indicator(0.0, 2.0).unwrap();
        assert!((phi_norm_sq(&long, &c).unwrap() - 2.828427).abs() < 1e-6);
        let a = StepFunction::indicator(0.0, 0.5).unwrap();
        let b = StepFunction::indicator(0.5, 1.0).unwrap();
        assert!((inner_product_pc(&a, &b, &c).unwrap() - 0.146447).abs() < 1e-6);
        let z = StepFunction::zero(1.0).unwrap();
        assert_eq!(inner_product_pc(&a, &z, &c).unwrap(), 0.0);
    }

    #[test]
    fn jump_form_equals_cell_double_sum() {
        let c = ctx(0.62);
        let f = StepFunction::new(
            Arc::new(TimeGrid::new(vec![0.0, 0.2, 0.35, 0.8, 1.1]).unwrap()),
            vec![1.0, -0.5, 2.0, 0.3],
        )
        .unwrap();
        let g = StepFunction::new(
            Arc::new(TimeGrid::new(vec![0.0, 0.5, 0.9]).unwrap()),
            vec![0.7, -1.3],
        )
        .unwrap();
        let a = inner_product_pc(&f, &g, &c).unwrap();
        let b = cellwise(&f, &g, &c);
        assert!((a - b).abs() < 1e-13 * b.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn indicator_inner_product_is_covariance() {
        let c = ctx(0.9);
        let f = StepFunction::indicator(0.0, 0.37).unwrap();
        let g = StepFunction::indicator(0.0, 1.9).unwrap();
        let r = covariance(0.37, 1.9, HurstParameter::new(0.9).unwrap()).unwrap();
        assert!((inner_product_pc(&f, &g, &c).unwrap() - r).abs() < 1e-12 * r);
    }

    #[test]
    fn phi_operator_examples() {
        let c = ctx(0.7);
        let s = 0.6;
        let g = StepFunction::indicator(0.0, s).unwrap();
        for t in [0.0, 0.3, 0.6, 1.2] {
            assert!((phi_operator(&g, t, &c).unwrap() - c.k(t, s)).abs() < 1e-15);
        }
        let z = StepFunction::zero(1.0).unwrap();
        assert_eq!(phi_operator(&z, 0.4, &c).unwrap(), 0.0);
        assert!(phi_operator(&g, -1.0, &c).is_err());
    }

    #[test]
    fn phi_operator_is_linear() {
        let c = ctx(0.8);
        let f = StepFunction::new(Arc::new(TimeGrid::uniform(4, 1.0).unwrap()), vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let g = StepFunction::new(Arc::new(TimeGrid::uniform(3, 1.2).unwrap()), vec![0.3, -0.2, 1.1]).unwrap();
        let fg = f.add(&g);
        for t in [0.1, 0.5, 0.77, 1.5] {
            let lhs = phi_operator(&fg, t, &c).unwrap();
            let rhs = phi_operator(&f, t, &c).unwrap() + phi_operator(&g, t, &c).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn value_at_and_refine() {
        let f = StepFunction::new(Arc::new(TimeGrid::uniform(2, 1.0).unwrap()), vec![3.0, 4.0]).unwrap();
        assert_eq!(f.value_at(0.0), 3.0);
        assert_eq!(f.value_at(0.5), 4.0);
        assert_eq!(f.value_at(1.0), 0.0);
        let r = f.refine(Arc::new(TimeGrid::uniform(4, 1.0).unwrap())).unwrap();
        assert_eq!(r.levels(), &[3.0, 3.0, 4.0, 4.0]);
        assert!(f.refine(Arc::new(TimeGrid::uniform(3, 1.0).unwrap())).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = StepFunction::new(Arc::new(TimeGrid::new(vec![0.0, 0.3, 1.0]).unwrap()), vec![0.1, -2.5]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(StepFunction::read_csv(buf.as_slice()).unwrap(), f);
        assert!(StepFunction::read_csv("t_left,t_right,level\n0.1,0.2,1\n".as_bytes()).is_err());
    }
}
