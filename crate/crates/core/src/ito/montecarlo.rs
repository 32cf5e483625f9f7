use super::residual::Residual;
use crate::error::{Error, Result};
use crate::fbm::{SamplePath, TimeGrid};
use crate::phi::{phi_norm_sq, PhiKernelContext, StepFunction};
use crate::stats::{MeanEstimate, MonteCarloReport};
use crate::wick::{levels_on_grid, Cylinder, EXP_NORM_LIMIT};
use rayon::prelude::*;

pub(crate) fn common_grid(ensemble: &[SamplePath]) -> Result<&TimeGrid> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Domain("empty ensemble".into()))?;
    for p in &ensemble[1..] {
        first.ensure_same_grid(p)?;
    }
    Ok(&first.grid)
}

/// Per-path residuals over an ensemble, in ensemble order.
pub fn residuals<R: Residual>(op: &R, ensemble: &[SamplePath]) -> Result<Vec<f64>> {
    ensemble.par_iter().map(|p| op.residual(p)).collect()
}

/// Mean residual against 0.
pub fn residual_expectation<R: Residual>(op: &R, ensemble: &[SamplePath]) -> Result<MonteCarloReport> {
    common_grid(ensemble)?;
    let r = residuals(op, ensemble)?;
    Ok(MonteCarloReport::from_mean(MeanEstimate::from_samples(&r), 0.0))
}

/// `√(mean r²)`
pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `∫_0^{t_i} (Φg)(s) ds = ⟨1_{[0,t_i]}, g⟩_φ` at every node of `grid`.
pub fn girsanov_shift(g: &StepFunction, grid: &TimeGrid, ctx: &PhiKernelContext) -> Vec<f64> {
    let c = g.grid().points();
    grid.points()
        .iter()
        .map(|&t| {
            g.levels()
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| v * ctx.rect(0.0, t, c[k], c[k + 1]))
                .sum()
        })
        .collect()
}

/// `E[F(W + ∫_0^· Φg)]` against `E[F(W) ε(g)]` for `F = h(W_T)`, paired on
/// the same paths.
pub fn girsanov_check(
    h: &Cylinder,
    g: &StepFunction,
    ensemble: &[SamplePath],
    ctx: &PhiKernelContext,
) -> Result<MonteCarloReport> {
    let grid = common_grid(ensemble)?;
    let norm = phi_norm_sq(g, ctx)?;
    if norm > EXP_NORM_LIMIT {
        return Err(Error::Overflow(norm));
    }
    let levels = levels_on_grid(g, grid)?;
    let shift = *girsanov_shift(g, grid, ctx).last().unwrap();
    let (lhs, rhs): (Vec<f64>, Vec<f64>) = ensemble
        .par_iter()
        .map(|p| {
            let w_t = p.terminal();
            let i: f64 = levels.iter().enumerate().map(|(k, a)| a * p.increment(k)).sum();
            let eps = (i - 0.5 * norm).exp();
            (h.eval(w_t + shift), h.eval(w_t) * eps)
        })
        .unzip();
    Ok(MonteCarloReport::paired(&lhs, &rhs))
}

/// Exact `f(0) + H ∫_0^t s^{2H−1} E[f''(W_s)] ds = f(0) + ½ ∫_0^{t^{2H}} E[f''(N(0,u))] du`.
pub fn expectation_identity_rhs(h: &Cylinder, t: f64, ctx: &PhiKernelContext) -> f64 {
    let v = t.powf(ctx.two_h());
    match h {
        Cylinder::Polynomial(c) => {
            // E[f''(N(0,u))] = Σ_{k≥2} c_k k(k−1) E[N^{k−2}], E[N^{2m}] = (2m−1)!! u^m.
            let mut acc = c[0];
            for (k, ck) in c.iter().enumerate().skip(2) {
                let m = k - 2;
                if m % 2 == 1 {
                    continue;
                }
                let half = m / 2;
                let dfact: f64 = (1..=m).step_by(2).map(|j| j as f64).product();
                let coef = ck * (k * (k - 1)) as f64 * dfact;
                acc += 0.5 * coef * v.powi(half as i32 + 1) / (half + 1) as f64;
            }
            acc
        }
        Cylinder::Exp { scale, rate } => scale * (0.5 * rate * rate * v).exp(),
        Cylinder::Sin { .. } => 0.0,
        Cylinder::Cos { scale, rate } => scale * (-0.5 * rate * rate * v).exp(),
    }
}

/// Registered identities `E[f(W_t)] = f(0) + H∫_0^t s^{2H−1}E[f''(W_s)]ds` by name.
pub const IDENTITY_REGISTRY: [&str; 7] = ["x", "x^2", "x^3", "x^4", "exp", "sin", "cos"];

/// Looks `name` up among the registered identities; `exp`, `sin`, `cos`
/// accept an optional rate, e.g. `exp(0.5x)`.
pub fn identity_by_name(name: &str) -> Result<Cylinder> {
    let base = name.trim().split('(').next().unwrap_or("");
    if !IDENTITY_REGISTRY.contains(&base) {
        return Err(Error::UnknownIdentity(name.to_string()));
    }
    let full = if matches!(base, "exp" | "sin" | "cos") && !name.contains('(') {
        format!("{base}(x)")
    } else {
        name.to_string()
    };
    full.parse().map_err(|_| Error::UnknownIdentity(name.to_string()))
}

/// Monte Carlo `E[f(W_T)]` at the ensemble horizon against the exact right side.
pub fn expectation_identity_check(
    identity: &str,
    ensemble: &[SamplePath],
    ctx: &PhiKernelContext,
) -> Result<MonteCarloReport> {
    let h = identity_by_name(identity)?;
    let grid = common_grid(ensemble)?;
    let vals: Vec<f64> = ensemble.iter().map(|p| h.eval(p.terminal())).collect();
    Ok(MonteCarloReport::from_mean(
        MeanEstimate::from_samples(&vals),
        expectation_identity_rhs(&h, grid.horizon(), ctx),
    ))
}
