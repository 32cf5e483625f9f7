//! Wick–Riemann sums `Σ F_{t_i} ⋄ (W_{t_{i+1}} − W_{t_i})` with left-point
//! evaluation, phi-derivatives of cylinder functionals `h(W_t)`, and the
//! exponential functional.
//!
//! For `F = h(W_{t_i})` the Wick product with an increment is rewritten as an
//! ordinary product minus the phi-derivative along the increment,
//! `F ⋄ ΔW_i = F ΔW_i − h'(W_{t_i}) ⟨1_{[0,t_i]}, 1_{[t_i,t_{i+1}]}⟩_φ`,
//! with the kernel weight evaluated in closed form.

use crate::error::{Error, Result};
use crate::fbm::{SamplePath, TimeGrid};
use crate::phi::{phi_norm_sq, CellKernels, PhiKernelContext, StepFunction};
use crate::stats::{MeanEstimate, MonteCarloReport};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// `h(W_t)` for `h` from a closed family with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Cylinder {
    /// `Σ c_k x^k`, degree at most 4.
    Polynomial(Vec<f64>),
    /// `scale · exp(rate · x)`
    Exp { scale: f64, rate: f64 },
    /// `scale · sin(rate · x)`
    Sin { scale: f64, rate: f64 },
    /// `scale · cos(rate · x)`
    Cos { scale: f64, rate: f64 },
}

impl Cylinder {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > 5 {
            return Err(Error::UnsupportedCase(format!(
                "polynomial cylinder needs 1..=5 coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Cylinder::Polynomial(coeffs))
    }

    pub fn constant(c: f64) -> Self {
        Cylinder::Polynomial(vec![c])
    }

    pub fn identity() -> Self {
        Cylinder::Polynomial(vec![0.0, 1.0])
    }

    /// `x^k`, `k <= 4`.
    pub fn monomial(k: usize) -> Result<Self> {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Self::polynomial(c)
    }

    pub fn exp(rate: f64) -> Self {
        Cylinder::Exp { scale: 1.0, rate }
    }

    pub fn sin(rate: f64) -> Self {
        Cylinder::Sin { scale: 1.0, rate }
    }

    pub fn cos(rate: f64) -> Self {
        Cylinder::Cos { scale: 1.0, rate }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        match self {
            Cylinder::Polynomial(c) => Cylinder::Polynomial(c.iter().map(|v| alpha * v).collect()),
            Cylinder::Exp { scale, rate } => Cylinder::Exp { scale: alpha * scale, rate: *rate },
            Cylinder::Sin { scale, rate } => Cylinder::Sin { scale: alpha * scale, rate: *rate },
            Cylinder::Cos { scale, rate } => Cylinder::Cos { scale: alpha * scale, rate: *rate },
        }
    }

    /// `h^{(order)}(x)` for `order` in 0..=2.
    pub fn derivative(&self, order: u32, x: f64) -> f64 {
        match self {
            Cylinder::Polynomial(c) => poly_derivative(c, order, x),
            Cylinder::Exp { scale, rate } => scale * rate.powi(order as i32) * (rate * x).exp(),
            Cylinder::Sin { scale, rate } => {
                let r = rate.powi(order as i32) * scale;
                match order % 4 {
                    0 => r * (rate * x).sin(),
                    1 => r * (rate * x).cos(),
                    2 => -r * (rate * x).sin(),
                    _ => -r * (rate * x).cos(),
                }
            }
            Cylinder::Cos { scale, rate } => {
                let r = rate.powi(order as i32) * scale;
                match order % 4 {
                    0 => r * (rate * x).cos(),
                    1 => -r * (rate * x).sin(),
                    2 => -r * (rate * x).cos(),
                    _ => r * (rate * x).sin(),
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Cylinder::Polynomial(c) => c[1..].iter().all(|v| *v == 0.0),
            Cylinder::Exp { scale, rate } | Cylinder::Sin { scale, rate } | Cylinder::Cos { scale, rate } => {
                *scale == 0.0 || *rate == 0.0 && !matches!(self, Cylinder::Sin { .. })
            }
        }
    }
}

pub(crate) fn poly_derivative(c: &[f64], order: u32, x: f64) -> f64 {
    let order = order as usize;
    let mut acc = 0.0;
    for k in (order..c.len()).rev() {
        let falling: f64 = ((k - order + 1)..=k).map(|m| m as f64).product();
        acc = acc * x + c[k] * falling;
    }
    acc
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cylinder::Polynomial(c) => {
                let nz: Vec<(usize, f64)> = c.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
                if nz.is_empty() {
                    return f.write_str("0");
                }
                if let [(k, v)] = nz[..] {
                    if k == 0 {
                        return write!(f, "{v}");
                    }
                    if v == 1.0 {
                        return match k {
                            0 => f.write_str("1"),
                            1 => f.write_str("x"),
                            _ => write!(f, "x^{k}"),
                        };
                    }
                }
                let terms: Vec<String> = nz.iter().map(|(k, v)| format!("{v}*x^{k}")).collect();
                f.write_str(&terms.join("+"))
            }
            Cylinder::Exp { scale, rate } => write!(f, "{}exp({rate}x)", scale_prefix(*scale)),
            Cylinder::Sin { scale, rate } => write!(f, "{}sin({rate}x)", scale_prefix(*scale)),
            Cylinder::Cos { scale, rate } => write!(f, "{}cos({rate}x)", scale_prefix(*scale)),
        }
    }
}

fn scale_prefix(scale: f64) -> String {
    if scale == 1.0 {
        String::new()
    } else {
        format!("{scale}*")
    }
}

fn parse_rate(arg: &str, whole: &str) -> Result<f64> {
    let arg = arg.trim();
    let arg = arg.strip_suffix('x').unwrap_or(arg).trim_end_matches('*').trim();
    if arg.is_empty() {
        return Ok(1.0);
    }
    arg.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad rate in `{whole}`")))
}

impl FromStr for Cylinder {
    type Err = Error;

    /// Accepts `1`, `x`, `x^k` (k <= 4), `exp(a x)`, `sin(a x)`, `cos(a x)`,
    /// e.g. `x^3`, `exp(0.5x)`, `sin(x)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace(' ', "");
        if t == "x" {
            return Ok(Cylinder::identity());
        }
        if let Some(k) = t.strip_prefix("x^") {
            let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            return Cylinder::monomial(k);
        }
        for (name, ctor) in [
            ("exp", Cylinder::exp as fn(f64) -> Cylinder),
            ("sin", Cylinder::sin),
            ("cos", Cylinder::cos),
        ] {
            if let Some(rest) = t.strip_prefix(name) {
                let inner = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Parse(format!("expected `{name}(a x)`, got `{s}`")))?;
                return Ok(ctor(parse_rate(inner, s)?));
            }
        }
        t.parse::<f64>()
            .map(Cylinder::constant)
            .map_err(|_| Error::Parse(format!("unknown cylinder functional `{s}`")))
    }
}

/// Levels of `f` on the cells of `grid`; `f`'s breakpoints must be grid points.
pub fn levels_on_grid(f: &StepFunction, grid: &TimeGrid) -> Result<Vec<f64>> {
    if f.horizon() > grid.horizon() * (1.0 + 1e-12) {
        return Err(Error::GridMismatch(format!(
            "integrand horizon {} exceeds path horizon {}",
            f.horizon(),
            grid.horizon()
        )));
    }
    let idx = grid.embed(f.grid())?;
    let mut levels = vec![0.0; grid.n_intervals()];
    for (k, c) in f.levels().iter().enumerate() {
        levels[idx[k]..idx[k + 1]].fill(*c);
    }
    Ok(levels)
}

/// `Σ_i f(t_i) (W_{t_{i+1}} − W_{t_i})`; for deterministic `f` the Wick product
/// is the ordinary product.
pub fn wick_integral_deterministic(f: &StepFunction, path: &SamplePath) -> Result<f64> {
    let idx = path.grid.embed(f.grid())?;
    Ok(f.levels()
        .iter()
        .enumerate()
        .map(|(k, c)| c * (path.values[idx[k + 1]] - path.values[idx[k]]))
        .sum())
}

/// `D_s^φ h(W_t) = h'(W_t) K(s, t)` with `t` the grid point `t_index`.
pub fn phi_derivative_cylinder(
    h: &Cylinder,
    t_index: usize,
    s: f64,
    path: &SamplePath,
    ctx: &PhiKernelContext,
) -> Result<f64> {
    let pts = path.grid.points();
    let t = *pts
        .get(t_index)
        .ok_or_else(|| Error::Domain(format!("t_index {t_index} outside the grid")))?;
    if !(0.0..=path.grid.horizon()).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, T]")));
    }
    Ok(h.d1(path.values[t_index]) * crate::phi::kernel_K(s, t, ctx)?)
}

/// Wick integral with its decomposition `value = raw_riemann − correction_total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WickIntegralResult {
    pub value: f64,
    pub correction_total: f64,
    pub raw_riemann: f64,
}

pub fn wick_integral_cylinder(h: &Cylinder, path: &SamplePath, ctx: &PhiKernelContext) -> Result<WickIntegralResult> {
    let kernels = CellKernels::new(path.grid.clone(), *ctx);
    wick_integral_cylinder_with(h, path, &kernels)
}

/// As [`wick_integral_cylinder`] with precomputed kernel weights for the path grid.
pub fn wick_integral_cylinder_with(h: &Cylinder, path: &SamplePath, kernels: &CellKernels) -> Result<WickIntegralResult> {
    ensure_kernel_grid(path, kernels)?;
    let w = &path.values;
    let mut raw = 0.0;
    let mut corr = 0.0;
    for i in 0..kernels.n_cells() {
        raw += h.eval(w[i]) * (w[i + 1] - w[i]);
        corr += h.d1(w[i]) * kernels.past_overlap(i);
    }
    Ok(WickIntegralResult {
        value: raw - corr,
        correction_total: corr,
        raw_riemann: raw,
    })
}

pub(crate) fn ensure_kernel_grid(path: &SamplePath, kernels: &CellKernels) -> Result<()> {
    if Arc::ptr_eq(&path.grid, kernels.grid()) || *path.grid == **kernels.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch("path grid differs from the kernel grid".into()))
    }
}

/// Largest `‖f‖²_φ` accepted by [`exponential_functional`].
pub const EXP_NORM_LIMIT: f64 = 700.0;

/// `ε(f) = exp(∫ f dW − ½‖f‖²_φ)`.
pub fn exponential_functional(f: &StepFunction, path: &SamplePath, ctx: &PhiKernelContext) -> Result<f64> {
    let norm = phi_norm_sq(f, ctx)?;
    if norm > EXP_NORM_LIMIT {
        return Err(Error::Overflow(norm));
    }
    Ok((wick_integral_deterministic(f, path)? - 0.5 * norm).exp())
}

/// Integrand of an isometry check.
#[derive(Debug, Clone, PartialEq)]
pub enum IsometryIntegrand {
    Deterministic(StepFunction),
    Cylinder(Cylinder),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryReport {
    /// `E[I²]` from squared Wick sums.
    pub lhs: MeanEstimate,
    /// `E[trace + norm]`.
    pub rhs: MeanEstimate,
    /// `E[Σ_{ij} D_{Φ1_j}F_i · D_{Φ1_i}F_j]`
    pub trace_term: MeanEstimate,
    /// `E[Σ_{ij} F_i F_j ⟨1_i, 1_j⟩_φ] = E‖1_{[0,T]}F‖²_φ`
    pub norm_term: MeanEstimate,
    /// Paired comparison of LHS and RHS on the same paths.
    pub paired: MonteCarloReport,
}

pub const MIN_ISOMETRY_PATHS: usize = 1000;

/// Second-moment identity for the discrete Wick integral,
/// `E[I²] = E[Σ_{ij} D_{Φ1_j}F_{t_i} D_{Φ1_i}F_{t_j} + Σ_{ij} F_{t_i}F_{t_j}⟨1_i,1_j⟩_φ]`,
/// where `1_i` is the indicator of cell `i`. Both sides are computed per path and
/// compared pairwise.
pub fn isometry_check(
    integrand: &IsometryIntegrand,
    ensemble: &[SamplePath],
    ctx: &PhiKernelContext,
) -> Result<IsometryReport> {
    if ensemble.len() < MIN_ISOMETRY_PATHS {
        return Err(Error::Domain(format!(
            "isometry check needs at least {MIN_ISOMETRY_PATHS} paths, got {}",
            ensemble.len()
        )));
    }
    for p in &ensemble[1..] {
        ensemble[0].ensure_same_grid(p)?;
    }
    let grid = ensemble[0].grid.clone();
    let kernels = CellKernels::new(grid.clone(), *ctx);
    let n = kernels.n_cells();
    let rect = kernels.rect_matrix();

    let per_path: Vec<(f64, f64, f64)> = match integrand {
        IsometryIntegrand::Deterministic(f) => {
            let levels = levels_on_grid(f, &grid)?;
            let norm = quadratic_form(&rect, &levels, n);
            ensemble
                .par_iter()
                .map(|p| {
                    let i: f64 = (0..n).map(|k| levels[k] * p.increment(k)).sum();
                    (i * i, 0.0, norm)
                })
                .collect()
        }
        IsometryIntegrand::Cylinder(h) => {
            let a = kernels.derivative_matrix();
            let mut trace_w = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    trace_w[i * n + j] = a[i * n + j] * a[j * n + i];
                }
            }
            ensemble
                .par_iter()
                .map(|p| {
                    let w = &p.values[..n];
                    let f: Vec<f64> = w.iter().map(|x| h.eval(*x)).collect();
                    let df: Vec<f64> = w.iter().map(|x| h.d1(*x)).collect();
                    let mut i_val = 0.0;
                    for k in 0..n {
                        i_val += f[k] * p.increment(k) - df[k] * kernels.past_overlap(k);
                    }
                    (i_val * i_val, quadratic_form(&trace_w, &df, n), quadratic_form(&rect, &f, n))
                })
                .collect()
        }
    };
    let lhs: Vec<f64> = per_path.iter().map(|v| v.0).collect();
    let trace: Vec<f64> = per_path.iter().map(|v| v.1).collect();
    let norm: Vec<f64> = per_path.iter().map(|v| v.2).collect();
    let rhs: Vec<f64> = per_path.iter().map(|v| v.1 + v.2).collect();
    Ok(IsometryReport {
        lhs: MeanEstimate::from_samples(&lhs),
        rhs: MeanEstimate::from_samples(&rhs),
        trace_term: MeanEstimate::from_samples(&trace),
        norm_term: MeanEstimate::from_samples(&norm),
        paired: MonteCarloReport::paired(&lhs, &rhs),
    })
}

fn quadratic_form(m: &[f64], v: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        if v[i] == 0.0 {
            continue;
        }
        let row = &m[i * n..i * n + n];
        let r: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
        s += v[i] * r;
    }
    s
}
