use super::model::SdeSpec;
use crate::error::{Error, Result};
use crate::fbm::SamplePath;
use std::fmt;

/// Time stepper for the random ODE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    Euler,
    /// Classical RK4; interior stages see `W` linearly interpolated between nodes.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FlowTransform(Stepper),
    DirectEuler,
    Picard,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::FlowTransform(Stepper::Euler) => "flow-euler",
            Method::FlowTransform(Stepper::Rk4) => "flow-rk4",
            Method::DirectEuler => "direct-euler",
            Method::Picard => "picard",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardInfo {
    /// Largest iteration count over all slabs.
    pub iterations: usize,
    /// Last sup-norm change, maximised over slabs.
    pub final_delta: f64,
    /// Sup-norm change per iteration, per slab.
    pub deltas: Vec<Vec<f64>>,
    /// Cells per slab.
    pub slab_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub path: SamplePath,
    pub y_path: SamplePath,
    pub method: Method,
    pub steps: usize,
    pub picard: Option<PicardInfo>,
}

impl SolverResult {
    fn assemble(sde: &SdeSpec, noise: &SamplePath, y: Vec<f64>, method: Method, picard: Option<PicardInfo>) -> Result<Self> {
        // X is built from Y so that X = Y + σW holds node by node.
        let x: Vec<f64> = y.iter().zip(&noise.values).map(|(y, w)| y + sde.sigma * w).collect();
        let grid = noise.grid.clone();
        Ok(Self {
            path: SamplePath::new(grid.clone(), x, format!("{method}/X"))?,
            y_path: SamplePath::new(grid.clone(), y, format!("{method}/Y"))?,
            method,
            steps: grid.n_intervals(),
            picard,
        })
    }

    /// CSV `t,X,Y,W`.
    pub fn write_csv<W: std::io::Write>(&self, noise: &SamplePath, mut out: W) -> std::io::Result<()> {
        use crate::fbm::io::fmt_f64;
        writeln!(out, "t,X,Y,W")?;
        for (i, t) in self.path.grid.points().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(*t),
                fmt_f64(self.path.values[i]),
                fmt_f64(self.y_path.values[i]),
                fmt_f64(noise.values[i])
            )?;
        }
        Ok(())
    }
}

fn check_noise(sde: &SdeSpec, noise: &SamplePath) -> Result<()> {
    let t = noise.grid.horizon();
    if (t - sde.horizon).abs() > 1e-12 * sde.horizon {
        return Err(Error::GridMismatch(format!(
            "noise horizon {t} differs from the SDE horizon {}",
            sde.horizon
        )));
    }
    if noise.values[0] != 0.0 {
        return Err(Error::Domain("noise path must start at 0".into()));
    }
    Ok(())
}

#[inline]
fn drift_checked(sde: &SdeSpec, t: f64, x: f64) -> Result<f64> {
    let b = sde.drift.eval(t, x);
    if b.is_finite() {
        Ok(b)
    } else {
        Err(Error::DriftBlowup { t, x })
    }
}

/// Integrates `Y' = b(t, Y + σW_t)`, `Y_0 = x0`, and returns `X = Y + σW`.
pub fn solve_flow_transform(sde: &SdeSpec, noise: &SamplePath, stepper: Stepper) -> Result<SolverResult> {
    check_noise(sde, noise)?;
    let t = noise.grid.points();
    let w = &noise.values;
    let s = sde.sigma;
    let f = |tt: f64, y: f64, ww: f64| drift_checked(sde, tt, y + s * ww);
    let mut y = Vec::with_capacity(t.len());
    y.push(sde.x0);
    for i in 0..t.len() - 1 {
        let (t0, t1) = (t[i], t[i + 1]);
        let dt = t1 - t0;
        let yi = y[i];
        let next = match stepper {
            Stepper::Euler => yi + dt * f(t0, yi, w[i])?,
            Stepper::Rk4 => {
                let tm = t0 + 0.5 * dt;
                let wm = 0.5 * (w[i] + w[i + 1]);
                let k1 = f(t0, yi, w[i])?;
                let k2 = f(tm, yi + 0.5 * dt * k1, wm)?;
                let k3 = f(tm, yi + 0.5 * dt * k2, wm)?;
                let k4 = f(t1, yi + dt * k3, w[i + 1])?;
                yi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            }
        };
        y.push(next);
    }
    SolverResult::assemble(sde, noise, y, Method::FlowTransform(stepper), None)
}

/// `X_{i+1} = X_i + b(t_i, X_i) Δt_i + σ ΔW_i`; `Y = X − σW`.
pub fn solve_direct_euler(sde: &SdeSpec, noise: &SamplePath) -> Result<SolverResult> {
    check_noise(sde, noise)?;
    let t = noise.grid.points();
    let mut x = Vec::with_capacity(t.len());
    x.push(sde.x0);
    for i in 0..t.len() - 1 {
        let b = drift_checked(sde, t[i], x[i])?;
        x.push(x[i] + b * (t[i + 1] - t[i]) + sde.sigma * noise.increment(i));
    }
    let y: Vec<f64> = x.iter().zip(&noise.values).map(|(x, w)| x - sde.sigma * w).collect();
    let grid = noise.grid.clone();
    Ok(SolverResult {
        path: SamplePath::new(grid.clone(), x, "direct-euler/X")?,
        y_path: SamplePath::new(grid.clone(), y, "direct-euler/Y")?,
        method: Method::DirectEuler,
        steps: grid.n_intervals(),
        picard: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Trapezoid sub-cells per grid cell, with `W` linearly interpolated.
    pub substeps: usize,
    /// The initial iterate on each slab is the slab's starting value plus this offset.
    pub initial_offset: f64,
}

impl PicardOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            substeps: 4,
            initial_offset: 0.0,
        }
    }
}

/// Picard iteration `Y^{k+1}(t) = Y(a) + ∫_a^t b(s, Y^k(s) + σW_s) ds` on time
/// slabs `[a, a + h]` with `h·L ≤ 1/2` (a single slab when `T·L < 1`), trapezoid
/// quadrature, stopping when the sup-norm change drops below `tol`.
pub fn solve_picard(sde: &SdeSpec, noise: &SamplePath, tol: f64, max_iter: usize) -> Result<SolverResult> {
    solve_picard_with(sde, noise, PicardOptions::new(tol, max_iter))
}

pub fn solve_picard_with(sde: &SdeSpec, noise: &SamplePath, opts: PicardOptions) -> Result<SolverResult> {
    check_noise(sde, noise)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 || opts.substeps == 0 {
        return Err(Error::Domain(format!(
            "Picard needs tol > 0, max_iter > 0 and substeps > 0, got {opts:?}"
        )));
    }
    let t = noise.grid.points();
    let w = &noise.values;
    let n = t.len() - 1;
    let m = opts.substeps;
    // Quadrature nodes: m sub-cells per cell.
    let mut qt = Vec::with_capacity(n * m + 1);
    let mut qw = Vec::with_capacity(n * m + 1);
    for i in 0..n {
        for j in 0..m {
            let a = j as f64 / m as f64;
            qt.push(t[i] + a * (t[i + 1] - t[i]));
            qw.push(w[i] + a * (w[i + 1] - w[i]));
        }
    }
    qt.push(t[n]);
    qw.push(w[n]);

    let l = sde.lipschitz;
    let slab_cells = if sde.horizon * l < 1.0 {
        n
    } else {
        let max_dt = noise.grid.spacings().fold(0.0, f64::max);
        ((0.5 / (l * max_dt)).floor() as usize).clamp(1, n)
    };

    let mut y = vec![0.0; qt.len()];
    y[0] = sde.x0;
    let mut info = PicardInfo {
        iterations: 0,
        final_delta: 0.0,
        deltas: Vec::new(),
        slab_cells,
    };
    let mut start = 0;
    while start < n {
        let end = (start + slab_cells).min(n);
        let (q0, q1) = (start * m, end * m);
        let y_start = y[q0];
        let mut cur: Vec<f64> = vec![y_start + opts.initial_offset; q1 - q0 + 1];
        cur[0] = y_start;
        let mut b = vec![0.0; cur.len()];
        let mut history = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_iter {
            for (k, bk) in b.iter_mut().enumerate() {
                *bk = drift_checked(sde, qt[q0 + k], cur[k] + sde.sigma * qw[q0 + k])?;
            }
            let mut next = Vec::with_capacity(cur.len());
            next.push(y_start);
            let mut integral = 0.0;
            for k in 0..cur.len() - 1 {
                integral += 0.5 * (b[k] + b[k + 1]) * (qt[q0 + k + 1] - qt[q0 + k]);
                next.push(y_start + integral);
            }
            let delta = next.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            history.push(delta);
            cur = next;
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        let last = *history.last().unwrap();
        if !converged {
            return Err(Error::NonConvergence {
                iterations: opts.max_iter,
                last_delta: last,
            });
        }
        info.iterations = info.iterations.max(history.len());
        info.final_delta = info.final_delta.max(last);
        info.deltas.push(history);
        y[q0..=q1].copy_from_slice(&cur);
        start = end;
    }
    let nodes: Vec<f64> = (0..=n).map(|i| y[i * m]).collect();
    SolverResult::assemble(sde, noise, nodes, Method::Picard, Some(info))
}

/// Solver selection for ensemble runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Flow(Stepper),
    DirectEuler,
    Picard(PicardOptions),
}

pub fn solve(sde: &SdeSpec, noise: &SamplePath, choice: SolverChoice) -> Result<SolverResult> {
    match choice {
        SolverChoice::Flow(s) => solve_flow_transform(sde, noise, s),
        SolverChoice::DirectEuler => solve_direct_euler(sde, noise),
        SolverChoice::Picard(o) => solve_picard_with(sde, noise, o),
    }
}
