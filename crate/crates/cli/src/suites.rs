//! The verification suites. Each suite computes report rows and artifacts in
//! memory; [`run_suite`] writes everything once at the end.

use crate::config::{ExperimentConfig, Suite};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, SuiteTiming};
use crate::plot::{render_heatmap, render_loglog};
use crate::report::{write_report_csv, ReportRow};
use fracwick_core::fbm::io::{fmt_f64, write_ensemble_csv};
use fracwick_core::fbm::{empirical_covariance, covariance, Ensemble, Generator, SamplePath, TimeGrid};
use fracwick_core::ito::{
    convergence_study, girsanov_check, residual_expectation, residuals, ConvergenceTable, DriftDiffusion,
    Coefficient, ItoCase, PreparedIto, PreparedProduct, PreparedWentzell, ResidualOp, SpaceTimeFn, WentzellCase,
};
use fracwick_core::phi::{PhiKernelContext, StepFunction};
use fracwick_core::sde::{
    fou_variance, sde_mc_stats, solve, CheckpointOracle, PicardOptions, SdeSpec, SolverChoice, Stepper,
    FOU_ORACLE_CELLS,
};
use fracwick_core::stats::{ks_two_sample, MeanEstimate, MonteCarloReport, Z_THRESHOLD};
use fracwick_core::wick::{
    exponential_functional, isometry_check, Cylinder, IsometryIntegrand,
};
use fracwick_core::ito::expectation_identity_rhs;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

/// A file produced by a suite, written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub rows: Vec<ReportRow>,
    pub artifacts: Vec<Artifact>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ReportRow::passed)
    }

    pub fn failing(&self) -> Vec<String> {
        self.rows.iter().filter(|r| !r.passed()).map(ReportRow::id).collect()
    }
}

/// Largest number of grid nodes per axis in covariance checks and heatmaps.
const MAX_COV_NODES: usize = 65;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    phi: PhiKernelContext,
    rows: Vec<ReportRow>,
    artifacts: Vec<Artifact>,
}

impl Ctx<'_> {
    fn row(&mut self, r: ReportRow) {
        self.rows.push(r);
    }

    fn artifact(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.artifacts.push(Artifact { name: name.into(), bytes });
    }

    fn fine_grid(&self) -> CliResult<TimeGrid> {
        Ok(TimeGrid::uniform(self.cfg.finest(), self.cfg.horizon)?)
    }

    fn noise(&self) -> CliResult<Ensemble> {
        let g: Generator = self.cfg.cases.noise.parse()?;
        Ok(Ensemble::generate(g, &self.fine_grid()?, self.phi.hurst(), self.cfg.seed, self.cfg.n_paths)?)
    }

    /// The fine ensemble restricted to each configured grid size, coarsest first.
    fn ladder(&self, fine: &Ensemble) -> CliResult<Vec<Ensemble>> {
        self.cfg
            .grid_sizes
            .iter()
            .map(|&n| Ok(fine.restrict(&fine.grid.coarsen(self.cfg.finest() / n)?)?))
            .collect()
    }

    fn convergence_artifacts(&mut self, stem: &str, title: &str, table: &ConvergenceTable) -> CliResult<()> {
        let mut csv = String::from("n,rms_residual\n");
        for r in &table.rows {
            csv.push_str(&format!("{},{}\n", r.n, fmt_f64(r.rms_residual)));
        }
        self.artifact(format!("{stem}.csv"), csv.into_bytes());
        if self.cfg.plots {
            match render_loglog(table, title) {
                Ok(svg) => self.artifact(format!("{stem}.svg"), svg.into_bytes()),
                // All-zero residuals have nothing to show on log axes.
                Err(CliError::Plot(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Strictly decreasing RMS ladder, recorded as a row plus artifacts.
    fn ladder_row(&mut self, name: &str, op: &ResidualOp, fine: &Ensemble) -> CliResult<ConvergenceTable> {
        let table = convergence_study(op, &self.cfg.grid_sizes, &fine.paths, &self.phi)?;
        let last = table.rows.last().unwrap();
        self.row(ReportRow::check(
            format!("{name}/rms-decreasing"),
            fine.len(),
            last.n,
            table.slope.unwrap_or(f64::NAN),
            f64::NAN,
            table.strictly_decreasing(),
        ));
        self.convergence_artifacts(&format!("convergence_{}", slug(name)), name, &table)?;
        Ok(table)
    }
}

/// File-name-safe form of a case name.
fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '-' => c,
            '^' => 'p',
            '*' => 'x',
            '.' => 'd',
            _ => '_',
        })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_string()
}

/// True when the discrete Itô residual of `h(W)` has mean exactly zero: for
/// degree ≤ 2 the Wick corrections make every cell unbiased, and for odd `h`
/// the residual is odd under `W → −W`.
fn ito_mean_is_exact(h: &Cylinder) -> bool {
    match h {
        Cylinder::Polynomial(c) => c.len() <= 3 || c.iter().step_by(2).all(|v| *v == 0.0),
        Cylinder::Sin { .. } => true,
        _ => false,
    }
}

fn parse_cylinder(s: &str) -> CliResult<Cylinder> {
    s.parse().map_err(|e: fracwick_core::Error| CliError::Config(e.to_string()))
}

/// Runs `suite` without touching the file system.
pub fn execute(cfg: &ExperimentConfig, suite: Suite) -> CliResult<SuiteOutput> {
    cfg.validate(suite)?;
    let mut cx = Ctx {
        cfg,
        phi: PhiKernelContext::from_value(cfg.hurst).or_else(|e| {
            if suite == Suite::Generate {
                // Kernel quantities are unused by `generate`; any H in (0, 1) is fine.
                PhiKernelContext::from_value(0.75)
            } else {
                Err(e)
            }
        })?,
        rows: Vec::new(),
        artifacts: Vec::new(),
    };
    match suite {
        Suite::Generate => generate(&mut cx)?,
        Suite::VerifyIto => verify_ito(&mut cx)?,
        Suite::VerifyProductRule => verify_product(&mut cx)?,
        Suite::VerifyWentzell => verify_wentzell(&mut cx)?,
        Suite::Girsanov => girsanov(&mut cx)?,
        Suite::Isometry => isometry(&mut cx)?,
        Suite::SolveSde => solve_sde(&mut cx)?,
        Suite::Converge => converge(&mut cx)?,
    }
    let mut report = Vec::new();
    write_report_csv(&mut report, &cx.rows)?;
    cx.artifacts.insert(
        0,
        Artifact {
            name: format!("{}_report.csv", suite.name()),
            bytes: report,
        },
    );
    Ok(SuiteOutput {
        suite,
        rows: cx.rows,
        artifacts: cx.artifacts,
    })
}

/// Validates, runs the suite, then writes every artifact and the manifest.
/// Configuration errors leave the output directory untouched.
pub fn run_suite(cfg: &ExperimentConfig, suite: Suite, config_bytes: &[u8]) -> CliResult<(RunManifest, SuiteOutput)> {
    cfg.validate(suite)?;
    let start = Instant::now();
    let out = execute(cfg, suite)?;
    let timing = SuiteTiming {
        suite: suite.name().to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest = RunManifest::new(cfg, config_bytes, &out, vec![timing]);
    write_outputs(&cfg.output_dir, &out, &manifest)?;
    Ok((manifest, out))
}

pub fn write_outputs(dir: &Path, out: &SuiteOutput, manifest: &RunManifest) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for a in &out.artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    std::fs::write(dir.join(format!("{}_manifest.json", out.suite.name())), manifest.to_json()?)?;
    Ok(())
}

fn generate(cx: &mut Ctx<'_>) -> CliResult<()> {
    let cfg = cx.cfg;
    let grid = cx.fine_grid()?;
    let hurst = fracwick_core::fbm::HurstParameter::new(cfg.hurst)?;
    let n = grid.n_intervals();
    let stride = n.div_ceil(MAX_COV_NODES - 1).max(1);
    let stride = (stride..=n).find(|s| n % s == 0).unwrap_or(n);
    let coarse = grid.coarsen(stride)?;
    let mut terminals: Vec<(Generator, Vec<f64>)> = Vec::new();
    let mut heatmap: Option<(Vec<f64>, usize)> = None;
    for name in &cfg.cases.generators {
        let g: Generator = name.parse()?;
        // Distinct streams per generator so that cross-agreement tests compare
        // independent samples.
        let offset = Generator::ALL.iter().position(|x| *x == g).unwrap() as u64;
        let ens = Ensemble::generate(g, &grid, hurst, cfg.seed.wrapping_add(offset), cfg.n_paths)?;
        let mut csv = Vec::new();
        write_ensemble_csv(&mut csv, &ens.paths)?;
        cx.artifact(format!("paths_{}.csv", g.name()), csv);

        let sub = ens.restrict(&coarse)?;
        let emp = empirical_covariance(&sub.paths)?;
        let pts = coarse.points();
        let dim = emp.dim();
        let mut max_z: f64 = 0.0;
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let oracle = covariance(pts[i], pts[j], hurst)?;
                let r = MonteCarloReport::new(emp.mean(i, j), oracle, emp.stderr(i, j), ens.len());
                max_z = max_z.max(r.z_score.abs());
                values[i * dim + j] = emp.mean(i, j);
            }
        }
        cx.row(ReportRow::check(
            format!("generate/{g}/covariance-max-abs-z"),
            ens.len(),
            n,
            max_z,
            Z_THRESHOLD,
            max_z < Z_THRESHOLD,
        ));
        if heatmap.is_none() {
            heatmap = Some((values, dim));
        }
        terminals.push((g, ens.terminal_values()));
    }
    for a in 0..terminals.len() {
        for b in a + 1..terminals.len() {
            let t = ks_two_sample(&terminals[a].1, &terminals[b].1);
            cx.row(ReportRow::check(
                format!("generate/{}-vs-{}/ks-terminal", terminals[a].0, terminals[b].0),
                cfg.n_paths,
                n,
                t.p_value,
                0.01,
                t.p_value > 0.01,
            ));
        }
    }
    if let Some((values, dim)) = heatmap {
        let title = format!("Empirical covariance, H = {}, {} nodes", cfg.hurst, dim);
        cx.artifact("covariance_heatmap.svg", render_heatmap(&values, dim, &title)?.into_bytes());
    }
    Ok(())
}

fn verify_ito(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    let ladder = cx.ladder(&fine)?;
    let t = cx.cfg.horizon;
    for name in cx.cfg.cases.functions.clone() {
        let h = parse_cylinder(&name)?;
        let case = ItoCase::unit(SpaceTimeFn::Space(h.clone()))?;
        if ito_mean_is_exact(&h) {
            for e in &ladder {
                let op = PreparedIto::new(&case, e.grid.clone(), &cx.phi)?;
                let rep = residual_expectation(&op, &e.paths)?;
                cx.row(ReportRow::from_mc(format!("ito/{name}/mean-residual"), e.grid.n_intervals(), &rep));
            }
        }
        let vals: Vec<f64> = fine.paths.iter().map(|p| h.eval(p.terminal())).collect();
        let rep = MonteCarloReport::from_mean(MeanEstimate::from_samples(&vals), expectation_identity_rhs(&h, t, &cx.phi));
        cx.row(ReportRow::from_mc(format!("ito/{name}/expectation-identity"), cx.cfg.finest(), &rep));
        if cx.cfg.grid_sizes.len() >= 3 {
            cx.ladder_row(&format!("ito/{name}"), &ResidualOp::Ito(case), &fine)?;
        }
    }
    Ok(())
}

fn product_case(name: &str) -> (DriftDiffusion, DriftDiffusion) {
    match name {
        "x*w" => (DriftDiffusion::fbm(), DriftDiffusion::fbm()),
        "x*const" => (
            DriftDiffusion::new(0.4, Coefficient::Const(-0.3), Coefficient::Const(1.5)),
            DriftDiffusion::constant(2.5),
        ),
        _ => (DriftDiffusion::fbm(), DriftDiffusion::time()),
    }
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn verify_product(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    let ladder = cx.ladder(&fine)?;
    for name in cx.cfg.cases.product.clone() {
        let (x, y) = product_case(&name);
        for e in &ladder {
            let op = PreparedProduct::new(&x, &y, e.grid.clone(), &cx.phi)?;
            let n = e.grid.n_intervals();
            if name == "x*const" {
                let m = max_abs(&residuals(&op, &e.paths)?);
                cx.row(ReportRow::check(format!("product/{name}/exact-zero"), e.len(), n, m, 0.0, m == 0.0));
            } else {
                let rep = residual_expectation(&op, &e.paths)?;
                cx.row(ReportRow::from_mc(format!("product/{name}/mean-residual"), n, &rep));
            }
        }
        if name != "x*const" && cx.cfg.grid_sizes.len() >= 3 {
            cx.ladder_row(&format!("product/{name}"), &ResidualOp::ProductRule(x, y), &fine)?;
        }
    }
    Ok(())
}

fn verify_wentzell(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    let ladder = cx.ladder(&fine)?;
    let t = cx.cfg.horizon;
    // Hypothesis status is informational and kept out of the verdicts.
    let mut hyp = String::from("case,index,condition,status\n");
    for name in cx.cfg.cases.wentzell.clone() {
        let case = match name.as_str() {
            "x-times-w" => WentzellCase::x_times_w(),
            "constant" => WentzellCase::constant(3.0),
            // X_t = 0.5 + t, F = x + 2x²
            _ => WentzellCase::deterministic(vec![0.0, 1.0, 2.0], 0.5, 1.0)?,
        };
        for h in case.hypotheses() {
            hyp.push_str(&format!("{name},{},\"{}\",{}\n", h.index, h.condition, h.status));
        }
        for e in &ladder {
            let op = PreparedWentzell::new(&case, e.grid.clone(), &cx.phi)?;
            let n = e.grid.n_intervals();
            match name.as_str() {
                "constant" => {
                    let m = max_abs(&residuals(&op, &e.paths)?);
                    cx.row(ReportRow::check(format!("wentzell/{name}/exact-zero"), e.len(), n, m, 0.0, m == 0.0));
                }
                "deterministic" => {
                    // Left-point error ½F''Δ² per cell with F'' = 4.
                    let r = residuals(&op, &e.paths)?;
                    let oracle = 2.0 * t * t / n as f64;
                    let worst = r.iter().fold(0.0f64, |m, v| m.max((v - oracle).abs()));
                    cx.row(ReportRow::check(
                        format!("wentzell/{name}/first-order-error"),
                        e.len(),
                        n,
                        r[0],
                        oracle,
                        worst <= 1e-12 * oracle.max(1.0),
                    ));
                }
                _ => {
                    let rep = residual_expectation(&op, &e.paths)?;
                    cx.row(ReportRow::from_mc(format!("wentzell/{name}/mean-residual"), n, &rep));
                }
            }
        }
        if name != "constant" && cx.cfg.grid_sizes.len() >= 3 {
            cx.ladder_row(&format!("wentzell/{name}"), &ResidualOp::Wentzell(case), &fine)?;
        }
    }
    cx.artifact("wentzell_hypotheses.csv", hyp.into_bytes());
    Ok(())
}

fn girsanov(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    let t = cx.cfg.horizon;
    let n = cx.cfg.finest();
    let mut levels: Vec<f64> = Vec::new();
    for (name, c) in cx.cfg.cases.girsanov.clone() {
        let h = parse_cylinder(&name)?;
        let g = StepFunction::constant(t, c)?;
        let rep = girsanov_check(&h, &g, &fine.paths, &cx.phi)?;
        cx.row(ReportRow::from_mc(format!("girsanov/{name}/shift-{c}"), n, &rep));
        if !levels.contains(&c) {
            levels.push(c);
        }
    }
    for c in levels {
        let g = StepFunction::constant(t, c)?;
        let eps = fine
            .paths
            .par_iter()
            .map(|p| exponential_functional(&g, p, &cx.phi))
            .collect::<Result<Vec<f64>, _>>()?;
        let rep = MonteCarloReport::from_mean(MeanEstimate::from_samples(&eps), 1.0);
        cx.row(ReportRow::from_mc(format!("girsanov/exponential-mean/shift-{c}"), n, &rep));
    }
    Ok(())
}

fn isometry(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    let ladder = cx.ladder(&fine)?;
    let t = cx.cfg.horizon;
    for name in cx.cfg.cases.functions.clone() {
        let h = parse_cylinder(&name)?;
        for e in &ladder {
            let n = e.grid.n_intervals();
            let rep = isometry_check(&IsometryIntegrand::Cylinder(h.clone()), &e.paths, &cx.phi)?;
            cx.row(ReportRow::from_mc(format!("isometry/{name}/paired"), n, &rep.paired));
            if h == Cylinder::identity() {
                let exact = t.powf(2.0 * cx.phi.two_h()) / 2.0;
                let r = MonteCarloReport::from_mean(rep.lhs, exact);
                cx.row(ReportRow::from_mc(format!("isometry/{name}/analytic"), n, &r));
            }
        }
    }
    Ok(())
}

fn solver_choice(cx: &Ctx<'_>) -> SolverChoice {
    let s = &cx.cfg.cases.sde;
    match s.solver.as_str() {
        "flow-euler" => SolverChoice::Flow(Stepper::Euler),
        "direct-euler" => SolverChoice::DirectEuler,
        "picard" => SolverChoice::Picard(PicardOptions::new(s.picard_tol, s.picard_max_iter)),
        _ => SolverChoice::Flow(Stepper::Rk4),
    }
}

fn solve_sde(cx: &mut Ctx<'_>) -> CliResult<()> {
    let s = cx.cfg.cases.sde.clone();
    let grid = cx.fine_grid()?;
    let sde = SdeSpec::ou(s.lambda, s.sigma, s.x0, cx.cfg.horizon)?;
    let choice = solver_choice(cx);
    let oracles = s
        .checkpoints
        .iter()
        .map(|&t| {
            Ok(CheckpointOracle {
                t,
                mean: s.x0 * (-s.lambda * t).exp(),
                variance: fou_variance(s.lambda, s.sigma, t, FOU_ORACLE_CELLS, &cx.phi)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let n = grid.n_intervals();
    let reports = sde_mc_stats(&sde, cx.cfg.n_paths, &grid, cx.cfg.seed, choice, &cx.phi, &oracles)?;
    for r in &reports {
        cx.row(ReportRow::from_mc(format!("sde/{}/mean-t{}", s.solver, r.t), n, &r.mean));
        cx.row(ReportRow::from_mc(format!("sde/{}/variance-t{}", s.solver, r.t), n, &r.variance));
    }

    // Replication 0 of the Monte Carlo run, kept as a sample trajectory.
    let noise: SamplePath = Ensemble::generate(Generator::Circulant, &grid, cx.phi.hurst(), cx.cfg.seed, 1)?
        .paths
        .remove(0);
    let sol = solve(&sde, &noise, choice)?;
    let mut csv = Vec::new();
    sol.write_csv(&noise, &mut csv)?;
    cx.artifact("sde_path.csv", csv);

    let opts = PicardOptions::new(s.picard_tol, s.picard_max_iter);
    let picard = solve(&sde, &noise, SolverChoice::Picard(opts))?;
    let rk4 = solve(&sde, &noise, SolverChoice::Flow(Stepper::Rk4))?;
    let gap = picard
        .path
        .values
        .iter()
        .zip(&rk4.path.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let bound = s.picard_tol.max(1e-6);
    cx.row(ReportRow::check("sde/picard-vs-rk4/max-gap", 1, n, gap, bound, gap <= bound));
    Ok(())
}

fn converge(cx: &mut Ctx<'_>) -> CliResult<()> {
    let fine = cx.noise()?;
    for name in cx.cfg.cases.functions.clone() {
        let h = parse_cylinder(&name)?;
        let case = ItoCase::unit(SpaceTimeFn::Space(h))?;
        let table = cx.ladder_row(&format!("converge/{name}"), &ResidualOp::Ito(case), &fine)?;
        let last = table.rows.last().unwrap().n;
        let max_slope = cx.cfg.cases.max_slope;
        let ok = table.slope.is_some_and(|s| s <= max_slope);
        cx.row(ReportRow::check(
            format!("converge/{name}/slope"),
            fine.len(),
            last,
            table.slope.unwrap_or(f64::NAN),
            max_slope,
            ok,
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("ito/x^2"), "ito_xp2");
        assert_eq!(slug("product/x*w"), "product_xxw");
        assert_eq!(slug("converge/exp(0.5x)"), "converge_exp_0d5x");
    }

    #[test]
    fn exact_mean_classification() {
        assert!(ito_mean_is_exact(&"x^2".parse().unwrap()));
        assert!(ito_mean_is_exact(&"x^3".parse().unwrap()));
        assert!(ito_mean_is_exact(&"sin(x)".parse().unwrap()));
        assert!(!ito_mean_is_exact(&"x^4".parse().unwrap()));
        assert!(!ito_mean_is_exact(&"cos(x)".parse().unwrap()));
    }
}
