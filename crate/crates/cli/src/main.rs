use clap::Parser;
use fracwick::{run_suite, threads_from_env, CliError, CliResult, ExperimentConfig, Suite};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs one verification suite and writes its CSVs, plots and manifest.
#[derive(Debug, Parser)]
#[command(name = "fracwick", version)]
struct Args {
    /// generate | verify-ito | verify-product-rule | verify-wentzell | girsanov | isometry | solve-sde | converge
    suite: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit SVG plots.
    #[arg(long)]
    plots: bool,
}

fn run(args: Args) -> CliResult<bool> {
    let suite: Suite = args.suite.parse()?;
    let (mut cfg, bytes) = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    cfg.plots |= args.plots;
    cfg.validate(suite)?;
    if let Some(n) = threads_from_env()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (manifest, out) = run_suite(&cfg, suite, &bytes)?;
    for r in &out.rows {
        println!("{:<64} {}", r.id(), r.verdict);
    }
    let failing = out.failing();
    if !failing.is_empty() {
        eprintln!("{} of {} tests failed:", failing.len(), out.rows.len());
        for f in failing {
            eprintln!("  {f}");
        }
    }
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
