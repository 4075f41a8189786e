use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use optimism::estimators::ResamplingPlan;
use optimism::experiment::{emit_csv, report_summary, run_grid, write_csv, ExperimentConfig, Mode};
use optimism::Error;

/// Optimism of regression models: simulation, theory and resampling.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    mode: Command,
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Runs per cell; overrides `num_runs`.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Worker threads, 0 for one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Monte-Carlo optimism over the signal × σ² × model grid.
    Simulate,
    /// Asymptotic and closed-form values only.
    Theory,
    /// Monte-Carlo and theory side by side.
    Compare,
    /// Hold-out or k-fold optimism on a CSV dataset.
    Realdata,
}

const CONFIG_ERROR: u8 = 1;
const CELL_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(CONFIG_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CELL_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}

/// `Ok(false)` when some cell failed.
fn run(cli: Cli) -> Result<bool, Error> {
    let path = cli.config.ok_or_else(|| Error::Config { line: 0, msg: "--config is required".into() })?;
    let mut cfg = ExperimentConfig::from_path(&path)?;
    cfg.mode = match cli.mode {
        Command::Simulate => Mode::Simulate,
        Command::Theory => Mode::Theory,
        Command::Compare => Mode::Compare,
        Command::Realdata => Mode::RealData,
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = cli.runs {
        cfg.num_runs = r;
        cfg.plan = match cfg.plan {
            ResamplingPlan::HoldOut { test_fraction, bootstrap, .. } => {
                ResamplingPlan::HoldOut { test_fraction, num_runs: r, bootstrap }
            }
            ResamplingPlan::KFold { k, .. } => {
                ResamplingPlan::KFold { k, num_runs: r }
            }
        };
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let rows = pool.install(|| run_grid(&cfg))?;
    match cli.out.or(cfg.output.clone()) {
        Some(out) => emit_csv(&rows, &out)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if !rows.is_empty() {
        eprint!("{}", report_summary(&rows)?);
    }
    for r in rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("cell {} {} {}: {}", r.signal_kind, r.k_or_coeffs, r.model, r.status);
    }
    Ok(rows.iter().all(|r| r.is_ok()))
}
