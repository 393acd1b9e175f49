use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod run;

use config::Problem;
use run::Overrides;

/// Casimir-Polder and van der Waals dispersion potentials.
///
/// Reads a JSON problem description, writes a CSV table to `--out` and a
/// JSON sidecar named after it (`run.csv` gets `run.meta.json`). Exit status: 0 on success, 2 when the
/// configuration is rejected, 3 when a computation fails.
#[derive(Debug, Parser)]
#[command(name = "casimir", version)]
struct Cli {
    /// Problem to solve.
    #[arg(value_enum)]
    problem: Problem,

    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output CSV path; the sidecar goes next to it as <stem>.meta.json.
    #[arg(long)]
    out: PathBuf,

    /// Relative tolerance of the frequency quadrature.
    #[arg(long)]
    rel_tol: Option<f64>,

    /// Nodes per axis of the body volume grid.
    #[arg(long)]
    grid: Option<usize>,

    /// Seed of the Monte Carlo pair rule, when one is configured.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        rel_tol: cli.rel_tol,
        grid: cli.grid,
        seed: cli.seed,
    };
    match run::execute(&cli.config, &cli.out, cli.problem, &overrides) {
        Ok(result) => {
            if let Some(line) = result.summary {
                println!("{line}");
            }
            log::info!("wrote {}", cli.out.display());
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
