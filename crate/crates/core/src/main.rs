use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cdfmr::report::{reproduce_figure, run_sweep, write_atomic, Figure, SweepMode};
use cdfmr::scenario::{parse_scenario, DEFAULT_SAMPLES, DEFAULT_SEED};
use cdfmr::{Error, Result};

/// Analysis and simulation of clustered decode-and-forward multi-hop relay networks.
#[derive(Parser)]
#[command(name = "cdfmr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the Monte Carlo seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the Monte Carlo sample count
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; scenario commands print to stdout without it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and asymptotic values only
    Analyze { scenario: PathBuf },
    /// Monte Carlo estimates only
    Simulate { scenario: PathBuf },
    /// Closed form, asymptotes and Monte Carlo side by side
    Sweep { scenario: PathBuf },
    /// Regenerate the tables of one figure: ergodic, outage, ser or snr_gain
    Reproduce { figure_id: String },
}

fn scenario_command(cli: &Cli, path: &Path, mode: SweepMode) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut scenario = parse_scenario(&text).map_err(|e| e.context(path.display().to_string()))?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(samples) = cli.samples {
        if samples == 0 {
            return Err(Error::SimulationConfig(
                "--samples must be at least 1".into(),
            ));
        }
        scenario.samples = samples;
    }
    let csv = run_sweep(&scenario, mode)?;
    match &cli.out {
        Some(dir) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            let written = write_atomic(dir, &format!("{stem}.csv"), &csv)?;
            eprintln!("wrote {}", written.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analyze { scenario } => scenario_command(cli, scenario, SweepMode::Analytic),
        Command::Simulate { scenario } => scenario_command(cli, scenario, SweepMode::MonteCarlo),
        Command::Sweep { scenario } => scenario_command(cli, scenario, SweepMode::Both),
        Command::Reproduce { figure_id } => {
            let figure = Figure::from_id(figure_id)?;
            let samples = cli.samples.unwrap_or(DEFAULT_SAMPLES);
            if samples == 0 {
                return Err(Error::SimulationConfig(
                    "--samples must be at least 1".into(),
                ));
            }
            let docs = reproduce_figure(figure, samples, cli.seed.unwrap_or(DEFAULT_SEED))?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for doc in docs {
                let written = write_atomic(&dir, &doc.name, &doc.contents)?;
                eprintln!("wrote {}", written.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::FAILURE;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
