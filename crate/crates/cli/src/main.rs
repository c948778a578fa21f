use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use dirac1d_cli::experiments::{preflight, run_experiment, Kind};
use dirac1d_cli::ExperimentConfig;

/// Run one dirac1d experiment and write its reports.
#[derive(Parser, Debug)]
#[command(name = "dirac1d", version)]
struct Cli {
    /// free_decay, high_band_decay, perturbed_decay, born_terms, spectrum, nonsingularity,
    /// scattering or edge_asymptotics
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out/<kind>`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized probes
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    preflight(&cfg, cli.kind)?;
    let report = run_experiment(&cfg, cli.kind, cli.seed)?;
    let dir = cli.out.unwrap_or_else(|| PathBuf::from("out").join(cli.kind.name()));
    report.write(&dir)?;
    print!("{}", report.summary_table());
    println!("reports in {}", dir.display());
    Ok(report.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
