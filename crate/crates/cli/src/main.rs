//! `nof1-sim`: runs the scenario/design simulation grid and writes
//! `steps.csv`, `summary.json`, `summary.md` and `regret_quantiles.csv`.
//!
//! ```text
//! nof1-sim --config run.toml --scenario II --design AB --patients 100 --seed 7 --out results --jobs 4
//! ```
//!
//! Flags override the corresponding keys of the config file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::Parser;

use nof1_core::config::{RunConfig, RunManifest};
use nof1_core::{emit_summary_table, run_all};

#[derive(Debug, Parser)]
#[command(name = "nof1-sim", version, about = "Simulate Thompson-sampling N-of-1 trials")]
struct Cli {
    /// TOML run configuration (action set, sampler and trial settings).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Scenario I..VII, a comma-separated list, or "all".
    #[arg(long)]
    scenario: Option<String>,
    /// AB, BA or "all".
    #[arg(long)]
    design: Option<String>,
    /// Simulated patients per scenario/design cell.
    #[arg(long, value_name = "N")]
    patients: Option<usize>,
    /// Root seed; every random stream derives from it.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Suppress the summary table on stdout.
    #[arg(long)]
    quiet: bool,
}

fn build_manifest(cli: &Cli) -> Result<RunManifest> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.scenario {
        cfg.scenario = s.clone();
    }
    if let Some(d) = &cli.design {
        cfg.design = d.clone();
    }
    if let Some(n) = cli.patients {
        cfg.patients = n;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    Ok(RunManifest::from_config(&cfg, cli.config.clone())?)
}

fn run(cli: &Cli) -> Result<()> {
    let manifest = build_manifest(cli)?;
    let outcome = run_all(&manifest)?;
    if !cli.quiet {
        print!("{}", emit_summary_table(&outcome.summaries));
        println!("\noutputs written to {}", manifest.out_dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
