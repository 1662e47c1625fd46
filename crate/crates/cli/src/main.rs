use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use matchkit_cli::{emit, run_experiment, ExperimentConfig, Format, ScenarioKind, Seeds};

#[derive(Parser)]
#[command(name = "matchkit", version, about = "Seeded Monte-Carlo runs of matching-based resource allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its metric table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the scenario; the method list falls back to all methods.
        #[arg(long, value_enum)]
        scenario: Option<ScenarioKind>,
        /// Base seed; run i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Defaults to `output.path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let Command::Run {
        config,
        scenario,
        seed,
        runs,
        format,
        out,
    } = cli.command;
    let mut cfg = ExperimentConfig::from_path(&config)?;
    if let Some(s) = scenario {
        if s != cfg.scenario {
            cfg.scenario = s;
            cfg.methods.clear();
        }
    }
    if seed.is_some() || runs.is_some() {
        let (base, n) = match &cfg.seeds {
            Seeds::Range { base_seed, n_runs } => (*base_seed, *n_runs),
            Seeds::List(v) => (v.first().copied().unwrap_or(0), v.len()),
        };
        cfg.seeds = Seeds::Range {
            base_seed: seed.unwrap_or(base),
            n_runs: runs.unwrap_or(n),
        };
    }
    let format = format.unwrap_or(cfg.output.format);
    let Some(path) = out.or_else(|| cfg.output.path.clone()) else {
        bail!("no output path: pass --out or set output.path");
    };
    let table = run_experiment(&cfg)?;
    emit(&table, format, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
