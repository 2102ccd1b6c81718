//! `skewsim`: batch front end for the lattice skew-diffusion engine.

mod commands;
mod csvio;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use skewsim_core::{RawConfig, SimConfig};

#[derive(Parser)]
#[command(name = "skewsim", version, about = "Skew diffusion simulator and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results are identical for every value.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path ensemble and write summaries (and per-path CSVs).
    Simulate(Common),
    /// Simulate the two-particle collision model.
    Particles(Common),
    /// Run a named verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// One of: pathwise, one-step, skew-law, reflection, girsanov,
        /// collisions, uniqueness-consistency.
        #[arg(long)]
        suite: String,
    },
    /// Terminal-law distances across a list of resolutions.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lattice resolutions, e.g. 100,1000,10000.
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<u64>,
    },
    /// Export the exact chain law as CSV.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Step count; defaults to ceil(n T).
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn load(common: &Common) -> anyhow::Result<(SimConfig, PathBuf)> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let cfg = RawConfig::from_json(&text)?.validate()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Particles(c) => c,
        Command::Verify { common, .. }
        | Command::Convergence { common, .. }
        | Command::Oracle { common, .. } => common,
    };
    let (cfg, out) = load(common)?;
    let run = || -> anyhow::Result<bool> {
        match &cli.command {
            Command::Simulate(_) => commands::simulate(&cfg, &out),
            Command::Particles(_) => commands::particles(&cfg, &out),
            Command::Verify { suite, .. } => commands::verify(&cfg, suite, &out),
            Command::Convergence { resolutions, .. } => {
                commands::convergence(&cfg, resolutions, &out)
            }
            Command::Oracle { steps, .. } => commands::oracle(&cfg, *steps, &out),
        }
    };
    match common.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building worker pool")?;
            pool.install(run)
        }
        None => run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more assertions failed");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
