//! `driftlab`: simulate, build call surfaces, evaluate drift functionals
//! and run verification suites from a JSON run configuration.

mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use driftlab_core::exec::Exec;

use crate::commands::RunContext;
use crate::config::{RunConfig, SurfaceMethod, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "driftlab", version, about = "Drift identities of one-dimensional jump-diffusions, checked numerically")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root (default: $DRIFTLAB_OUTPUT_ROOT, else ./driftlab-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run per-path work on one thread. Results are identical either way.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and write it as binary and CSV.
    Simulate(Common),
    /// Build a call surface C(t, x).
    Surface {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: Option<SurfaceMethod>,
    },
    /// Evaluate the Itô drift and μ̃ of a bump against a plateau θ.
    Measure(Common),
    /// Run one verification suite, or `all`.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: Option<String>,
    },
    /// Summarize suite reports from one run; refuses mixed config hashes.
    Report {
        /// Run directories or report files (default: every verify-* run
        /// under the output root).
        inputs: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Paths simulated per batch.
    #[arg(long)]
    chunk: Option<usize>,
    /// Ensemble file to read instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl Common {
    fn apply(self, c: &mut RunConfig) {
        c.model = self.model.or(c.model.take());
        c.paths = self.paths.or(c.paths);
        c.steps = self.steps.or(c.steps);
        c.seed = self.seed.or(c.seed);
        c.horizon = self.horizon.or(c.horizon);
        c.chunk = self.chunk.or(c.chunk);
        c.input = self.input.or(c.input.take());
    }
}

fn output_root(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("driftlab-out"))
}

fn run(cli: Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("missing input artifact: config file {}", p.display()))?;
            RunConfig::from_json(&text).with_context(|| format!("invalid configuration in {}", p.display()))?
        }
        None => RunConfig::default(),
    };
    let ctx = RunContext {
        root: output_root(cli.out, &config),
        exec: if cli.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    match cli.command {
        Command::Simulate(common) => {
            common.apply(&mut config);
            config.validate()?;
            commands::simulate(&config, &ctx)
        }
        Command::Surface { common, method } => {
            common.apply(&mut config);
            config.surface_method = method.or(config.surface_method);
            config.validate()?;
            commands::surface(&config, &ctx)
        }
        Command::Measure(common) => {
            common.apply(&mut config);
            config.validate()?;
            commands::measure(&config, &ctx)
        }
        Command::Verify { common, suite } => {
            common.apply(&mut config);
            config.suite = suite.or(config.suite.take());
            config.validate()?;
            commands::verify(&config, &ctx)
        }
        Command::Report { inputs } => commands::report(&inputs, &ctx),
    }
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
