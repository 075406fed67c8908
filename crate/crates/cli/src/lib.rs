//! `stratflow` command-line runner: config parsing, experiment dispatch, artifacts.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{parse_config, Experiment, Parameters, RunConfig};
use output::{Manifest, OutputDir, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] stratflow_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Numerical(_) | Self::Io(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stratflow",
    version,
    about = "Stability experiments for stratified Couette flow"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML document with the experiment parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized sweeps.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Override a config key, e.g. `--set beta=2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Single Fourier mode (or a seeded random sweep) with energy-bound checks.
    LinearMode,
    /// Linear evolution of the Gaussian-blob field and decay-rate fits.
    LinearField,
    /// Taylor-Goldstein spectrum of a shear profile.
    Eigen,
    /// Echo-cascade toy model sweep.
    Toy,
    /// Pseudo-spectral run in the shearing frame.
    Nonlinear,
    /// Power-law fit of one series from a norms CSV.
    Fit,
}

impl Command {
    pub fn experiment(self) -> Experiment {
        match self {
            Self::LinearMode => Experiment::LinearMode,
            Self::LinearField => Experiment::LinearField,
            Self::Eigen => Experiment::Eigen,
            Self::Toy => Experiment::Toy,
            Self::Nonlinear => Experiment::Nonlinear,
            Self::Fit => Experiment::Fit,
        }
    }
}

fn split_overrides(raw: &[String]) -> Result<Vec<(String, String)>, CliError> {
    raw.iter()
        .map(|s| match s.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                Ok((k.trim().to_string(), v.trim().to_string()))
            }
            _ => Err(CliError::Config(format!(
                "--set expects KEY=VALUE, got `{s}`"
            ))),
        })
        .collect()
}

/// Parses the CLI's inputs into a validated [`RunConfig`].
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let overrides = split_overrides(&cli.overrides)?;
    parse_config(
        cli.command.experiment(),
        &text,
        &overrides,
        cli.seed,
        cli.out.clone(),
    )
}

/// Runs the configured experiment, writing every artifact; returns the verdict.
pub fn run_experiment(cfg: &RunConfig, quiet: bool) -> Result<Verdict, CliError> {
    let start = Instant::now();
    let mut dir = OutputDir::create(&cfg.output_dir)?;
    if !quiet {
        eprintln!(
            "running {} into {}",
            cfg.experiment.name(),
            cfg.output_dir.display()
        );
    }
    let checks = match &cfg.parameters {
        Parameters::LinearMode(c) => {
            experiments::linear_mode(c, &c.validate()?, cfg.seed, &mut dir)?
        }
        Parameters::LinearField(c) => experiments::linear_field(c, &c.validate()?, &mut dir)?,
        Parameters::Eigen(c) => experiments::eigen(c, &mut dir)?,
        Parameters::Toy(c) => experiments::toy(c, &mut dir)?,
        Parameters::Nonlinear(c) => experiments::run_nonlinear(c, quiet, &mut dir)?,
        Parameters::Fit(c) => experiments::fit(c, &mut dir)?,
    };
    let verdict = Verdict::new(cfg.experiment.name(), checks);
    dir.json("verdict.json", &verdict)?;
    let mut outputs = dir.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        experiment: cfg.experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: &cfg.parameters,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
    };
    dir.json("manifest.json", &manifest)?;
    if !quiet {
        for c in &verdict.checks {
            eprintln!(
                "[{}] {} (margin {:e}) {}",
                if c.pass { "pass" } else { "FAIL" },
                c.bound,
                c.margin,
                c.detail
            );
        }
    }
    Ok(verdict)
}

/// Full CLI flow; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let outcome = resolve(cli).and_then(|cfg| run_experiment(&cfg, cli.quiet));
    match outcome {
        Ok(v) if v.pass => EXIT_OK,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("stratflow: {e}");
            e.exit_code()
        }
    }
}
