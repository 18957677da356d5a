use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Largest `d_a * d_b` accepted; the global operators are `(d_a d_b)^3` square.
pub const MAX_LOCAL_DIM: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "pureid",
    version,
    about = "Identify which of two unknown pure states a third copy equals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print closed-form success probabilities for a grid of dimensions
    Table(CommonArgs),
    /// Run the deterministic operator and measurement checks
    Verify(CommonArgs),
    /// Estimate the success probability by Haar Monte Carlo
    Simulate(CommonArgs),
    /// Simulate the two-party protocol and write transcripts
    Protocol(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Alice's local dimension
    #[arg(long = "da", default_value_t = 2)]
    pub d_a: usize,
    /// Bob's local dimension
    #[arg(long = "db", default_value_t = 2)]
    pub d_b: usize,
    /// Haar samples or protocol runs
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    /// Tolerance for operator residuals
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,
    /// Measurement used by `simulate`
    #[arg(long, value_enum, default_value_t = Scheme::Separable)]
    pub scheme: Scheme,
    /// Transcript file written by `protocol`
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Global,
    Separable,
    Locc,
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Table,
    Verify,
    Simulate,
    Protocol,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Table => "table",
            CommandKind::Verify => "verify",
            CommandKind::Simulate => "simulate",
            CommandKind::Protocol => "protocol",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub d_a: usize,
    pub d_b: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub tol: f64,
    pub output: OutputFormat,
    pub scheme: Scheme,
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, ConfigError> {
        let (command, args) = match cli.command {
            Command::Table(a) => (CommandKind::Table, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Protocol(a) => (CommandKind::Protocol, a),
        };
        let config = RunConfig {
            command,
            d_a: args.d_a,
            d_b: args.d_b,
            samples: args.samples,
            seed: args.seed,
            workers: args.workers,
            tol: args.tol,
            output: args.output,
            scheme: args.scheme,
            transcript: args.transcript,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d_a == 0 || self.d_b == 0 {
            return Err(ConfigError(format!(
                "local dimensions must be at least 1 (got --da {} --db {})",
                self.d_a, self.d_b
            )));
        }
        if self.d_a * self.d_b > MAX_LOCAL_DIM {
            return Err(ConfigError(format!(
                "d_a * d_b = {} exceeds the supported maximum {MAX_LOCAL_DIM}",
                self.d_a * self.d_b
            )));
        }
        let samples_used = matches!(self.command, CommandKind::Simulate | CommandKind::Protocol);
        if samples_used && self.samples == 0 {
            return Err(ConfigError("--samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError("--workers must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(ConfigError(format!(
                "--tol must be a positive number (got {})",
                self.tol
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> pureid_core::SpaceSpec {
        pureid_core::SpaceSpec::new(self.d_a, self.d_b).expect("validated dimensions")
    }
}
