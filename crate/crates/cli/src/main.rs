//! `pureid`: closed-form tables, operator checks, Monte Carlo estimates and
//! protocol simulation for two-state identification.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! or configuration errors.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::CommandError;
use crate::config::{Cli, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&config) {
        Ok(report) => {
            let mut text = report.render(config.output);
            if !text.ends_with('\n') {
                text.push('\n');
            }
            // A closed pipe (e.g. `| head`) is not a failure of the run.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(CommandError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CommandError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
