//! `clear`: synthesize tiles, decompose them, plan over the result and
//! compare methods. Every command writes into one run directory with a
//! `manifest.json`.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use clear_core::ClearError;

use args::{Cli, Command};

/// Bad flags or config values.
const EXIT_CONFIG: u8 = 2;
/// Unreadable or inconsistent input data.
const EXIT_DATA: u8 = 3;
/// The planner found no traversable path.
const EXIT_UNREACHABLE: u8 = 4;

/// A usage problem detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<ClearError>() {
            return match e {
                ClearError::Unreachable { .. } => EXIT_UNREACHABLE,
                ClearError::InvalidParameter(_)
                | ClearError::InvalidWindow { .. }
                | ClearError::UnknownSynth(_)
                | ClearError::OutsideRegions { .. }
                | ClearError::NonTraversable { .. } => EXIT_CONFIG,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Plan(a) => commands::plan(a),
        Command::Eval(a) => commands::eval(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
