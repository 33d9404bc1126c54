//! Command-line front end: dataset generation, training, demodulation,
//! unwrapping, evaluation, and method comparison.
//!
//! Every run resolves its configuration from an optional `key = value`
//! file, `--set` overrides, then dedicated flags, and echoes the final
//! values to `resolved.cfg` next to its outputs. Exit codes: 0 success,
//! 1 invalid input or configuration, 2 I/O failure, 3 numeric failure.

mod cmd;
mod config;
mod store;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fringe", version, about = "fringe-pattern analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic phase-shift dataset
    Gen(cmd::gen::Args),
    /// Train the two-stage demodulator (and optionally the direct baseline)
    Train(cmd::train::Args),
    /// Demodulate fringe patterns into a wrapped phase map
    Demod(cmd::demod::Args),
    /// Unwrap a wrapped phase map against a low-frequency anchor
    Unwrap(cmd::unwrap::Args),
    /// Score a predicted phase map against ground truth
    Eval(cmd::eval::Args),
    /// Run several methods over fresh scenes and tabulate their errors
    Compare(cmd::compare::Args),
    /// Print defaults, file formats, and exit codes
    Info,
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Gen(a) => cmd::gen::run(a),
        Cmd::Train(a) => cmd::train::run(a),
        Cmd::Demod(a) => cmd::demod::run(a),
        Cmd::Unwrap(a) => cmd::unwrap::run(a),
        Cmd::Eval(a) => cmd::eval::run(a),
        Cmd::Compare(a) => cmd::compare::run(a),
        Cmd::Info => cmd::info::run(),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(e.exit_code());
    }
}
