//! Command-line front end: system files in, spatial fields, doubling chains,
//! torus reports and bound tables out.
//!
//! Every command writes into `--out` one file per artifact and streams
//! JSON-lines verdicts to stdout.

pub mod args;
mod commands;
mod output;
mod selftest;
mod verify;

use std::path::PathBuf;

use thiserror::Error;

pub use args::{Cli, Command, Emit, GlobalArgs};
pub use output::OutDir;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CERTIFICATION: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const INVARIANT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input { .. } | RunError::Argument(_) | RunError::Output { .. } => exit::INPUT,
            RunError::Certification(_) => exit::CERTIFICATION,
            RunError::Invariant(_) => exit::INVARIANT,
        }
    }

    fn input(path: &std::path::Path, msg: impl ToString) -> Self {
        RunError::Input {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }
}

/// Runs one parsed command line. Verdict lines go to `sink`.
pub fn run(cli: &Cli, sink: &mut dyn std::io::Write) -> Result<(), RunError> {
    let out = OutDir::create(&cli.global.out)?;
    match &cli.command {
        Command::Lift { input } => commands::lift(input, &out, sink),
        Command::Double {
            input,
            k,
            eps,
            shift,
            tori,
            max_terms,
        } => commands::double(
            input,
            &commands::DoubleOptions {
                k: *k,
                eps: eps.clone(),
                shift: shift.clone(),
                tori: *tori,
                max_terms: *max_terms,
            },
            &out,
            sink,
        ),
        Command::Verify {
            input,
            eps,
            octants,
            shift,
        } => verify::verify(input, eps, octants.as_deref(), *shift, &cli.global, &out, sink),
        Command::Tables {
            bounds,
            set,
            sequence,
        } => commands::tables(bounds.as_deref(), *set, *sequence, &cli.global, &out, sink),
        Command::Selftest { trials } => selftest::selftest(*trials, &cli.global, sink),
    }
}

/// `TORUSFORGE_THREADS`, when set to a positive integer.
pub fn thread_cap() -> Result<Option<usize>, RunError> {
    match std::env::var("TORUSFORGE_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::Argument(format!(
                "TORUSFORGE_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}
