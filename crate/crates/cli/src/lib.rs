//! Command-line frontend: `ingest`, `synth`, `label-speakers`,
//! `quality-report`, `make-splits`, `evaluate` and `rerun`.
//!
//! Every run writes its outputs, a `config.json` that repeats the run, and a
//! `manifest.json` with SHA-256 digests of inputs and outputs.

mod args;
mod commands;
mod output;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use output::{Manifest, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] splitforge::Error),
}

impl CliError {
    /// 1 for filesystem failures, 2 for everything the user can fix in the
    /// arguments or input files.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(splitforge::Error::Io(_)) => 1,
            CliError::Core(splitforge::Error::Csv(e)) if e.is_io_error() => 1,
            _ => 2,
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
