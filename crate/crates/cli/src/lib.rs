//! The `aroc` command-line tool.

mod commands;
mod config;
pub mod formula;
mod input;

use std::ffi::OsString;
use std::fmt;

use aroc_core::ArocError;
use clap::Parser;

pub use config::{Cli, Command, FORMAT_VERSION};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Io(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ArocError> for CliError {
    fn from(e: ArocError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, ArocError::InvalidArgument(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let command = match commands::resolve(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("aroc: {e}");
            return e.exit_code();
        }
    };
    let globals = commands::Globals {
        threads: cli.threads,
        report_runtime: cli.report_runtime,
    };
    match commands::execute(&command, &globals) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aroc: {e}");
            if let CliError::Numerical(msg) = &e {
                let diag = serde_json::json!({
                    "format_version": FORMAT_VERSION,
                    "status": "numerical_failure",
                    "error": msg,
                    "config": command,
                });
                eprintln!("{}", serde_json::to_string_pretty(&diag).unwrap_or_default());
            }
            e.exit_code()
        }
    }
}
