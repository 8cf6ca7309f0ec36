//! Command-line driver for `hamel-core`: solve built-in or configured
//! boundary value problems, simulate forced mechanics, run the verification
//! suite, and read and write trajectory tables.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (non-convergence, failed verification).

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    /// Numerical failure after a well-formed request; a best-effort output
    /// may already have been written.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn io(what: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{what}: {e}"))
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("HAMEL_OC_LOG", "off");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `argv` and runs the selected command.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    init_logging();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hamel-oc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
