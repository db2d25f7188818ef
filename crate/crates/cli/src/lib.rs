//! Command-line workflows over `jpa-core`.
//!
//! Every command produces a [`ResultRecord`]; files it writes (traces,
//! spectra, plots) are listed with their SHA-256 in the record's
//! `artifacts`. Exit codes: 0 success, 2 usage, 3 parse/validation/schema
//! or other bad input, 4 numerical failure.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use jpa_core::io::ResultRecord;
use serde_json::json;

pub use args::Cli;
pub use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] jpa_core::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "schema",
            CliError::Core(e) => e.category(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::Config(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_input_error() => EXIT_INPUT,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }

    /// `{"error": {"category": …, "message": …}}`
    pub fn to_json(&self) -> String {
        json!({ "error": { "category": self.category(), "message": self.to_string() } }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub record: Option<ResultRecord>,
    pub error: Option<CliError>,
    /// Help or version text.
    pub message: Option<String>,
}

/// Parses `argv` (program name first) and runs the command. The record is
/// also written to `--out` when given.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return Outcome {
                code,
                record: None,
                error: (code != EXIT_OK).then(|| CliError::Usage(text.clone())),
                message: (code == EXIT_OK).then_some(text),
            };
        }
    };
    match execute(&cli) {
        Ok(record) => Outcome {
            code: EXIT_OK,
            record: Some(record),
            error: None,
            message: None,
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            record: None,
            error: Some(e),
            message: None,
        },
    }
}

fn execute(cli: &Cli) -> CliResult<ResultRecord> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let record = commands::dispatch(&cli.command, &config)?.finish();
    if let Some(out) = &cli.out {
        commands::write_file(out, record.to_json().as_bytes())?;
    }
    Ok(record)
}
