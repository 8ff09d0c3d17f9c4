//! Support library for the `randinv` binary: CSV ingestion, output
//! formatting, and the parsing helpers the round-trip tests rely on.

pub mod format;
pub mod ingest;

use std::fmt;

/// CLI-level errors carrying their exit code: configuration and I/O
/// problems exit 2, numeric degeneracies reported by the core exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(randinv::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Numeric(e) => write!(f, "numeric degeneracy: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<randinv::Error> for CliError {
    fn from(e: randinv::Error) -> Self {
        use randinv::Error::*;
        match e {
            DimensionMismatch(_) | UnsupportedSide { .. } | InvalidBlocks { .. }
            | UnequalBlocks { .. } | DimensionCap { .. } | EmptyMatrix => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
