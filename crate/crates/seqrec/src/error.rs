use std::io;

use thiserror::Error;

/// Errors surfaced by log ingestion, configuration validation and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in a tab-separated log file.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An invalid generator, method or sweep configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Hit rates are undefined without test cases.
    #[error("no test cases")]
    NoTestCases,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
