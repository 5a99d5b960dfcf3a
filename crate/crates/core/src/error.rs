//! Crate-wide error type.
//!
//! Errors are grouped into three categories that the CLI maps onto process
//! exit codes: malformed input (2), protocol violations such as insufficient
//! data or overlapping folds (3), and internal numerical flags (4).

use std::path::PathBuf;
use thiserror::Error;

/// Coarse error category, used by the CLI for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or unreadable input (exit code 2).
    Input,
    /// Protocol violation: insufficient data, misordered windows,
    /// overlapping folds (exit code 3).
    Protocol,
    /// Internal numerical flag (exit code 4).
    Numerical,
}

impl ErrorCategory {
    /// Process exit code associated with the category.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Input => 2,
            ErrorCategory::Protocol => 3,
            ErrorCategory::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: malformed input: {reason}", path.display())]
    MalformedInput {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error(
        "{}:{line}: timestamp regression larger than 1 s \
         (previous {prev_ts_ns} ns, current {ts_ns} ns)",
        path.display()
    )]
    TimestampRegression {
        path: PathBuf,
        line: u64,
        prev_ts_ns: i64,
        ts_ns: i64,
    },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("invalid argument to {operation}: {reason}")]
    InvalidArgument {
        operation: &'static str,
        reason: String,
    },

    #[error("insufficient data for {what}: needed {needed}, available {available}")]
    InsufficientData {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("protocol violation: {reason}")]
    Protocol { reason: String },

    #[error("numerical failure in {operation}: {reason}")]
    Numerical {
        operation: &'static str,
        reason: String,
    },
}

impl Error {
    /// Category of the error, used for exit-code mapping.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. }
            | Error::MalformedInput { .. }
            | Error::TimestampRegression { .. }
            | Error::InvalidConfig { .. }
            | Error::InvalidArgument { .. } => ErrorCategory::Input,
            Error::InsufficientData { .. } | Error::Protocol { .. } => ErrorCategory::Protocol,
            Error::Numerical { .. } => ErrorCategory::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
