//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by data ingestion, calibration and inference.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input row; `line` is 1-based and refers to the source file.
    #[error("parse error in {path} line {line}: {msg}")]
    Parse { path: String, line: u64, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("window [{t1}, {t2}] spans {len} trading days, below the minimum {min}")]
    WindowTooShort { t1: i64, t2: i64, len: i64, min: i64 },

    /// The slaving system has no unique solution (e.g. a constant zeta column).
    #[error("rank-deficient linear system: {0}")]
    RankDeficient(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergent fit for window [{t1}, {t2}]")]
    NoFit { t1: i64, t2: i64 },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::WindowTooShort { .. }
            | Error::Config(_) => 2,
            Error::RankDeficient(_) | Error::Domain(_) | Error::NoFit { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
