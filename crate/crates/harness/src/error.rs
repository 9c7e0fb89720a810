use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the experiment runner, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("could not parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("guard failed: {0}")]
    Guard(bco_core::Error),

    #[error("contract violation: {0}")]
    Contract(bco_core::Error),

    #[error("core error: {0}")]
    Core(bco_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Process exit codes of the `bco` binary.
pub mod exit {
    pub const OK: i32 = 0;
    /// A regret bound (or a validation check) failed.
    pub const BOUND_FAILED: i32 = 1;
    /// Command-line usage error (reported by the argument parser).
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const GUARD: i32 = 4;
    pub const CONTRACT: i32 = 5;
    pub const IO: i32 = 6;
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } | HarnessError::Core(_) => {
                exit::CONFIG
            }
            HarnessError::Guard(_) => exit::GUARD,
            HarnessError::Contract(_) => exit::CONTRACT,
            HarnessError::Io { .. } | HarnessError::Csv(_) | HarnessError::Json(_) => exit::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<bco_core::Error> for HarnessError {
    fn from(e: bco_core::Error) -> Self {
        use bco_core::Error as E;
        match e {
            E::HorizonTooSmall { .. } => HarnessError::Guard(e),
            E::GradientBound { .. } | E::CostBound { .. } | E::NoPendingQuery | E::Domain => {
                HarnessError::Contract(e)
            }
            other => HarnessError::Core(other),
        }
    }
}
