use std::io;
use std::path::PathBuf;

use steer_core::SteerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{key}`: {reason}")]
    Schema { key: String, reason: String },

    #[error(transparent)]
    Steer(#[from] SteerError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{failed} of {total} benchmark runs failed")]
    Benchmark { failed: usize, total: usize, code: i32 },
}

impl CliError {
    pub fn schema(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Schema { key: key.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit status: 2 schema, 3 non-convergence, 4 coercivity or
    /// singular Gramian, 5 divergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Steer(e) => steer_exit_code(e),
            CliError::Benchmark { code, .. } => *code,
            _ => 1,
        }
    }
}

pub fn steer_exit_code(e: &SteerError) -> i32 {
    match e {
        SteerError::NonConvergence { .. } => 3,
        SteerError::CoercivityViolation { .. } | SteerError::SingularGramian { .. } => 4,
        SteerError::Divergence { .. } | SteerError::NonFinite(_) => 5,
        _ => 1,
    }
}
