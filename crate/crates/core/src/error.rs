//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A relative error was requested against a zero reference vector.
    #[error("degenerate reference (zero norm): {0}")]
    DegenerateReference(String),

    /// Every reference column of a snapshot set was zero.
    #[error("degenerate snapshot set: {0}")]
    DegenerateSnapshot(String),

    /// The Jacobi eigensolver did not reach its off-diagonal threshold.
    #[error("eigensolver failed to converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged: {0}")]
    Divergence(String),

    /// No restart of a multi-restart campaign survived.
    #[error("all {0} restarts diverged")]
    AllRestartsDiverged(usize),

    /// A requested tolerance cannot be met at any rank.
    #[error("tolerance {tolerance} not achievable: best error {best} at full rank {rank}")]
    NotAchievable {
        tolerance: f64,
        best: f64,
        rank: usize,
    },

    /// A cached intermediate no longer matches the call it is used with.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Malformed model or data file.
    #[error("format error: {0}")]
    Format(String),

    /// I/O failure with path context.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
