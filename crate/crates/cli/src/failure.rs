//! Errors surfaced by the runner, each mapped to a process exit code.

use std::fmt;
use std::path::PathBuf;

use phonon_tc_core::Error as CoreError;

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, bad arguments, or a failed parameter-chain check.
    Validation(String),
    /// A density-matrix invariant broke during integration.
    Invariant(CoreError),
    /// Any other numerical failure (step underflow, singular elimination).
    Numerical(CoreError),
    Io { path: PathBuf, source: std::io::Error },
}

impl Failure {
    /// 1 validation, 2 invariant breach or other numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Invariant(_) | Failure::Numerical(_) => 2,
            Failure::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Failure::Io { path: path.into(), source }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvariantBreach { .. } => Failure::Invariant(e),
            CoreError::InvalidCutoff(_)
            | CoreError::Domain(_)
            | CoreError::DivergentSeries { .. }
            | CoreError::InvalidTimeGrid
            | CoreError::UnknownPreset { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::IndexOutOfRange { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Numerical(e),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msg) => write!(f, "validation failed: {msg}"),
            Failure::Invariant(e) => write!(f, "integration aborted: {e}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Failure {}
