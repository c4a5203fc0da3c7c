//! Error type of the command-line layer and its stable exit-code contract.

use std::fmt;
use std::path::Path;

use semigroup_core::CoreError;

/// Everything a subcommand can fail with.
#[derive(Debug)]
pub enum LabError {
    /// Bad input: unreadable or malformed files, schema violations,
    /// unusable flag values.
    Input(String),
    /// A failure surfaced by the numerical core; the exit code depends on
    /// the variant.
    Core(CoreError),
    /// The validate subcommand found failing checks.
    Validation { failures: usize },
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Input(msg) => write!(f, "input error: {msg}"),
            LabError::Core(err) => write!(f, "{err}"),
            LabError::Validation { failures } => {
                write!(f, "validation failed: {failures} check(s) out of tolerance")
            }
        }
    }
}

impl std::error::Error for LabError {}

impl From<CoreError> for LabError {
    fn from(err: CoreError) -> Self {
        LabError::Core(err)
    }
}

impl LabError {
    /// Wrap a filesystem error with the path it happened on.
    pub fn io(path: &Path, err: &std::io::Error) -> Self {
        LabError::Input(format!("{}: {err}", path.display()))
    }

    /// Wrap a JSON error with the path; serde's message carries the field
    /// path and line/column.
    pub fn json(path: &Path, err: &serde_json::Error) -> Self {
        LabError::Input(format!("{}: {err}", path.display()))
    }

    /// The process exit code for this failure.
    ///
    /// Contract: 0 success, 1 validation failure, 2 input error,
    /// 3 numerical (resonance / conditioning / convergence) error.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation { .. } => 1,
            LabError::Input(_) => 2,
            LabError::Core(err) => match err {
                CoreError::Resonance { .. }
                | CoreError::Conditioning(_)
                | CoreError::Convergence { .. } => 3,
                CoreError::Dimension { .. }
                | CoreError::Size { .. }
                | CoreError::NonHermitian { .. }
                | CoreError::ModelInvalid(_)
                | CoreError::Domain(_)
                | CoreError::Cost { .. }
                | CoreError::DegenerateCoupling { .. }
                | CoreError::Symmetry { .. } => 2,
            },
        }
    }
}
