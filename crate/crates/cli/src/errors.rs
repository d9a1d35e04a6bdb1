//! CLI error wrapper with the stable exit-code mapping:
//! 0 success, 2 input/config error, 3 candidate-budget guard, 4 numeric
//! failure.

use std::fmt;
use std::path::{Path, PathBuf};

use taumax_core::CoreError;
use taumax_trainer::TrainerError;

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Trainer(TrainerError),
    Io { path: PathBuf, source: std::io::Error },
    /// Bad flags or malformed input files (message carries the detail,
    /// including row numbers for file errors).
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::BudgetExceeded { .. }) => 3,
            CliError::Trainer(TrainerError::Core(CoreError::BudgetExceeded { .. })) => 3,
            CliError::Trainer(TrainerError::NonFiniteLoss { .. }) => 4,
            CliError::Trainer(TrainerError::NonFiniteOutput { .. }) => 4,
            _ => 2,
        }
    }
}

/// Rewrites a per-element classification error into the prediction file's
/// coordinates: the library reports 0-based element indices, but everything
/// the CLI says about a file uses 1-based data rows (matching the loader's
/// own messages).
pub fn at_file_row(path: &Path, e: CliError) -> CliError {
    match e {
        CliError::Core(CoreError::AtIndex { index, source }) => CliError::Input(format!(
            "{}: data row {}: {source}",
            path.display(),
            index + 1
        )),
        other => other,
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Trainer(e) => write!(f, "{e}"),
            CliError::Io { path, source } => {
                write!(f, "i/o error on {}: {source}", path.display())
            }
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<TrainerError> for CliError {
    fn from(e: TrainerError) -> Self {
        CliError::Trainer(e)
    }
}
