//! Error type for data loading, model configuration, and training.

use std::fmt;
use std::path::PathBuf;

use taumax_core::CoreError;

/// Everything that can go wrong while loading data or training a model.
#[derive(Debug)]
pub enum TrainerError {
    /// An invariant violation propagated from the geometry/metrics layer.
    Core(CoreError),
    /// An I/O failure, tagged with the offending path.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A malformed input file (bad magic number, ragged CSV row, byte-count
    /// mismatch, unparsable field, ...).
    Format(String),
    /// An invalid architecture or training configuration.
    InvalidConfig(String),
    /// The training loss stopped being a finite number.
    NonFiniteLoss { epoch: usize, batch: usize },
    /// The network produced a non-finite probability during evaluation
    /// (`row` is the 1-based sample position within the evaluated split).
    NonFiniteOutput { row: usize },
}

impl fmt::Display for TrainerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainerError::Core(e) => write!(f, "{e}"),
            TrainerError::Io { path, source } => {
                write!(f, "i/o error on {}: {source}", path.display())
            }
            TrainerError::Format(msg) => write!(f, "format error: {msg}"),
            TrainerError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            TrainerError::NonFiniteLoss { epoch, batch } => write!(
                f,
                "training loss became non-finite at epoch {epoch}, batch {batch}"
            ),
            TrainerError::NonFiniteOutput { row } => write!(
                f,
                "network produced a non-finite probability for sample {row}: \
                 training diverged (lower the learning rate)"
            ),
        }
    }
}

impl std::error::Error for TrainerError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            TrainerError::Core(e) => Some(e),
            TrainerError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<CoreError> for TrainerError {
    fn from(e: CoreError) -> Self {
        TrainerError::Core(e)
    }
}
