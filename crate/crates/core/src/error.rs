//! Error type shared by the library modules.

use std::fmt;

/// Error raised by simplex construction, classification, scoring, tuning,
/// or loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A raw coordinate vector failed simplex validation.
    InvalidSimplex(String),
    /// Dirichlet concentration parameters must all be positive and finite.
    InvalidDirichlet(String),
    /// Density requested at a boundary point where it is not defined.
    DensityAtBoundary(String),
    /// Two inputs that must share a dimension do not.
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },
    /// A class label lies outside `1..=m`.
    ClassOutOfRange { label: usize, m: usize },
    /// Prediction and label collections differ in length.
    LengthMismatch { predictions: usize, labels: usize },
    /// An operation that needs at least one element received none.
    Empty(&'static str),
    /// A prediction fell on a region boundary and the tie policy refuses
    /// to resolve it.
    BoundaryTie { tied: Vec<usize> },
    /// The requested candidate count exceeds the configured budget.
    BudgetExceeded { candidates: u128, budget: u128 },
    /// A combinatorial count overflows the integer width.
    CountOverflow { m: usize, k: usize },
    /// A configuration value is outside its documented range.
    InvalidConfig(String),
    /// An error attributable to one element of a batch.
    AtIndex { index: usize, source: Box<CoreError> },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidSimplex(msg) => write!(f, "invalid simplex point: {msg}"),
            CoreError::InvalidDirichlet(msg) => write!(f, "invalid Dirichlet parameters: {msg}"),
            CoreError::DensityAtBoundary(msg) => {
                write!(f, "density undefined at boundary: {msg}")
            }
            CoreError::DimensionMismatch {
                expected,
                found,
                context,
            } => write!(
                f,
                "dimension mismatch in {context}: expected {expected}, found {found}"
            ),
            CoreError::ClassOutOfRange { label, m } => {
                write!(f, "class label {label} outside 1..={m}")
            }
            CoreError::LengthMismatch {
                predictions,
                labels,
            } => write!(
                f,
                "length mismatch: {predictions} predictions vs {labels} labels"
            ),
            CoreError::Empty(what) => write!(f, "{what} must be non-empty"),
            CoreError::BoundaryTie { tied } => write!(
                f,
                "prediction lies on a region boundary (tied classes {tied:?}) and the tie policy is set to error"
            ),
            CoreError::BudgetExceeded { candidates, budget } => write!(
                f,
                "candidate count {candidates} exceeds the budget of {budget}; \
                 use Monte-Carlo candidate sampling or a coarser grid"
            ),
            CoreError::CountOverflow { m, k } => write!(
                f,
                "grid point count for m={m}, k={k} overflows the supported integer range"
            ),
            CoreError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            CoreError::AtIndex { index, source } => {
                write!(f, "at element {index}: {source}")
            }
        }
    }
}

impl std::error::Error for CoreError {}
