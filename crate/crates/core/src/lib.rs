//! Threshold-based multiclass classification on the probability simplex.
//!
//! The usual argmax decision rule is the special case of a more general
//! one: pick a threshold point τ on the simplex and assign a prediction ŷ
//! to class j when ŷ's margin over every other class exceeds τ's margin
//! (`regions`). Moving τ away from the barycenter reshapes the m decision
//! regions, which is exactly the lever needed when plain argmax
//! under-serves minority classes.
//!
//! On top of that rule this crate provides:
//!
//! * [`simplex`] — validated simplex points, deterministic lattice
//!   enumeration, Dirichlet sampling and density;
//! * [`metrics`] — one-vs-rest confusion matrices and monotone binary
//!   scores with macro averaging;
//! * [`tuning`] — a-posteriori threshold search (exhaustive grid or
//!   Monte-Carlo candidates) maximizing a chosen score on a tuning split;
//! * [`sol`] — a differentiable training loss that scores expected
//!   confusion matrices under a Dirichlet-random threshold, estimated by
//!   Monte Carlo with a sigmoid-relaxed region indicator.
//!
//! Every kernel is generic over the floating-point type through
//! [`scalar::Scalar`]; `f64` is the intended default (see the crate-root
//! aliases), with `f32` available where memory dominates.

pub mod error;
pub mod metrics;
pub mod regions;
pub mod scalar;
pub mod simplex;
pub mod sol;
pub mod tuning;

pub use error::CoreError;
pub use metrics::{
    binary_score, macro_score, overall_accuracy, per_class_confusions, ConfusionCounts,
    ScoreKind, ScoreSpec,
};
pub use regions::{classify, classify_batch, region_of, RegionAssignment, TiePolicy};
pub use scalar::Scalar;
pub use simplex::{
    dirichlet_density, normalize_simplex, sample_dirichlet, simplex_grid, simplex_grid_count,
    validate_simplex, DirichletParams, SimplexPoint, DEFAULT_SUM_TOL,
};
pub use sol::{
    expected_confusions, hoeffding_samples, multisol_loss, multisol_loss_with_gradient,
    soft_membership, MultiSol, SolConfig, SoftConfusion,
};
pub use tuning::{
    heatmap_table, tune_grid, tune_grid_with_budget, tune_mc, tune_mc_with_budget, HeatmapRow,
    TuneObjective, TuneResult, DEFAULT_CANDIDATE_BUDGET,
};

/// Double-precision simplex point — the default throughout the tooling.
pub type Simplex64 = SimplexPoint<f64>;
/// Single-precision simplex point.
pub type Simplex32 = SimplexPoint<f32>;
/// Double-precision confusion counts.
pub type Confusion64 = ConfusionCounts<f64>;
/// Single-precision confusion counts.
pub type Confusion32 = ConfusionCounts<f32>;
/// Double-precision Dirichlet parameters.
pub type Dirichlet64 = DirichletParams<f64>;
/// Single-precision Dirichlet parameters.
pub type Dirichlet32 = DirichletParams<f32>;
