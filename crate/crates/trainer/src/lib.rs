//! A minimal trainer for feed-forward softmax classifiers, built to pair
//! with the threshold-tuning library: weighted categorical cross-entropy or
//! the Monte-Carlo score-oriented loss, Adam optimization, early stopping
//! on validation macro-F1, and synthetic/IDX/CSV dataset handling.

pub mod data;
pub mod error;
pub mod loss;
pub mod mlp;
pub mod train;

pub use data::{
    load_csv, load_idx, save_csv, split_off_validation, synth_blobs, DatasetSplit, SplitTag,
    SplitTriple,
};
pub use error::TrainerError;
pub use loss::{class_weights, weighted_ce, weighted_ce_with_gradient, ClassWeightPolicy};
pub use mlp::{ForwardCache, MlpArchitecture, MlpGradients, MlpParams};
pub use train::{
    evaluate, model_predictions, train, EpochRecord, LossKind, MetricsBundle, TrainConfig,
    TrainOutcome,
};
