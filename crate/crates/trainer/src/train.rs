//! The training loop: seeded minibatch SGD with Adam, per-epoch validation,
//! early stopping on validation macro-F1, and best-epoch weight restore.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use taumax_core::metrics::{
    macro_score, overall_accuracy, per_class_confusions, ConfusionCounts, ScoreKind, ScoreSpec,
};
use taumax_core::regions::TiePolicy;
use taumax_core::simplex::{validate_simplex, SimplexPoint};
use taumax_core::sol::{MultiSol, SolConfig};

use crate::data::{DatasetSplit, SplitTriple};
use crate::error::TrainerError;
use crate::loss::{class_weights, weighted_ce_with_gradient, ClassWeightPolicy};
use crate::mlp::{MlpArchitecture, MlpParams};

/// Which loss drives the gradient steps.
#[derive(Debug, Clone)]
pub enum LossKind {
    /// Weighted categorical cross-entropy with the given weight policy.
    WeightedCe(ClassWeightPolicy),
    /// Score-oriented loss over Monte-Carlo thresholds, evaluated per
    /// minibatch with one threshold sample fixed for the whole run.
    ///
    /// The embedded `seed` field is ignored during training: the sample is
    /// drawn from a stream derived from [`TrainConfig::seed`], so one seed
    /// reproduces the entire run.
    MultiSol(SolConfig<f64>),
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many consecutive epochs without a strict improvement
    /// in validation macro-F1.
    pub patience: usize,
    /// Master seed: initialization, shuffling, and the loss's threshold
    /// sample all derive from it.
    pub seed: u64,
}

impl TrainConfig {
    /// Standard defaults: Adam at 1e-3, batch 128, up to 100 epochs,
    /// patience 5.
    pub fn new(loss: LossKind, seed: u64) -> Self {
        Self {
            loss,
            learning_rate: 1e-3,
            batch_size: 128,
            max_epochs: 100,
            patience: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainerError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainerError::InvalidConfig(format!(
                "learning rate must be a positive real, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainerError::InvalidConfig(
                "batch size must be positive".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(TrainerError::InvalidConfig(
                "epoch limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Sample-weighted mean of the minibatch losses seen this epoch.
    pub train_loss: f64,
    /// Validation macro-F1 at the barycenter threshold (the early-stopping
    /// criterion).
    pub val_macro_f1: f64,
    /// Validation overall accuracy at the barycenter threshold.
    pub val_accuracy: f64,
}

/// A finished run: best-validation weights, the full history, and any
/// configuration warnings.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights restored from the best validation epoch.
    pub params: MlpParams,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch the returned weights come from.
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

/// Evaluation metrics of one parameter set on one split at one threshold.
#[derive(Debug, Clone)]
pub struct MetricsBundle {
    pub overall_accuracy: f64,
    pub macro_f1: f64,
    /// One-vs-rest confusion counts per class.
    pub confusions: Vec<ConfusionCounts<f64>>,
}

/// Per-tensor first/second moment state for Adam.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(params: &MlpParams, lr: f64) -> Self {
        let sizes: Vec<usize> = params
            .weights
            .iter()
            .map(|w| w.len())
            .chain(params.biases.iter().map(|b| b.len()))
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn step(&mut self, params: &mut MlpParams, grads: &crate::mlp::MlpGradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let layers = params.weights.len();
        for l in 0..layers {
            let theta = params.weights[l].as_slice_mut().expect("owned layout");
            let g = grads.weights[l].as_slice().expect("owned layout");
            self.update_tensor(l, theta, g, c1, c2);
        }
        for l in 0..params.biases.len() {
            let slot = layers + l;
            let theta = params.biases[l].as_slice_mut().expect("owned layout");
            let g = grads.biases[l].as_slice().expect("owned layout");
            self.update_tensor(slot, theta, g, c1, c2);
        }
    }

    fn update_tensor(&mut self, slot: usize, theta: &mut [f64], g: &[f64], c1: f64, c2: f64) {
        let m = &mut self.m[slot];
        let v = &mut self.v[slot];
        for i in 0..theta.len() {
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
            theta[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
        }
    }
}

enum LossEngine {
    WeightedCe { weights: Vec<f64> },
    MultiSol(MultiSol<f64>),
}

impl LossEngine {
    /// Loss and its gradient with respect to the batch's class
    /// probabilities.
    fn loss_with_gradient(
        &self,
        probs: &Array2<f64>,
        labels: &[usize],
    ) -> Result<(f64, Array2<f64>), TrainerError> {
        match self {
            LossEngine::WeightedCe { weights } => {
                weighted_ce_with_gradient(probs, labels, weights)
            }
            LossEngine::MultiSol(engine) => {
                let flat = probs.as_slice().expect("owned layout");
                let (loss, grad) = engine.loss_with_gradient_flat(flat, labels)?;
                let grad = Array2::from_shape_vec(probs.dim(), grad)
                    .expect("gradient has one entry per probability");
                Ok((loss, grad))
            }
        }
    }
}

/// Trains a network on the triple's train split, validating each epoch on
/// the validation split at the barycenter threshold.
///
/// Fully deterministic for a given config: weight initialization, epoch
/// shuffles, and the score-oriented loss's threshold sample all derive from
/// `config.seed`. Stops early after `patience` epochs without validation
/// improvement and returns the weights of the best epoch.
pub fn train(
    data: &SplitTriple,
    arch: MlpArchitecture,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainerError> {
    config.validate()?;
    let m = data.train.num_classes;
    if arch.input_dim != data.train.dim() {
        return Err(TrainerError::InvalidConfig(format!(
            "architecture expects {} inputs but the data has {} features",
            arch.input_dim,
            data.train.dim()
        )));
    }
    if arch.output_dim != m {
        return Err(TrainerError::InvalidConfig(format!(
            "architecture has {} outputs but the data has {m} classes",
            arch.output_dim
        )));
    }

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let init_seed: u64 = master.random();
    let sample_seed: u64 = master.random();

    let mut warnings = Vec::new();
    let engine = match &config.loss {
        LossKind::WeightedCe(policy) => LossEngine::WeightedCe {
            weights: class_weights(policy, &data.train.labels, m)?,
        },
        LossKind::MultiSol(sol_config) => {
            if sol_config.m() != m {
                return Err(TrainerError::InvalidConfig(format!(
                    "loss is configured for {} classes but the data has {m}",
                    sol_config.m()
                )));
            }
            if config.batch_size < 2 * m {
                warnings.push(format!(
                    "batch size {} is below 2m = {}; per-class soft counts from such small \
                     batches are dominated by the denominator guard",
                    config.batch_size,
                    2 * m
                ));
            }
            let mut cfg = sol_config.clone();
            cfg.seed = sample_seed;
            LossEngine::MultiSol(MultiSol::new(cfg)?)
        }
    };

    let mut params = MlpParams::init(arch, init_seed);
    let mut adam = Adam::new(&params, config.learning_rate);
    let barycenter = SimplexPoint::barycenter(m)?;

    let n = data.train.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(f64, usize, MlpParams)> = None;
    let mut stall = 0usize;

    for epoch in 1..=config.max_epochs {
        indices.shuffle(&mut master);
        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in indices.chunks(config.batch_size).enumerate() {
            let x = data.train.features.select(Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| data.train.labels[i]).collect();
            let cache = params.forward_cached(&x)?;
            let (loss, dprobs) = engine.loss_with_gradient(cache.probs(), &labels)?;
            if !loss.is_finite() {
                return Err(TrainerError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx + 1,
                });
            }
            let grads = params.backward(&cache, &dprobs);
            adam.step(&mut params, &grads);
            epoch_loss += loss * chunk.len() as f64;
        }

        let val = evaluate(
            &params,
            &data.validation,
            &barycenter,
            TiePolicy::LowestIndex,
        )?;
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / n as f64,
            val_macro_f1: val.macro_f1,
            val_accuracy: val.overall_accuracy,
        });

        let improved = best
            .as_ref()
            .map(|(f1, _, _)| val.macro_f1 > *f1)
            .unwrap_or(true);
        if improved {
            best = Some((val.macro_f1, epoch, params.clone()));
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch,
        warnings,
    })
}

/// The network's probability outputs for a whole split, as validated
/// simplex points ready for threshold classification or tuning.
pub fn model_predictions(
    params: &MlpParams,
    split: &DatasetSplit,
) -> Result<Vec<SimplexPoint<f64>>, TrainerError> {
    let probs = params.forward_batch(&split.features)?;
    probs
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            // A NaN/inf here is a diverged model, not a malformed input:
            // report it as a numeric failure instead of letting simplex
            // validation blame the data.
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TrainerError::NonFiniteOutput { row: i + 1 });
            }
            Ok(validate_simplex(row.to_vec(), 1e-6)?)
        })
        .collect()
}

/// Deterministic evaluation of a parameter set on a split at a given
/// threshold: overall accuracy, macro-F1, and per-class confusion counts.
///
/// Evaluating at the barycenter reproduces plain argmax metrics; evaluating
/// at a tuned threshold reproduces the tuner's score on the same split.
pub fn evaluate(
    params: &MlpParams,
    split: &DatasetSplit,
    tau: &SimplexPoint<f64>,
    tie_policy: TiePolicy,
) -> Result<MetricsBundle, TrainerError> {
    let preds = model_predictions(params, split)?;
    let confusions = per_class_confusions(&preds, &split.labels, tau, tie_policy)?;
    let macro_f1 = macro_score(ScoreSpec::new(ScoreKind::F1), &confusions)?;
    let acc = overall_accuracy(&preds, &split.labels, tau, tie_policy)?;
    Ok(MetricsBundle {
        overall_accuracy: acc,
        macro_f1,
        confusions,
    })
}
