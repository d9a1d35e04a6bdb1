//! Weighted categorical cross-entropy and its exact gradient with respect
//! to the predicted probabilities.

use ndarray::Array2;

use crate::error::TrainerError;

/// Additive guard inside the logarithm so perfect-confidence mistakes stay
/// finite.
pub const LOG_GUARD: f64 = 1e-12;

/// How per-class weights for the cross-entropy are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassWeightPolicy {
    /// w_j = n / (m · n_j): inverse class frequency normalized to mean 1.
    /// The default; emphasizes minority classes.
    InverseFrequency,
    /// All weights 1 (plain categorical cross-entropy).
    Uniform,
    /// Caller-supplied weights, one positive real per class.
    Custom(Vec<f64>),
}

impl Default for ClassWeightPolicy {
    fn default() -> Self {
        ClassWeightPolicy::InverseFrequency
    }
}

/// Resolves a weight policy against a label set, producing one weight per
/// class.
pub fn class_weights(
    policy: &ClassWeightPolicy,
    labels: &[usize],
    m: usize,
) -> Result<Vec<f64>, TrainerError> {
    match policy {
        ClassWeightPolicy::Uniform => Ok(vec![1.0; m]),
        ClassWeightPolicy::Custom(w) => {
            if w.len() != m {
                return Err(TrainerError::InvalidConfig(format!(
                    "expected {m} class weights, got {}",
                    w.len()
                )));
            }
            if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(TrainerError::InvalidConfig(format!(
                    "class weights must be positive reals, got {bad}"
                )));
            }
            Ok(w.clone())
        }
        ClassWeightPolicy::InverseFrequency => {
            let mut counts = vec![0usize; m];
            for &y in labels {
                if y < 1 || y > m {
                    return Err(TrainerError::InvalidConfig(format!(
                        "label {y} outside [1, {m}]"
                    )));
                }
                counts[y - 1] += 1;
            }
            let n = labels.len() as f64;
            counts
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    if c == 0 {
                        Err(TrainerError::InvalidConfig(format!(
                            "class {} has no training samples; inverse-frequency weights are undefined",
                            j + 1
                        )))
                    } else {
                        Ok(n / (m as f64 * c as f64))
                    }
                })
                .collect()
        }
    }
}

fn check_batch(
    probs: &Array2<f64>,
    labels: &[usize],
    weights: &[f64],
) -> Result<(), TrainerError> {
    if probs.nrows() != labels.len() {
        return Err(TrainerError::InvalidConfig(format!(
            "{} probability rows but {} labels",
            probs.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(TrainerError::InvalidConfig(
            "cross-entropy of an empty batch is undefined".into(),
        ));
    }
    let m = probs.ncols();
    if weights.len() != m {
        return Err(TrainerError::InvalidConfig(format!(
            "{} class weights for {m} classes",
            weights.len()
        )));
    }
    if let Some(&y) = labels.iter().find(|&&y| y < 1 || y > m) {
        return Err(TrainerError::InvalidConfig(format!(
            "label {y} outside [1, {m}]"
        )));
    }
    Ok(())
}

/// Weighted categorical cross-entropy:
/// −(1/n) Σ_i w_{y_i} ln(p_{i,y_i} + guard).
pub fn weighted_ce(
    probs: &Array2<f64>,
    labels: &[usize],
    weights: &[f64],
) -> Result<f64, TrainerError> {
    check_batch(probs, labels, weights)?;
    let n = labels.len() as f64;
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        total += weights[y - 1] * (probs[[i, y - 1]] + LOG_GUARD).ln();
    }
    Ok(-total / n)
}

/// [`weighted_ce`] plus its gradient with respect to every probability:
/// ∂L/∂p_{i,y_i} = −w_{y_i} / (n (p_{i,y_i} + guard)), zero elsewhere.
pub fn weighted_ce_with_gradient(
    probs: &Array2<f64>,
    labels: &[usize],
    weights: &[f64],
) -> Result<(f64, Array2<f64>), TrainerError> {
    check_batch(probs, labels, weights)?;
    let n = labels.len() as f64;
    let mut total = 0.0;
    let mut grad = Array2::zeros(probs.dim());
    for (i, &y) in labels.iter().enumerate() {
        let guarded = probs[[i, y - 1]] + LOG_GUARD;
        total += weights[y - 1] * guarded.ln();
        grad[[i, y - 1]] = -weights[y - 1] / (n * guarded);
    }
    Ok((-total / n, grad))
}
