//! One-vs-rest confusion matrices under a multidimensional threshold,
//! monotone binary scores, macro averaging, and overall accuracy.

use crate::error::CoreError;
use crate::regions::{classify_batch, TiePolicy};
use crate::scalar::{count, fp, Scalar};
use crate::simplex::SimplexPoint;

/// A 2×2 one-vs-rest confusion matrix. Entries are reals so the same type
/// carries hard integer counts and Monte-Carlo expected (soft) counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionCounts<T> {
    pub true_neg: T,
    pub false_pos: T,
    pub false_neg: T,
    pub true_pos: T,
}

impl<T: Scalar> ConfusionCounts<T> {
    /// Builds counts in (tn, fp, fn, tp) order.
    pub fn new(true_neg: T, false_pos: T, false_neg: T, true_pos: T) -> Self {
        Self {
            true_neg,
            false_pos,
            false_neg,
            true_pos,
        }
    }

    /// Total number of samples behind this matrix.
    pub fn total(&self) -> T {
        self.true_neg + self.false_pos + self.false_neg + self.true_pos
    }

    /// Number of positive-class samples (tp + fn).
    pub fn support(&self) -> T {
        self.true_pos + self.false_neg
    }
}

/// The binary scores, each non-decreasing in tp and tn and non-increasing
/// in fp and fn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreKind {
    /// (tp + tn) / n.
    Accuracy,
    /// tp / (tp + fp).
    Precision,
    /// tp / (tp + fn).
    Recall,
    /// 2tp / (2tp + fp + fn).
    F1,
    /// True-skill statistic: tp/(tp+fn) + tn/(tn+fp) − 1.
    Tss,
    /// (tp + tn − fp − fn) / n — linear in the counts, which makes the
    /// score commute with expectations; useful as an exactness probe.
    LinearDiagnostic,
}

impl ScoreKind {
    /// Stable lower-case name used in reports and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            ScoreKind::Accuracy => "accuracy",
            ScoreKind::Precision => "precision",
            ScoreKind::Recall => "recall",
            ScoreKind::F1 => "f1",
            ScoreKind::Tss => "tss",
            ScoreKind::LinearDiagnostic => "linear",
        }
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A score choice plus the policy for 0/0 sub-expressions (empty classes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    /// Value substituted for any 0/0 ratio inside the formula. Default 0,
    /// the conservative convention for F1 on absent classes.
    pub zero_division_value: f64,
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Self {
        Self {
            kind,
            zero_division_value: 0.0,
        }
    }
}

impl From<ScoreKind> for ScoreSpec {
    fn from(kind: ScoreKind) -> Self {
        ScoreSpec::new(kind)
    }
}

/// Evaluates one binary score on one confusion matrix. Each ratio whose
/// denominator is exactly zero evaluates to the spec's zero-division value
/// (for TSS the policy applies to each of its two ratios independently).
pub fn binary_score<T: Scalar>(spec: ScoreSpec, cm: &ConfusionCounts<T>) -> T {
    let zdv = fp::<T>(spec.zero_division_value);
    let ratio = |num: T, den: T| if den == T::zero() { zdv } else { num / den };
    let tn = cm.true_neg;
    let fp_ = cm.false_pos;
    let fn_ = cm.false_neg;
    let tp = cm.true_pos;
    let two = fp::<T>(2.0);
    match spec.kind {
        ScoreKind::Accuracy => ratio(tp + tn, cm.total()),
        ScoreKind::Precision => ratio(tp, tp + fp_),
        ScoreKind::Recall => ratio(tp, tp + fn_),
        ScoreKind::F1 => ratio(two * tp, two * tp + fp_ + fn_),
        ScoreKind::Tss => ratio(tp, tp + fn_) + ratio(tn, tn + fp_) - T::one(),
        ScoreKind::LinearDiagnostic => ratio(tp + tn - fp_ - fn_, cm.total()),
    }
}

/// Arithmetic mean of the binary score over the per-class matrices.
pub fn macro_score<T: Scalar>(
    spec: ScoreSpec,
    cms: &[ConfusionCounts<T>],
) -> Result<T, CoreError> {
    if cms.is_empty() {
        return Err(CoreError::Empty("confusion matrix list"));
    }
    let sum: T = cms.iter().map(|cm| binary_score(spec, cm)).sum();
    Ok(sum / count::<T>(cms.len()))
}

fn check_labels(labels: &[usize], m: usize) -> Result<(), CoreError> {
    for &y in labels {
        if y < 1 || y > m {
            return Err(CoreError::ClassOutOfRange { label: y, m });
        }
    }
    Ok(())
}

fn check_lengths(predictions: usize, labels: usize) -> Result<(), CoreError> {
    if predictions != labels {
        return Err(CoreError::LengthMismatch {
            predictions,
            labels,
        });
    }
    Ok(())
}

/// Tallies the m one-vs-rest confusion matrices from already-assigned
/// classes. `assigned` and `labels` are 1-based class indices.
pub fn confusions_from_assignments<T: Scalar>(
    assigned: &[usize],
    labels: &[usize],
    m: usize,
) -> Result<Vec<ConfusionCounts<T>>, CoreError> {
    check_lengths(assigned.len(), labels.len())?;
    if labels.is_empty() {
        return Err(CoreError::Empty("sample set"));
    }
    check_labels(labels, m)?;
    check_labels(assigned, m)?;
    let n = labels.len();
    let mut support = vec![0usize; m];
    let mut predicted = vec![0usize; m];
    let mut correct = vec![0usize; m];
    for (&a, &y) in assigned.iter().zip(labels) {
        support[y - 1] += 1;
        predicted[a - 1] += 1;
        if a == y {
            correct[y - 1] += 1;
        }
    }
    Ok((0..m)
        .map(|j| {
            let tp = correct[j];
            let fn_ = support[j] - tp;
            let fp_ = predicted[j] - tp;
            let tn = n - support[j] - fp_;
            ConfusionCounts::new(count(tn), count(fp_), count(fn_), count(tp))
        })
        .collect())
}

/// Classifies every prediction against `tau` and tallies the m one-vs-rest
/// confusion matrices. Class j's matrix treats j as positive and the other
/// m − 1 classes as negative, so each sample contributes a true positive to
/// at most one matrix.
pub fn per_class_confusions<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    tau: &SimplexPoint<T>,
    tie_policy: TiePolicy,
) -> Result<Vec<ConfusionCounts<T>>, CoreError> {
    check_lengths(preds.len(), labels.len())?;
    if preds.is_empty() {
        return Err(CoreError::Empty("sample set"));
    }
    check_labels(labels, tau.dim())?;
    let assigned = classify_batch(preds, tau, tie_policy)?;
    confusions_from_assignments(&assigned, labels, tau.dim())
}

/// Fraction of samples whose assigned class equals the label. Equals
/// Σ_j tp_j / n over the per-class matrices.
pub fn overall_accuracy<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    tau: &SimplexPoint<T>,
    tie_policy: TiePolicy,
) -> Result<T, CoreError> {
    check_lengths(preds.len(), labels.len())?;
    if preds.is_empty() {
        return Err(CoreError::Empty("sample set"));
    }
    check_labels(labels, tau.dim())?;
    let assigned = classify_batch(preds, tau, tie_policy)?;
    let correct = assigned
        .iter()
        .zip(labels)
        .filter(|(a, y)| a == y)
        .count();
    Ok(count::<T>(correct) / count::<T>(labels.len()))
}
