//! Score-oriented training loss: treat the decision threshold as a
//! Dirichlet random variable, estimate the expected one-vs-rest confusion
//! matrices by Monte Carlo over a fixed threshold sample, relax the region
//! indicator with a product of sigmoids so everything is differentiable,
//! and minimize the negated mean score.

use crate::error::CoreError;
use crate::metrics::{ConfusionCounts, ScoreKind, ScoreSpec};
use crate::regions::{region_of, RegionAssignment};
use crate::scalar::{count, fp, Scalar};
use crate::simplex::{sample_dirichlet, DirichletParams, SimplexPoint};

/// Expected (real-valued) one-vs-rest confusion counts; same layout as the
/// hard counts so score formulas apply unchanged.
pub type SoftConfusion<T> = ConfusionCounts<T>;

/// Additive guard on score denominators that can vanish, keeping the loss
/// and its gradient finite on empty soft classes without measurably
/// shifting values.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

/// Recommended sigmoid steepness.
pub const DEFAULT_LAMBDA: f64 = 20.0;

/// Recommended symmetric Dirichlet concentration for the threshold prior.
pub const DEFAULT_ALPHA: f64 = 20.0;

/// Practical ceiling on the threshold-sample size used for training. The
/// accuracy-driven rule [`hoeffding_samples`]`(0.01, 0.05)` asks for 18445;
/// the cap trades estimator accuracy for speed explicitly.
pub const DEFAULT_TRAINING_SAMPLE_CAP: usize = 4096;

/// Smallest threshold-sample size guaranteeing that a Monte-Carlo mean of
/// [0,1]-bounded indicators deviates from its expectation by more than
/// `epsilon` with probability at most `delta`: ceil(ln(2/δ) / (2ε²)).
pub fn hoeffding_samples(epsilon: f64, delta: f64) -> Result<usize, CoreError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CoreError::InvalidConfig(format!(
            "epsilon must be a positive real, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CoreError::InvalidConfig(format!(
            "delta must lie strictly between 0 and 1, got {delta}"
        )));
    }
    let raw = (2.0 / delta).ln() / (2.0 * epsilon * epsilon);
    if !raw.is_finite() || raw > 1e18 {
        return Err(CoreError::InvalidConfig(format!(
            "required sample count is out of range (epsilon={epsilon}, delta={delta})"
        )));
    }
    Ok((raw.ceil() as usize).max(1))
}

/// Numerically stable logistic sigmoid 1/(1+e^(−x)).
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Relaxed membership of `y_hat` in class j's region under threshold
/// `tau_r`: the product over k ≠ j of σ(λ(ŷ^j − ŷ^k − τ_r^j + τ_r^k)).
/// Approaches the hard region indicator as λ grows, from the literal
/// product formula. `j` is 1-based.
pub fn soft_membership<T: Scalar>(
    y_hat: &SimplexPoint<T>,
    tau_r: &SimplexPoint<T>,
    j: usize,
    lambda: T,
) -> Result<T, CoreError> {
    let m = tau_r.dim();
    if y_hat.dim() != m {
        return Err(CoreError::DimensionMismatch {
            expected: m,
            found: y_hat.dim(),
            context: "soft_membership",
        });
    }
    if j < 1 || j > m {
        return Err(CoreError::ClassOutOfRange { label: j, m });
    }
    let y = y_hat.coords();
    let t = tau_r.coords();
    let jj = j - 1;
    let mut prod = T::one();
    for k in 0..m {
        if k != jj {
            prod = prod * sigmoid(lambda * (y[jj] - y[k] - t[jj] + t[k]));
        }
    }
    Ok(prod)
}

/// Configuration of the loss: the threshold prior, sigmoid steepness, the
/// Monte-Carlo sample size, the seed the sample is drawn from, and the
/// score being optimized.
///
/// The score's zero-division policy is not consulted here: inside the loss,
/// denominators that can vanish are smoothed by [`DENOMINATOR_GUARD`]
/// instead, keeping gradients finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SolConfig<T> {
    /// Dirichlet concentration of the threshold prior; its length fixes m.
    pub alpha: DirichletParams<T>,
    /// Sigmoid steepness λ ≥ 0. Zero is accepted as a documented degenerate
    /// value (every membership is the constant product of one-half factors,
    /// so the loss ignores the predictions and the gradient vanishes);
    /// training wants λ > 0.
    pub lambda: T,
    /// Number of threshold draws N ≥ 1.
    pub n_samples: usize,
    /// Seed for the threshold sample.
    pub seed: u64,
    /// Score applied to each expected confusion matrix.
    pub score: ScoreSpec,
}

impl<T: Scalar> SolConfig<T> {
    /// Validates and wraps a configuration.
    pub fn new(
        alpha: DirichletParams<T>,
        lambda: T,
        n_samples: usize,
        seed: u64,
        score: ScoreSpec,
    ) -> Result<Self, CoreError> {
        let config = Self {
            alpha,
            lambda,
            n_samples,
            seed,
            score,
        };
        config.validate()?;
        Ok(config)
    }

    /// The recommended configuration for m classes: symmetric α = 20
    /// prior, λ = 20, and the accuracy-rule sample size capped at
    /// [`DEFAULT_TRAINING_SAMPLE_CAP`].
    pub fn recommended(m: usize, seed: u64, score: ScoreSpec) -> Result<Self, CoreError> {
        let n = hoeffding_samples(0.01, 0.05)?.min(DEFAULT_TRAINING_SAMPLE_CAP);
        Self::new(
            DirichletParams::symmetric(m, fp(DEFAULT_ALPHA))?,
            fp(DEFAULT_LAMBDA),
            n,
            seed,
            score,
        )
    }

    /// Checks the field invariants (useful after struct-literal edits).
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.lambda.is_finite() && self.lambda >= T::zero()) {
            return Err(CoreError::InvalidConfig(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.n_samples < 1 {
            return Err(CoreError::InvalidConfig(
                "n_samples must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Number of classes m.
    pub fn m(&self) -> usize {
        self.alpha.dim()
    }
}

/// Monte-Carlo mean of the relaxed memberships, folded into per-class soft
/// confusion matrices: tp̂_j sums memberships of class-j samples, fp̂_j sums
/// memberships of the rest, and fn̂/tn̂ are the exact complements
/// (n_j − tp̂_j and (n − n_j) − fp̂_j), so row sums are conserved.
pub fn expected_confusions<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    thresholds: &[SimplexPoint<T>],
    lambda: T,
) -> Result<Vec<SoftConfusion<T>>, CoreError> {
    if thresholds.is_empty() {
        return Err(CoreError::Empty("threshold sample"));
    }
    let m = thresholds[0].dim();
    for (index, t) in thresholds.iter().enumerate() {
        if t.dim() != m {
            return Err(CoreError::AtIndex {
                index,
                source: Box::new(CoreError::DimensionMismatch {
                    expected: m,
                    found: t.dim(),
                    context: "threshold sample",
                }),
            });
        }
    }
    if !(lambda.is_finite() && lambda >= T::zero()) {
        return Err(CoreError::InvalidConfig(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let probs = flatten_predictions(preds, m)?;
    check_batch(&probs, labels, m)?;
    let thr = flatten_thresholds(thresholds, m);
    Ok(soft_counts(&probs, labels, m, lambda, &thr))
}

/// The loss engine with its threshold sample drawn once (from the config's
/// seed) and cached, so every evaluation across batches, epochs, and
/// gradient passes sees the same thresholds.
#[derive(Debug, Clone)]
pub struct MultiSol<T> {
    config: SolConfig<T>,
    thresholds: Vec<SimplexPoint<T>>,
    thresholds_flat: Vec<T>,
}

impl<T: Scalar> MultiSol<T> {
    /// Validates the configuration and draws the threshold sample.
    pub fn new(config: SolConfig<T>) -> Result<Self, CoreError> {
        config.validate()?;
        let thresholds = sample_dirichlet(&config.alpha, config.n_samples, config.seed);
        let thresholds_flat = flatten_thresholds(&thresholds, config.m());
        Ok(Self {
            config,
            thresholds,
            thresholds_flat,
        })
    }

    pub fn config(&self) -> &SolConfig<T> {
        &self.config
    }

    /// The cached threshold sample (length = config.n_samples).
    pub fn thresholds(&self) -> &[SimplexPoint<T>] {
        &self.thresholds
    }

    /// Number of classes m.
    pub fn m(&self) -> usize {
        self.config.m()
    }

    /// Loss value: −(1/m) Σ_j s(Ê[CM_j]). For scores bounded in [0,1] the
    /// value lies in [−1, 0].
    pub fn loss(&self, preds: &[SimplexPoint<T>], labels: &[usize]) -> Result<T, CoreError> {
        if preds.len() != labels.len() {
            return Err(CoreError::LengthMismatch {
                predictions: preds.len(),
                labels: labels.len(),
            });
        }
        let probs = flatten_predictions(preds, self.m())?;
        self.loss_flat(&probs, labels)
    }

    /// Loss plus its exact gradient with respect to every prediction
    /// coordinate, one gradient row per sample.
    pub fn loss_with_gradient(
        &self,
        preds: &[SimplexPoint<T>],
        labels: &[usize],
    ) -> Result<(T, Vec<Vec<T>>), CoreError> {
        let m = self.m();
        if preds.len() != labels.len() {
            return Err(CoreError::LengthMismatch {
                predictions: preds.len(),
                labels: labels.len(),
            });
        }
        let probs = flatten_predictions(preds, m)?;
        let (loss, flat) = self.loss_with_gradient_flat(&probs, labels)?;
        let rows = flat.chunks(m).map(|c| c.to_vec()).collect();
        Ok((loss, rows))
    }

    /// Loss on raw row-major probability rows (n × m). Rows are taken as
    /// given — no simplex validation — so finite-difference probes and
    /// network outputs mid-training can be fed directly.
    pub fn loss_flat(&self, probs: &[T], labels: &[usize]) -> Result<T, CoreError> {
        let m = self.m();
        check_batch(probs, labels, m)?;
        let cms = soft_counts(probs, labels, m, self.config.lambda, &self.thresholds_flat);
        Ok(self.loss_from_counts(&cms))
    }

    /// [`MultiSol::loss_flat`] plus the gradient as one row-major n × m
    /// buffer. The value is computed by the same path as `loss_flat`, so
    /// the two agree bitwise.
    pub fn loss_with_gradient_flat(
        &self,
        probs: &[T],
        labels: &[usize],
    ) -> Result<(T, Vec<T>), CoreError> {
        let m = self.m();
        check_batch(probs, labels, m)?;
        let lambda = self.config.lambda;
        let thr = &self.thresholds_flat;
        let cms = soft_counts(probs, labels, m, lambda, thr);

        // Per-class coefficients of dL/dp̂_ij: `match_coef[j]` applies when
        // y_i = j (the membership feeds tp̂_j and its complement fn̂_j),
        // `other_coef[j]` otherwise (fp̂_j and tn̂_j).
        let m_t = count::<T>(m);
        let mut loss_sum = T::zero();
        let mut match_coef = vec![T::zero(); m];
        let mut other_coef = vec![T::zero(); m];
        for j in 0..m {
            let (s, d_tp, d_fn, d_fp, d_tn) =
                smoothed_score_and_partials(self.config.score.kind, &cms[j]);
            loss_sum += s;
            match_coef[j] = -(d_tp - d_fn) / m_t;
            other_coef[j] = -(d_fp - d_tn) / m_t;
        }
        let loss = -loss_sum / m_t;

        let n = labels.len();
        let n_thr = self.config.n_samples;
        let inv_n_thr = T::one() / count::<T>(n_thr);
        let mut grad = vec![T::zero(); n * m];
        let mut scratch = PairScratch::new(m);
        for i in 0..n {
            let y = &probs[i * m..(i + 1) * m];
            let yi = labels[i] - 1;
            let g = &mut grad[i * m..(i + 1) * m];
            for r in 0..n_thr {
                let t = &thr[r * m..(r + 1) * m];
                scratch.fill(y, t, lambda);
                for j in 0..m {
                    let w = if j == yi { match_coef[j] } else { other_coef[j] } * inv_n_thr;
                    let p_j = scratch.membership(j);
                    let coef = w * lambda * p_j;
                    if coef == T::zero() {
                        continue;
                    }
                    let mut sum_term = T::zero();
                    for c in 0..m {
                        if c != j {
                            let one_minus = T::one() - scratch.sig(j, c);
                            sum_term += one_minus;
                            g[c] -= coef * one_minus;
                        }
                    }
                    g[j] += coef * sum_term;
                }
            }
        }
        Ok((loss, grad))
    }

    /// Loss with hard region indicators instead of the sigmoid relaxation
    /// (the λ → ∞ ideal): membership is 1 exactly on the assigned region, 0
    /// elsewhere, and boundary points (measure zero) belong to no region.
    /// Used to probe the relaxation and the linear-score exactness.
    pub fn loss_hard(&self, preds: &[SimplexPoint<T>], labels: &[usize]) -> Result<T, CoreError> {
        let m = self.m();
        if preds.len() != labels.len() {
            return Err(CoreError::LengthMismatch {
                predictions: preds.len(),
                labels: labels.len(),
            });
        }
        if preds.is_empty() {
            return Err(CoreError::Empty("prediction set"));
        }
        for &y in labels {
            if y < 1 || y > m {
                return Err(CoreError::ClassOutOfRange { label: y, m });
            }
        }
        let n = labels.len();
        let n_thr = self.config.n_samples;
        let inv_n_thr = T::one() / count::<T>(n_thr);
        let mut tp = vec![T::zero(); m];
        let mut fp_ = vec![T::zero(); m];
        let mut support = vec![0usize; m];
        for (index, (pred, &label)) in preds.iter().zip(labels).enumerate() {
            support[label - 1] += 1;
            let mut hits = vec![T::zero(); m];
            for tau in &self.thresholds {
                match region_of(pred, tau).map_err(|source| CoreError::AtIndex {
                    index,
                    source: Box::new(source),
                })? {
                    RegionAssignment::Class(j) => hits[j - 1] += T::one(),
                    RegionAssignment::Boundary(_) => {}
                }
            }
            for j in 0..m {
                let ph = hits[j] * inv_n_thr;
                if j == label - 1 {
                    tp[j] += ph;
                } else {
                    fp_[j] += ph;
                }
            }
        }
        let cms: Vec<SoftConfusion<T>> = (0..m)
            .map(|j| {
                let nj = count::<T>(support[j]);
                let fn_ = nj - tp[j];
                let tn = count::<T>(n - support[j]) - fp_[j];
                ConfusionCounts::new(tn, fp_[j], fn_, tp[j])
            })
            .collect();
        Ok(self.loss_from_counts(&cms))
    }

    fn loss_from_counts(&self, cms: &[SoftConfusion<T>]) -> T {
        let mut sum = T::zero();
        for cm in cms {
            let (s, ..) = smoothed_score_and_partials(self.config.score.kind, cm);
            sum += s;
        }
        -sum / count::<T>(cms.len())
    }
}

/// Convenience wrapper: build the engine (drawing the seeded threshold
/// sample) and evaluate the loss once.
pub fn multisol_loss<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    config: &SolConfig<T>,
) -> Result<T, CoreError> {
    MultiSol::new(config.clone())?.loss(preds, labels)
}

/// Convenience wrapper returning the loss and per-sample gradient rows.
pub fn multisol_loss_with_gradient<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    config: &SolConfig<T>,
) -> Result<(T, Vec<Vec<T>>), CoreError> {
    MultiSol::new(config.clone())?.loss_with_gradient(preds, labels)
}

/// Flattens validated predictions into a row-major buffer, checking the
/// width of every row.
fn flatten_predictions<T: Scalar>(
    preds: &[SimplexPoint<T>],
    m: usize,
) -> Result<Vec<T>, CoreError> {
    let mut out = Vec::with_capacity(preds.len() * m);
    for (index, p) in preds.iter().enumerate() {
        if p.dim() != m {
            return Err(CoreError::AtIndex {
                index,
                source: Box::new(CoreError::DimensionMismatch {
                    expected: m,
                    found: p.dim(),
                    context: "prediction set",
                }),
            });
        }
        out.extend_from_slice(p.coords());
    }
    Ok(out)
}

fn flatten_thresholds<T: Scalar>(thresholds: &[SimplexPoint<T>], m: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(thresholds.len() * m);
    for t in thresholds {
        debug_assert_eq!(t.dim(), m);
        out.extend_from_slice(t.coords());
    }
    out
}

fn check_batch<T: Scalar>(probs: &[T], labels: &[usize], m: usize) -> Result<(), CoreError> {
    if labels.is_empty() {
        return Err(CoreError::Empty("prediction set"));
    }
    if probs.len() != labels.len() * m {
        return Err(CoreError::DimensionMismatch {
            expected: labels.len() * m,
            found: probs.len(),
            context: "flat probability buffer",
        });
    }
    for &y in labels {
        if y < 1 || y > m {
            return Err(CoreError::ClassOutOfRange { label: y, m });
        }
    }
    Ok(())
}

/// Pairwise sigmoid table for one (sample, threshold) pair.
///
/// With v_c = λ(ŷ^c − τ^c), every factor σ(v_j − v_k) equals
/// e_j / (e_j + e_k) for e_c = exp(v_c − max_c v_c), which needs only m
/// exponentials per table instead of one per ordered pair; the two
/// orientations then share one division's complement exactly. When both
/// exponentials underflow (huge λ), the pair falls back to the direct
/// stable sigmoid of its margin.
struct PairScratch<T> {
    m: usize,
    v: Vec<T>,
    e: Vec<T>,
    sig: Vec<T>,
}

impl<T: Scalar> PairScratch<T> {
    fn new(m: usize) -> Self {
        Self {
            m,
            v: vec![T::zero(); m],
            e: vec![T::zero(); m],
            sig: vec![T::zero(); m * m],
        }
    }

    fn fill(&mut self, y: &[T], t: &[T], lambda: T) {
        let m = self.m;
        let mut vmax = T::neg_infinity();
        for c in 0..m {
            let vc = lambda * (y[c] - t[c]);
            self.v[c] = vc;
            if vc > vmax {
                vmax = vc;
            }
        }
        for c in 0..m {
            self.e[c] = (self.v[c] - vmax).exp();
        }
        for j in 0..m {
            for k in (j + 1)..m {
                let den = self.e[j] + self.e[k];
                let (s_jk, s_kj) = if den > T::zero() {
                    let s = self.e[j] / den;
                    (s, T::one() - s)
                } else {
                    let s = sigmoid(self.v[j] - self.v[k]);
                    (s, T::one() - s)
                };
                self.sig[j * m + k] = s_jk;
                self.sig[k * m + j] = s_kj;
            }
        }
    }

    #[inline]
    fn sig(&self, j: usize, k: usize) -> T {
        self.sig[j * self.m + k]
    }

    /// Π_{k≠j} σ(v_j − v_k).
    fn membership(&self, j: usize) -> T {
        let mut p = T::one();
        for k in 0..self.m {
            if k != j {
                p = p * self.sig(j, k);
            }
        }
        p
    }
}

/// Accumulates the per-class soft confusion matrices over a flat batch.
fn soft_counts<T: Scalar>(
    probs: &[T],
    labels: &[usize],
    m: usize,
    lambda: T,
    thr: &[T],
) -> Vec<SoftConfusion<T>> {
    let n = labels.len();
    let n_thr = thr.len() / m;
    debug_assert!(n_thr >= 1);
    let inv_n_thr = T::one() / count::<T>(n_thr);
    let mut tp = vec![T::zero(); m];
    let mut fp_ = vec![T::zero(); m];
    let mut support = vec![0usize; m];
    let mut scratch = PairScratch::new(m);
    let mut prow = vec![T::zero(); m];
    for i in 0..n {
        let y = &probs[i * m..(i + 1) * m];
        for x in prow.iter_mut() {
            *x = T::zero();
        }
        for r in 0..n_thr {
            scratch.fill(y, &thr[r * m..(r + 1) * m], lambda);
            for (j, acc) in prow.iter_mut().enumerate() {
                *acc += scratch.membership(j);
            }
        }
        let yi = labels[i] - 1;
        support[yi] += 1;
        for j in 0..m {
            let ph = prow[j] * inv_n_thr;
            if j == yi {
                tp[j] += ph;
            } else {
                fp_[j] += ph;
            }
        }
    }
    (0..m)
        .map(|j| {
            let nj = count::<T>(support[j]);
            let fn_ = nj - tp[j];
            let tn = count::<T>(n - support[j]) - fp_[j];
            ConfusionCounts::new(tn, fp_[j], fn_, tp[j])
        })
        .collect()
}

/// Score value and its four partial derivatives (∂s/∂tp, ∂s/∂fn, ∂s/∂fp,
/// ∂s/∂tn) with vanishing-prone denominators smoothed by
/// [`DENOMINATOR_GUARD`]. Accuracy and the linear diagnostic divide by the
/// batch size, which cannot vanish, and stay exact — that exactness is what
/// makes the linear score commute with the Monte-Carlo expectation to
/// machine precision.
fn smoothed_score_and_partials<T: Scalar>(
    kind: ScoreKind,
    cm: &ConfusionCounts<T>,
) -> (T, T, T, T, T) {
    let eps = fp::<T>(DENOMINATOR_GUARD);
    let two = fp::<T>(2.0);
    let tn = cm.true_neg;
    let fp_ = cm.false_pos;
    let fn_ = cm.false_neg;
    let tp = cm.true_pos;
    match kind {
        ScoreKind::Accuracy => {
            let total = cm.total();
            let s = (tp + tn) / total;
            let d_pos = (fn_ + fp_) / (total * total);
            let d_neg = -(tp + tn) / (total * total);
            (s, d_pos, d_neg, d_neg, d_pos)
        }
        ScoreKind::LinearDiagnostic => {
            let total = cm.total();
            let num = tp + tn - fp_ - fn_;
            let s = num / total;
            let d_pos = (total - num) / (total * total);
            let d_neg = (-total - num) / (total * total);
            (s, d_pos, d_neg, d_neg, d_pos)
        }
        ScoreKind::Precision => {
            let den = tp + fp_ + eps;
            let s = tp / den;
            (
                s,
                (fp_ + eps) / (den * den),
                T::zero(),
                -tp / (den * den),
                T::zero(),
            )
        }
        ScoreKind::Recall => {
            let den = tp + fn_ + eps;
            let s = tp / den;
            (
                s,
                (fn_ + eps) / (den * den),
                -tp / (den * den),
                T::zero(),
                T::zero(),
            )
        }
        ScoreKind::F1 => {
            let den = two * tp + fp_ + fn_ + eps;
            let s = two * tp / den;
            let d_tp = two * (fp_ + fn_ + eps) / (den * den);
            let d_err = -two * tp / (den * den);
            (s, d_tp, d_err, d_err, T::zero())
        }
        ScoreKind::Tss => {
            let d1 = tp + fn_ + eps;
            let d2 = tn + fp_ + eps;
            let s = tp / d1 + tn / d2 - T::one();
            (
                s,
                (fn_ + eps) / (d1 * d1),
                -tp / (d1 * d1),
                -tn / (d2 * d2),
                (fp_ + eps) / (d2 * d2),
            )
        }
    }
}
