//! A-posteriori threshold tuning: score every candidate threshold on a
//! designated split and keep the argmax, with the barycenter always in the
//! running so the tuned rule never underperforms plain argmax on that
//! split.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::metrics::{macro_score, overall_accuracy, per_class_confusions, ScoreSpec};
use crate::regions::TiePolicy;
use crate::scalar::Scalar;
use crate::simplex::{
    sample_dirichlet, simplex_grid, simplex_grid_count, DirichletParams, SimplexPoint,
};

/// Default ceiling on the number of candidate thresholds scored in one
/// tuning call.
pub const DEFAULT_CANDIDATE_BUDGET: u128 = 10_000_000;

/// What the tuner maximizes on the tuning split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuneObjective {
    /// Mean of a binary score over the m one-vs-rest confusion matrices.
    MacroScore(ScoreSpec),
    /// Fraction of samples assigned to their labeled class.
    OverallAccuracy,
}

impl TuneObjective {
    /// Evaluates the objective for one threshold on the given split.
    pub fn evaluate<T: Scalar>(
        &self,
        preds: &[SimplexPoint<T>],
        labels: &[usize],
        tau: &SimplexPoint<T>,
        tie_policy: TiePolicy,
    ) -> Result<T, CoreError> {
        match self {
            TuneObjective::MacroScore(spec) => {
                let cms = per_class_confusions(preds, labels, tau, tie_policy)?;
                macro_score(*spec, &cms)
            }
            TuneObjective::OverallAccuracy => overall_accuracy(preds, labels, tau, tie_policy),
        }
    }
}

/// Outcome of a tuning run.
#[derive(Debug, Clone)]
pub struct TuneResult<T> {
    /// The winning threshold.
    pub best_tau: SimplexPoint<T>,
    /// Objective value of the winner on the tuning split.
    pub best_score: T,
    /// Index of the winner within `candidates` (ties break to the lowest
    /// index, making the winner reproducible).
    pub best_index: usize,
    /// Every candidate with its objective value, in evaluation order:
    /// grid/draw order, with the barycenter appended when not already
    /// present.
    pub candidates: Vec<(SimplexPoint<T>, T)>,
    /// The maximized objective.
    pub objective: TuneObjective,
    /// Objective value at the barycenter — the plain argmax rule — on the
    /// same split. Never exceeds `best_score` because the barycenter is
    /// always a candidate.
    pub baseline_argmax_score: T,
}

/// Scores every point of the resolution-k simplex grid (plus the barycenter
/// when k is not a multiple of m) and returns the argmax with ties broken
/// by lowest candidate index. Uses the default candidate budget.
pub fn tune_grid<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    k: usize,
    tie_policy: TiePolicy,
) -> Result<TuneResult<T>, CoreError> {
    tune_grid_with_budget(preds, labels, objective, k, tie_policy, DEFAULT_CANDIDATE_BUDGET)
}

/// [`tune_grid`] with an explicit candidate budget: a grid whose point
/// count exceeds it is rejected before any allocation.
pub fn tune_grid_with_budget<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    k: usize,
    tie_policy: TiePolicy,
    budget: u128,
) -> Result<TuneResult<T>, CoreError> {
    let m = check_split(preds, labels)?;
    let mut total = simplex_grid_count(m, k)?;
    let append_barycenter = k % m != 0;
    if append_barycenter {
        total += 1;
    }
    if total > budget {
        return Err(CoreError::BudgetExceeded {
            candidates: total,
            budget,
        });
    }
    let mut candidates = simplex_grid(m, k)?;
    if append_barycenter {
        candidates.push(SimplexPoint::barycenter(m)?);
    }
    score_candidates(preds, labels, objective, candidates, tie_policy)
}

/// Scores `n_draws` Dirichlet-sampled candidate thresholds plus the
/// barycenter (appended last). Deterministic for a fixed seed. Uses the
/// default candidate budget.
pub fn tune_mc<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    params: &DirichletParams<T>,
    n_draws: usize,
    seed: u64,
    tie_policy: TiePolicy,
) -> Result<TuneResult<T>, CoreError> {
    tune_mc_with_budget(
        preds,
        labels,
        objective,
        params,
        n_draws,
        seed,
        tie_policy,
        DEFAULT_CANDIDATE_BUDGET,
    )
}

/// [`tune_mc`] with an explicit candidate budget.
#[allow(clippy::too_many_arguments)]
pub fn tune_mc_with_budget<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    params: &DirichletParams<T>,
    n_draws: usize,
    seed: u64,
    tie_policy: TiePolicy,
    budget: u128,
) -> Result<TuneResult<T>, CoreError> {
    let m = check_split(preds, labels)?;
    if params.dim() != m {
        return Err(CoreError::DimensionMismatch {
            expected: m,
            found: params.dim(),
            context: "tune_mc candidate distribution",
        });
    }
    if n_draws < 1 {
        return Err(CoreError::InvalidConfig(
            "tune_mc needs at least one candidate draw".to_string(),
        ));
    }
    let total = n_draws as u128 + 1;
    if total > budget {
        return Err(CoreError::BudgetExceeded {
            candidates: total,
            budget,
        });
    }
    let mut candidates = sample_dirichlet(params, n_draws, seed);
    candidates.push(SimplexPoint::barycenter(m)?);
    score_candidates(preds, labels, objective, candidates, tie_policy)
}

/// One row of the m = 3 score landscape: a grid threshold and its
/// objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapRow<T> {
    pub tau: [T; 3],
    pub score: T,
}

/// Scores the whole resolution-k grid for a 3-class split, returning one
/// row per candidate in grid order (barycenter appended when off-grid) —
/// ready to plot over the triangle.
pub fn heatmap_table<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    k: usize,
    tie_policy: TiePolicy,
) -> Result<Vec<HeatmapRow<T>>, CoreError> {
    let m = check_split(preds, labels)?;
    if m != 3 {
        return Err(CoreError::DimensionMismatch {
            expected: 3,
            found: m,
            context: "heatmap_table",
        });
    }
    let result = tune_grid(preds, labels, objective, k, tie_policy)?;
    Ok(result
        .candidates
        .into_iter()
        .map(|(tau, score)| {
            let c = tau.coords();
            HeatmapRow {
                tau: [c[0], c[1], c[2]],
                score,
            }
        })
        .collect())
}

/// Shared split validation; returns m.
fn check_split<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
) -> Result<usize, CoreError> {
    if preds.is_empty() {
        return Err(CoreError::Empty("prediction set"));
    }
    if preds.len() != labels.len() {
        return Err(CoreError::LengthMismatch {
            predictions: preds.len(),
            labels: labels.len(),
        });
    }
    let m = preds[0].dim();
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
    }
    for &y in labels {
        if y < 1 || y > m {
            return Err(CoreError::ClassOutOfRange { label: y, m });
        }
    }
    Ok(m)
}

/// Evaluates the objective at every candidate (in parallel — candidates
/// are independent) and reduces to the lowest-index maximum, which is
/// deterministic no matter how the work is scheduled.
fn score_candidates<T: Scalar>(
    preds: &[SimplexPoint<T>],
    labels: &[usize],
    objective: TuneObjective,
    candidates: Vec<SimplexPoint<T>>,
    tie_policy: TiePolicy,
) -> Result<TuneResult<T>, CoreError> {
    let scores: Vec<T> = candidates
        .par_iter()
        .map(|tau| objective.evaluate(preds, labels, tau, tie_policy))
        .collect::<Result<_, _>>()?;
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best_index] {
            best_index = i;
        }
    }
    let m = preds[0].dim();
    let barycenter = SimplexPoint::barycenter(m)?;
    let baseline_argmax_score = objective.evaluate(preds, labels, &barycenter, tie_policy)?;
    let best_tau = candidates[best_index].clone();
    let best_score = scores[best_index];
    Ok(TuneResult {
        best_tau,
        best_score,
        best_index,
        candidates: candidates.into_iter().zip(scores).collect(),
        objective,
        baseline_argmax_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ScoreKind;
    use crate::simplex::validate_simplex;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(v: &[f64]) -> SimplexPoint<f64> {
        validate_simplex(v.to_vec(), 1e-9).unwrap()
    }

    fn f1() -> TuneObjective {
        TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::F1))
    }

    /// A noisy random split: Dirichlet predictions with labels agreeing
    /// with the argmax most of the time.
    fn noisy_split(n: usize, seed: u64) -> (Vec<SimplexPoint<f64>>, Vec<usize>) {
        let params = DirichletParams::new(vec![1.5f64, 1.0, 0.7]).unwrap();
        let preds = sample_dirichlet(&params, n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let labels = preds
            .iter()
            .map(|p| {
                let arg = (0..3).max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap()).unwrap() + 1;
                if rng.random::<f64>() < 0.7 {
                    arg
                } else {
                    rng.random_range(1..=3)
                }
            })
            .collect();
        (preds, labels)
    }

    #[test]
    fn candidate_count_includes_appended_barycenter() {
        let (preds, labels) = noisy_split(40, 1);
        // k = 200 is not a multiple of 3, so the barycenter is appended:
        // 20301 grid points + 1.
        let r = tune_grid(&preds, &labels, f1(), 200, TiePolicy::LowestIndex).unwrap();
        assert_eq!(r.candidates.len(), 20302);
        assert_eq!(
            r.candidates.last().unwrap().0,
            SimplexPoint::barycenter(3).unwrap()
        );
        // k = 6 is a multiple of 3: nothing appended, barycenter on-grid.
        let r6 = tune_grid(&preds, &labels, f1(), 6, TiePolicy::LowestIndex).unwrap();
        assert_eq!(r6.candidates.len(), 28);
        let b = SimplexPoint::barycenter(3).unwrap();
        assert!(r6.candidates.iter().any(|(t, _)| t == &b));
    }

    #[test]
    fn best_never_below_argmax_baseline() {
        for seed in 0..5 {
            let (preds, labels) = noisy_split(60, seed);
            let r = tune_grid(&preds, &labels, f1(), 7, TiePolicy::LowestIndex).unwrap();
            assert!(r.best_score >= r.baseline_argmax_score);
            assert_eq!(
                r.best_score,
                r.candidates[r.best_index].1,
                "best_index must point at the winning candidate"
            );
            let max = r
                .candidates
                .iter()
                .map(|&(_, s)| s)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(r.best_score, max);
        }
    }

    #[test]
    fn single_sample_can_always_be_captured() {
        // One sample labeled 1 whose argmax is elsewhere: some grid
        // threshold still classifies it as class 1 perfectly.
        let preds = vec![sp(&[0.2, 0.4, 0.4])];
        let labels = vec![1];
        let r = tune_grid(
            &preds,
            &labels,
            TuneObjective::OverallAccuracy,
            10,
            TiePolicy::LowestIndex,
        )
        .unwrap();
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.baseline_argmax_score, 0.0);
        // Macro-F1 on a single sample caps at 1/3 (two classes are absent
        // and score the zero-division default), still an improvement.
        let rf = tune_grid(&preds, &labels, f1(), 10, TiePolicy::LowestIndex).unwrap();
        assert_relative_eq!(rf.best_score, 1.0 / 3.0, epsilon = 1e-15);
        assert!(rf.best_score > rf.baseline_argmax_score);
    }

    #[test]
    fn perfect_argmax_split_cannot_improve() {
        let preds = vec![
            sp(&[0.8, 0.1, 0.1]),
            sp(&[0.1, 0.8, 0.1]),
            sp(&[0.1, 0.1, 0.8]),
        ];
        let labels = vec![1, 2, 3];
        let r = tune_grid(&preds, &labels, f1(), 4, TiePolicy::LowestIndex).unwrap();
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.baseline_argmax_score, 1.0);
    }

    #[test]
    fn budget_guard_trips_before_allocation() {
        let (preds, labels) = noisy_split(10, 3);
        let err =
            tune_grid_with_budget(&preds, &labels, f1(), 200, TiePolicy::LowestIndex, 20_000)
                .unwrap_err();
        assert!(matches!(
            err,
            CoreError::BudgetExceeded {
                candidates: 20302,
                budget: 20_000
            }
        ));
        let params = DirichletParams::symmetric(3, 1.0f64).unwrap();
        let err = tune_mc_with_budget(
            &preds,
            &labels,
            f1(),
            &params,
            50,
            9,
            TiePolicy::LowestIndex,
            10,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::BudgetExceeded { .. }));
    }

    #[test]
    fn mc_is_deterministic_and_includes_barycenter() {
        let (preds, labels) = noisy_split(50, 4);
        let params = DirichletParams::symmetric(3, 1.0f64).unwrap();
        let a = tune_mc(&preds, &labels, f1(), &params, 100, 11, TiePolicy::LowestIndex).unwrap();
        let b = tune_mc(&preds, &labels, f1(), &params, 100, 11, TiePolicy::LowestIndex).unwrap();
        assert_eq!(a.best_tau, b.best_tau);
        assert_eq!(a.best_score, b.best_score);
        assert_eq!(a.candidates.len(), 101);
        assert_eq!(
            a.candidates.last().unwrap().0,
            SimplexPoint::barycenter(3).unwrap()
        );
        assert!(a.best_score >= a.baseline_argmax_score);
        // Two-candidate degenerate case.
        let tiny =
            tune_mc(&preds, &labels, f1(), &params, 1, 5, TiePolicy::LowestIndex).unwrap();
        assert_eq!(tiny.candidates.len(), 2);
        assert_eq!(
            tiny.best_score,
            tiny.candidates[0].1.max(tiny.candidates[1].1)
        );
    }

    #[test]
    fn grid_refinement_never_hurts_on_nested_grids() {
        // Every k-grid point is a k'-grid point when k divides k'.
        let (preds, labels) = noisy_split(80, 6);
        let coarse = tune_grid(&preds, &labels, f1(), 5, TiePolicy::LowestIndex).unwrap();
        let fine = tune_grid(&preds, &labels, f1(), 10, TiePolicy::LowestIndex).unwrap();
        assert!(fine.best_score >= coarse.best_score);
    }

    #[test]
    fn joint_permutation_leaves_the_result_unchanged() {
        let (preds, labels) = noisy_split(40, 8);
        let r1 = tune_grid(&preds, &labels, f1(), 6, TiePolicy::LowestIndex).unwrap();
        // Reverse both collections together.
        let rp: Vec<_> = preds.iter().rev().cloned().collect();
        let rl: Vec<_> = labels.iter().rev().copied().collect();
        let r2 = tune_grid(&rp, &rl, f1(), 6, TiePolicy::LowestIndex).unwrap();
        assert_eq!(r1.best_score, r2.best_score);
        assert_eq!(r1.best_tau, r2.best_tau);
    }

    #[test]
    fn heatmap_matches_tuning_and_requires_three_classes() {
        let (preds, labels) = noisy_split(30, 9);
        let rows = heatmap_table(&preds, &labels, f1(), 2, TiePolicy::LowestIndex).unwrap();
        // 6 grid rows + appended barycenter.
        assert_eq!(rows.len(), 7);
        let r = tune_grid(&preds, &labels, f1(), 2, TiePolicy::LowestIndex).unwrap();
        let best_row = rows
            .iter()
            .map(|row| row.score)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best_row, r.best_score);

        // Two classes → dimension error.
        let preds2 = vec![sp(&[0.7, 0.3]), sp(&[0.2, 0.8])];
        let labels2 = vec![1, 2];
        assert!(matches!(
            heatmap_table(&preds2, &labels2, f1(), 2, TiePolicy::LowestIndex),
            Err(CoreError::DimensionMismatch { expected: 3, .. })
        ));
    }

    #[test]
    fn overall_accuracy_objective_works() {
        let (preds, labels) = noisy_split(50, 12);
        let r = tune_grid(
            &preds,
            &labels,
            TuneObjective::OverallAccuracy,
            6,
            TiePolicy::LowestIndex,
        )
        .unwrap();
        assert!(r.best_score >= r.baseline_argmax_score);
        assert!((0.0..=1.0).contains(&r.best_score));
    }

    #[test]
    fn split_validation_errors() {
        let (preds, _) = noisy_split(5, 13);
        assert!(matches!(
            tune_grid(&preds, &[1, 2], f1(), 3, TiePolicy::LowestIndex),
            Err(CoreError::LengthMismatch { .. })
        ));
        assert!(matches!(
            tune_grid(&preds, &[1, 2, 3, 4, 1], f1(), 3, TiePolicy::LowestIndex),
            Err(CoreError::ClassOutOfRange { label: 4, m: 3 })
        ));
        assert!(matches!(
            tune_grid::<f64>(&[], &[], f1(), 3, TiePolicy::LowestIndex),
            Err(CoreError::Empty(_))
        ));
    }
}
