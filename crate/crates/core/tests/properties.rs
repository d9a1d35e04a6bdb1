//! Property-based checks of the library's structural invariants: the
//! region partition, argmax equivalence at the barycenter, grid
//! combinatorics, confusion-count conservation laws, tuning equivariances,
//! and the soft-count complement coupling.

use proptest::prelude::*;

use taumax_core::metrics::{
    confusions_from_assignments, macro_score, ScoreKind, ScoreSpec,
};
use taumax_core::regions::{classify, region_of, RegionAssignment, TiePolicy};
use taumax_core::simplex::{
    normalize_simplex, simplex_grid, simplex_grid_count, validate_simplex, DirichletParams,
    SimplexPoint,
};
use taumax_core::sol::{expected_confusions, soft_membership, MultiSol, SolConfig};
use taumax_core::tuning::{tune_grid, TuneObjective};
use taumax_core::{sample_dirichlet, Simplex64};

/// Random interior-ish simplex point of dimension m.
fn simplex_point(m: usize) -> impl Strategy<Value = Simplex64> {
    prop::collection::vec(1e-6..1.0f64, m).prop_map(|v| normalize_simplex(v).unwrap())
}

/// Random split: n predictions with labels in 1..=m.
fn split(m: usize, n: usize) -> impl Strategy<Value = (Vec<Simplex64>, Vec<usize>)> {
    (
        prop::collection::vec(simplex_point(m), n),
        prop::collection::vec(1..=m, n),
    )
}

proptest! {
    /// Every simplex point from the normalizing constructor satisfies the
    /// validation invariants at the conventional tolerance.
    #[test]
    fn normalized_points_validate(raw in prop::collection::vec(1e-9..10.0f64, 2..8)) {
        let p = normalize_simplex(raw).unwrap();
        validate_simplex(p.coords().to_vec(), 1e-9).unwrap();
    }

    /// Region assignment partitions the simplex: every prediction gets
    /// exactly one class — the strict unique maximizer of the shifted
    /// scores ŷ − τ — or an exact floating-point tie (the boundary has
    /// measure zero). On generic points the pairwise-margin form of the
    /// same rule agrees with the winner.
    #[test]
    fn regions_partition_the_simplex((y, t) in (2usize..6).prop_flat_map(|m| (simplex_point(m), simplex_point(m)))) {
        let m = y.dim();
        let yc = y.coords();
        let tc = t.coords();
        let s: Vec<f64> = taumax_core::regions::shifted_scores(&y, &t).unwrap();
        let best = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let maximizers: Vec<usize> = (0..m).filter(|&j| s[j] == best).map(|j| j + 1).collect();
        match region_of(&y, &t).unwrap() {
            RegionAssignment::Class(j) => {
                prop_assert_eq!(maximizers, vec![j], "winner must be the unique shifted maximizer");
                // Random reals never land within one rounding step of a
                // tie, so the pairwise-margin form picks the same class.
                let pairwise: Vec<usize> = (0..m)
                    .filter(|&a| (0..m).all(|k| k == a || yc[a] - yc[k] > tc[a] - tc[k]))
                    .map(|a| a + 1)
                    .collect();
                prop_assert_eq!(pairwise, vec![j]);
            }
            RegionAssignment::Boundary(tied) => {
                prop_assert!(tied.len() >= 2);
                prop_assert_eq!(&tied, &maximizers, "boundary must report every tied maximizer");
            }
        }
    }

    /// Classifying at the barycenter is the argmax rule (lowest index on
    /// exact ties, which random reals essentially never produce).
    #[test]
    fn barycenter_classification_is_argmax(y in (2usize..7).prop_flat_map(simplex_point)) {
        let m = y.dim();
        let b = SimplexPoint::barycenter(m).unwrap();
        let mut arg = 0;
        for j in 1..m {
            if y[j] > y[arg] {
                arg = j;
            }
        }
        let unique = (0..m).filter(|&j| y[j] == y[arg]).count() == 1;
        prop_assume!(unique);
        prop_assert_eq!(classify(&y, &b, TiePolicy::LowestIndex).unwrap(), arg + 1);
    }

    /// Shifted scores always sum to ~0: both points sum to one.
    #[test]
    fn shifted_scores_sum_to_zero((y, t) in (2usize..6).prop_flat_map(|m| (simplex_point(m), simplex_point(m)))) {
        let s = taumax_core::regions::shifted_scores(&y, &t).unwrap();
        let total: f64 = s.iter().sum();
        prop_assert!(total.abs() < 1e-9);
    }

    /// Grid enumeration: exact count, all points valid, ascending
    /// lexicographic order, vertices present, barycenter present iff m | k.
    #[test]
    fn grid_structure(m in 2usize..5, k in 1usize..9) {
        let g = simplex_grid::<f64>(m, k).unwrap();
        prop_assert_eq!(g.len() as u128, simplex_grid_count(m, k).unwrap());
        for p in &g {
            validate_simplex(p.coords().to_vec(), 1e-9).unwrap();
        }
        for w in g.windows(2) {
            prop_assert!(
                w[0].coords() < w[1].coords(),
                "grid must be strictly ascending lexicographic"
            );
        }
        for j in 1..=m {
            let v = SimplexPoint::vertex(m, j).unwrap();
            prop_assert!(g.iter().any(|p| p == &v));
        }
        let b = SimplexPoint::<f64>::barycenter(m).unwrap();
        prop_assert_eq!(g.iter().any(|p| p == &b), k % m == 0);
    }

    /// Hard confusion counts conserve row sums and the correct-count
    /// identity for any assignment/label pair.
    #[test]
    fn confusion_conservation((assigned, labels) in (2usize..6, 1usize..40).prop_flat_map(|(m, n)| {
        (prop::collection::vec(1..=m, n), prop::collection::vec(1..=m, n))
    })) {
        let m = *assigned.iter().chain(labels.iter()).max().unwrap();
        let cms = confusions_from_assignments::<f64>(&assigned, &labels, m).unwrap();
        let n = labels.len() as f64;
        let mut tp_total = 0.0;
        for (j, cm) in cms.iter().enumerate() {
            let nj = labels.iter().filter(|&&y| y == j + 1).count() as f64;
            prop_assert_eq!(cm.support(), nj);
            prop_assert_eq!(cm.false_pos + cm.true_neg, n - nj);
            prop_assert_eq!(cm.total(), n);
            tp_total += cm.true_pos;
        }
        let correct = assigned.iter().zip(&labels).filter(|(a, y)| a == y).count() as f64;
        prop_assert_eq!(tp_total, correct);
    }

    /// Tuning is equivariant under class relabeling: permuting prediction
    /// coordinates and labels by π preserves the best score, and the
    /// π-image of the original winner still attains it.
    #[test]
    fn tuning_relabeling_equivariance((preds, labels) in split(3, 12), shift in 1usize..3) {
        // Cyclic permutation π(c) = (c + shift) mod 3, acting on 0-based coords.
        let perm = |c: usize| (c + shift) % 3;
        let spec = TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::F1));
        let r = tune_grid(&preds, &labels, spec, 4, TiePolicy::LowestIndex).unwrap();
        let preds_p: Vec<Simplex64> = preds
            .iter()
            .map(|p| {
                let mut v = vec![0.0; 3];
                for c in 0..3 {
                    v[perm(c)] = p[c];
                }
                validate_simplex(v, 1e-9).unwrap()
            })
            .collect();
        let labels_p: Vec<usize> = labels.iter().map(|&y| perm(y - 1) + 1).collect();
        let rp = tune_grid(&preds_p, &labels_p, spec, 4, TiePolicy::LowestIndex).unwrap();
        prop_assert!((r.best_score - rp.best_score).abs() < 1e-12);
        // π(best_tau) is in the permuted problem's candidate set (the grid
        // is permutation-closed) and must attain the same score there.
        let mut tau_p = vec![0.0; 3];
        for c in 0..3 {
            tau_p[perm(c)] = r.best_tau[c];
        }
        let tau_p = validate_simplex(tau_p, 1e-9).unwrap();
        let at_image = spec
            .evaluate(&preds_p, &labels_p, &tau_p, TiePolicy::LowestIndex)
            .unwrap();
        prop_assert!((at_image - r.best_score).abs() < 1e-12);
    }

    /// Nested grids never lose ground: doubling the resolution keeps every
    /// coarse candidate available.
    #[test]
    fn refinement_monotonicity((preds, labels) in split(3, 10), k in 2usize..5) {
        let spec = TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::F1));
        let coarse = tune_grid(&preds, &labels, spec, k, TiePolicy::LowestIndex).unwrap();
        let fine = tune_grid(&preds, &labels, spec, 2 * k, TiePolicy::LowestIndex).unwrap();
        prop_assert!(fine.best_score >= coarse.best_score);
    }

    /// Soft counts complement-couple exactly: tp̂ + fn̂ reproduces the class
    /// support and fp̂ + tn̂ its complement, for any λ and threshold count.
    #[test]
    fn soft_count_complements((preds, labels) in split(3, 15), lambda in 0.0..50.0f64, n_thr in 1usize..20, seed in any::<u64>()) {
        let thresholds = sample_dirichlet(
            &DirichletParams::symmetric(3, 2.0f64).unwrap(),
            n_thr,
            seed,
        );
        let cms = expected_confusions(&preds, &labels, &thresholds, lambda).unwrap();
        let n = labels.len() as f64;
        for (j, cm) in cms.iter().enumerate() {
            let nj = labels.iter().filter(|&&y| y == j + 1).count() as f64;
            prop_assert!((cm.support() - nj).abs() <= 1e-9);
            prop_assert!((cm.false_pos + cm.true_neg - (n - nj)).abs() <= 1e-9);
            prop_assert!(cm.true_pos >= 0.0 && cm.true_pos <= nj + 1e-12);
            prop_assert!(cm.false_pos >= 0.0 && cm.false_pos <= n - nj + 1e-12);
        }
    }

    /// The loss engine is a pure function of its config: rebuilt engines
    /// reuse the identical threshold sample and reproduce the loss bitwise,
    /// and bounded scores keep the loss in [−1, 0].
    #[test]
    fn loss_reuse_and_bounds((preds, labels) in split(3, 10), seed in any::<u64>(), kind_idx in 0usize..3) {
        let kind = [ScoreKind::F1, ScoreKind::Accuracy, ScoreKind::Recall][kind_idx];
        let config = SolConfig::new(
            DirichletParams::symmetric(3, 5.0f64).unwrap(),
            20.0,
            16,
            seed,
            ScoreSpec::new(kind),
        )
        .unwrap();
        let a = MultiSol::new(config.clone()).unwrap();
        let b = MultiSol::new(config).unwrap();
        prop_assert_eq!(a.thresholds(), b.thresholds());
        let la = a.loss(&preds, &labels).unwrap();
        let lb = b.loss(&preds, &labels).unwrap();
        prop_assert_eq!(la, lb);
        prop_assert!((-1.0..=0.0).contains(&la), "loss {} out of bounds", la);
        // The gradient path reports the identical value.
        let (lg, grad) = a.loss_with_gradient(&preds, &labels).unwrap();
        prop_assert_eq!(la, lg);
        for row in &grad {
            for &g in row {
                prop_assert!(g.is_finite());
            }
        }
    }

    /// Two-class soft membership collapses to a single sigmoid factor, and
    /// memberships over all classes with one threshold sum to at most ~1
    /// (each pair contributes complementary factors).
    #[test]
    fn two_class_membership_is_one_sigmoid((y, t) in (simplex_point(2), simplex_point(2)), lambda in 0.1..100.0f64) {
        let p1 = soft_membership(&y, &t, 1, lambda).unwrap();
        let p2 = soft_membership(&y, &t, 2, lambda).unwrap();
        // Complementary margins: the two memberships sum to exactly one.
        prop_assert!((p1 + p2 - 1.0).abs() < 1e-12);
    }

    /// Macro one-vs-rest accuracy is an affine image of overall accuracy.
    #[test]
    fn macro_accuracy_affine_identity((assigned, labels) in (1usize..40).prop_flat_map(|n| {
        (prop::collection::vec(1..=4usize, n), prop::collection::vec(1..=4usize, n))
    })) {
        let m = 4;
        let cms = confusions_from_assignments::<f64>(&assigned, &labels, m).unwrap();
        let macro_acc = macro_score(ScoreSpec::new(ScoreKind::Accuracy), &cms).unwrap();
        let correct = assigned.iter().zip(&labels).filter(|(a, y)| a == y).count() as f64;
        let overall = correct / labels.len() as f64;
        let expect = 1.0 - (2.0 / m as f64) * (1.0 - overall);
        prop_assert!((macro_acc - expect).abs() < 1e-12);
    }
}

#[test]
fn mc_candidates_approach_the_grid_optimum() {
    // With a flat candidate prior and growing sample, the Monte-Carlo
    // tuner's best score is non-decreasing in nested prefixes and closes
    // in on the grid optimum at comparable resolution.
    let params = DirichletParams::new(vec![1.2f64, 1.0, 0.8]).unwrap();
    let preds = sample_dirichlet(&params, 300, 5);
    let labels: Vec<usize> = preds
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i % 3 == 0 {
                1 + i % 3
            } else {
                1 + (0..3)
                    .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
                    .unwrap()
            }
        })
        .collect();
    let objective = TuneObjective::MacroScore(ScoreSpec::new(ScoreKind::F1));
    let grid = tune_grid(&preds, &labels, objective, 100, TiePolicy::LowestIndex).unwrap();
    let flat = DirichletParams::symmetric(3, 1.0f64).unwrap();
    let mut prev = f64::NEG_INFINITY;
    let mut last = 0.0;
    for n_draws in [100usize, 1000, 4000] {
        // Same seed: draw prefixes are nested, so the best score cannot
        // decrease.
        let r = taumax_core::tuning::tune_mc(
            &preds,
            &labels,
            objective,
            &flat,
            n_draws,
            77,
            TiePolicy::LowestIndex,
        )
        .unwrap();
        assert!(r.best_score >= prev);
        prev = r.best_score;
        last = r.best_score;
    }
    assert!(
        (grid.best_score - last).abs() < 0.01,
        "MC optimum {last} should match grid optimum {} within 0.01",
        grid.best_score
    );
}
