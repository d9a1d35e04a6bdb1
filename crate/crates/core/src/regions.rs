//! The threshold decision rule: a threshold point τ carves the simplex into
//! m disjoint open regions, one per class, that meet at τ. A prediction is
//! assigned to class j exactly when its margin over every other class
//! exceeds the threshold's margin — at the barycenter this is the plain
//! argmax rule.

use crate::error::CoreError;
use crate::scalar::Scalar;
use crate::simplex::SimplexPoint;

/// Where a prediction lands relative to the regions carved out by a
/// threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionAssignment {
    /// The unique class in `1..=m` whose strict inequalities all hold.
    Class(usize),
    /// No class strictly wins. Carries the tied classes (at least two,
    /// ascending): the maximizers of the shifted scores. Boundary sets have
    /// measure zero, so ties occur only on exact floating-point
    /// coincidences.
    Boundary(Vec<usize>),
}

/// How [`classify`] resolves boundary points into a definite class.
///
/// A natural-sounding third policy — "highest shifted score first, then
/// lowest index" — coincides with [`TiePolicy::LowestIndex`]: every tied
/// class attains the same, maximal shifted score by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Deterministically pick the smallest tied class index. This matches
    /// the usual argmax convention at the barycenter.
    #[default]
    LowestIndex,
    /// Refuse to classify boundary points ([`CoreError::BoundaryTie`]).
    Error,
}

/// Componentwise difference `y_hat − tau`. Class j wins the region test
/// exactly when coordinate j of this vector is its strict unique maximum.
pub fn shifted_scores<T: Scalar>(
    y_hat: &SimplexPoint<T>,
    tau: &SimplexPoint<T>,
) -> Result<Vec<T>, CoreError> {
    if y_hat.dim() != tau.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: tau.dim(),
            found: y_hat.dim(),
            context: "shifted_scores",
        });
    }
    Ok(y_hat
        .coords()
        .iter()
        .zip(tau.coords())
        .map(|(&y, &t)| y - t)
        .collect())
}

/// Region membership: class j wins iff `y^j − y^k > τ^j − τ^k` for every
/// k ≠ j, which is exactly the statement that coordinate j of the shifted
/// scores `y − τ` is the strict unique maximum. When no class wins, the
/// prediction lies on a boundary and the tied maximizers are reported.
///
/// The test is evaluated on the shifted scores, one subtraction per class,
/// rather than on the pairwise differences. The two forms coincide in real
/// arithmetic, but comparing `y^j − y^k` against `τ^j − τ^k` rounds each
/// side separately and can disagree with itself by one ulp near a tie —
/// leaving either no winner or two. Ranking the single vector `y − τ`
/// guarantees the regions partition the simplex exactly: every prediction
/// gets one class or an exact floating-point tie.
pub fn region_of<T: Scalar>(
    y_hat: &SimplexPoint<T>,
    tau: &SimplexPoint<T>,
) -> Result<RegionAssignment, CoreError> {
    let m = tau.dim();
    if y_hat.dim() != m {
        return Err(CoreError::DimensionMismatch {
            expected: m,
            found: y_hat.dim(),
            context: "region_of",
        });
    }
    let y = y_hat.coords();
    let t = tau.coords();
    let mut best = y[0] - t[0];
    for j in 1..m {
        let s = y[j] - t[j];
        if s > best {
            best = s;
        }
    }
    let mut tied = (0..m).filter(|&j| y[j] - t[j] == best).map(|j| j + 1);
    let first = tied.next().expect("simplex points are nonempty");
    match tied.next() {
        None => Ok(RegionAssignment::Class(first)),
        Some(second) => {
            let mut all = vec![first, second];
            all.extend(tied);
            Ok(RegionAssignment::Boundary(all))
        }
    }
}

/// Classifies one prediction, resolving boundary points per `tie_policy`.
pub fn classify<T: Scalar>(
    y_hat: &SimplexPoint<T>,
    tau: &SimplexPoint<T>,
    tie_policy: TiePolicy,
) -> Result<usize, CoreError> {
    match region_of(y_hat, tau)? {
        RegionAssignment::Class(j) => Ok(j),
        RegionAssignment::Boundary(tied) => match tie_policy {
            TiePolicy::LowestIndex => Ok(tied[0]),
            TiePolicy::Error => Err(CoreError::BoundaryTie { tied }),
        },
    }
}

/// Classifies a batch of predictions against one threshold. Errors carry
/// the index of the offending prediction.
pub fn classify_batch<T: Scalar>(
    predictions: &[SimplexPoint<T>],
    tau: &SimplexPoint<T>,
    tie_policy: TiePolicy,
) -> Result<Vec<usize>, CoreError> {
    predictions
        .iter()
        .enumerate()
        .map(|(index, y_hat)| {
            classify(y_hat, tau, tie_policy).map_err(|source| CoreError::AtIndex {
                index,
                source: Box::new(source),
            })
        })
        .collect()
}
