//! Points of the probability simplex: validation, deterministic grid
//! enumeration, and Dirichlet sampling and density.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::scalar::{count, Scalar};

/// Absolute tolerance conventionally used when validating simplex sums.
pub const DEFAULT_SUM_TOL: f64 = 1e-9;

/// A point of the (m−1)-simplex: m coordinates, each in [0, 1] up to the
/// validation tolerance, summing to one.
///
/// The same type holds class-probability predictions, decision thresholds,
/// and tuning candidates. Coordinates are stored exactly as given — nothing
/// is silently renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> SimplexPoint<T> {
    /// Validates `raw` against the simplex invariants and wraps it.
    /// See [`validate_simplex`] for the exact rules.
    pub fn new(raw: Vec<T>, tol: T) -> Result<Self, CoreError> {
        validate_simplex(raw, tol)
    }

    /// Wraps coordinates that satisfy the invariants by construction
    /// (grid arithmetic, normalized Gamma draws, softmax rows).
    pub(crate) fn trusted(coords: Vec<T>) -> Self {
        debug_assert!(coords.len() >= 2, "simplex points need at least 2 coordinates");
        Self { coords }
    }

    /// The barycenter (1/m, …, 1/m). Thresholding there reproduces the
    /// plain argmax rule.
    pub fn barycenter(m: usize) -> Result<Self, CoreError> {
        if m < 2 {
            return Err(CoreError::InvalidSimplex(format!(
                "need at least 2 classes, got {m}"
            )));
        }
        let v = T::one() / count::<T>(m);
        Ok(Self::trusted(vec![v; m]))
    }

    /// The j-th vertex (1-based): coordinate j is one, the rest zero.
    pub fn vertex(m: usize, j: usize) -> Result<Self, CoreError> {
        if m < 2 {
            return Err(CoreError::InvalidSimplex(format!(
                "need at least 2 classes, got {m}"
            )));
        }
        if j < 1 || j > m {
            return Err(CoreError::ClassOutOfRange { label: j, m });
        }
        let mut coords = vec![T::zero(); m];
        coords[j - 1] = T::one();
        Ok(Self::trusted(coords))
    }

    /// Number of coordinates m (the point lives on the (m−1)-simplex).
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate slice, 0-indexed.
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Consumes the point, returning its coordinates.
    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

impl<T> std::ops::Index<usize> for SimplexPoint<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

/// Checks the simplex invariants on `raw` and wraps it without modifying
/// any coordinate:
///
/// * at least 2 coordinates;
/// * every coordinate finite and within `[-tol, 1 + tol]`;
/// * the coordinate sum within `tol` of one (absolute).
///
/// `tol` must be a finite non-negative scalar. Out-of-tolerance input is an
/// error — this function never renormalizes; see [`normalize_simplex`] for
/// the explicit repair.
pub fn validate_simplex<T: Scalar>(raw: Vec<T>, tol: T) -> Result<SimplexPoint<T>, CoreError> {
    if !(tol.is_finite() && tol >= T::zero()) {
        return Err(CoreError::InvalidConfig(format!(
            "validation tolerance must be finite and non-negative, got {tol}"
        )));
    }
    if raw.len() < 2 {
        return Err(CoreError::InvalidSimplex(format!(
            "need at least 2 coordinates, got {}",
            raw.len()
        )));
    }
    let mut sum = T::zero();
    for (i, &x) in raw.iter().enumerate() {
        if !x.is_finite() {
            return Err(CoreError::InvalidSimplex(format!(
                "coordinate {i} is not finite: {x}"
            )));
        }
        if x < -tol {
            return Err(CoreError::InvalidSimplex(format!(
                "coordinate {i} is negative beyond tolerance: {x}"
            )));
        }
        if x > T::one() + tol {
            return Err(CoreError::InvalidSimplex(format!(
                "coordinate {i} exceeds one beyond tolerance: {x}"
            )));
        }
        sum += x;
    }
    if (sum - T::one()).abs() > tol {
        return Err(CoreError::InvalidSimplex(format!(
            "coordinates sum to {sum}, not within {tol} of one"
        )));
    }
    Ok(SimplexPoint { coords: raw })
}

/// Explicitly repairs a nonnegative vector into a simplex point by dividing
/// by its sum. Errors when the vector is shorter than 2, contains a
/// non-finite or negative entry, or sums to zero.
pub fn normalize_simplex<T: Scalar>(mut raw: Vec<T>) -> Result<SimplexPoint<T>, CoreError> {
    if raw.len() < 2 {
        return Err(CoreError::InvalidSimplex(format!(
            "need at least 2 coordinates, got {}",
            raw.len()
        )));
    }
    let mut sum = T::zero();
    for (i, &x) in raw.iter().enumerate() {
        if !x.is_finite() || x < T::zero() {
            return Err(CoreError::InvalidSimplex(format!(
                "coordinate {i} must be finite and non-negative, got {x}"
            )));
        }
        sum += x;
    }
    if sum <= T::zero() {
        return Err(CoreError::InvalidSimplex(
            "coordinate sum must be positive to normalize".to_string(),
        ));
    }
    for x in raw.iter_mut() {
        *x = *x / sum;
    }
    Ok(SimplexPoint::trusted(raw))
}

/// Number of points of the resolution-k grid on the (m−1)-simplex:
/// the compositions of k into m nonnegative parts, C(k+m−1, m−1).
///
/// Errors with [`CoreError::CountOverflow`] when the count exceeds `u128`.
pub fn simplex_grid_count(m: usize, k: usize) -> Result<u128, CoreError> {
    if m < 2 {
        return Err(CoreError::InvalidConfig(format!(
            "grid needs at least 2 classes, got {m}"
        )));
    }
    if k < 1 {
        return Err(CoreError::InvalidConfig(format!(
            "grid resolution must be at least 1, got {k}"
        )));
    }
    // C(n, r) with n = k + m − 1, r = m − 1; multiply/divide stepwise so
    // every intermediate stays an exact integer.
    let n = (k as u128)
        .checked_add((m - 1) as u128)
        .ok_or(CoreError::CountOverflow { m, k })?;
    let r = (m - 1) as u128;
    let r = r.min(n - r);
    let mut c: u128 = 1;
    for i in 1..=r {
        c = c
            .checked_mul(n - r + i)
            .ok_or(CoreError::CountOverflow { m, k })?
            / i;
    }
    Ok(c)
}

/// Enumerates the resolution-k grid on the (m−1)-simplex: every point
/// (c_1/k, …, c_m/k) with nonnegative integer c summing to k, in ascending
/// lexicographic order of the compositions (c_1, …, c_m).
///
/// The grid contains the barycenter exactly when k is a multiple of m, and
/// always contains all m vertices.
pub fn simplex_grid<T: Scalar>(m: usize, k: usize) -> Result<Vec<SimplexPoint<T>>, CoreError> {
    let total = simplex_grid_count(m, k)?;
    let total: usize = total
        .try_into()
        .map_err(|_| CoreError::CountOverflow { m, k })?;
    let mut out = Vec::with_capacity(total);
    let denom = count::<T>(k);
    let mut prefix: Vec<T> = Vec::with_capacity(m);
    fill_grid(m, k, denom, &mut prefix, &mut out);
    debug_assert_eq!(out.len(), total);
    Ok(out)
}

/// Depth-first enumeration in ascending lexicographic order: at each level
/// the leading part runs 0..=remaining, and the last coordinate absorbs the
/// remainder.
fn fill_grid<T: Scalar>(
    m: usize,
    remaining: usize,
    denom: T,
    prefix: &mut Vec<T>,
    out: &mut Vec<SimplexPoint<T>>,
) {
    if prefix.len() == m - 1 {
        let mut coords = prefix.clone();
        coords.push(count::<T>(remaining) / denom);
        out.push(SimplexPoint::trusted(coords));
        return;
    }
    for c in 0..=remaining {
        prefix.push(count::<T>(c) / denom);
        fill_grid(m, remaining - c, denom, prefix, out);
        prefix.pop();
    }
}

/// Concentration parameters of a Dirichlet distribution: m positive finite
/// values, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams<T> {
    alpha: Vec<T>,
}

impl<T: Scalar> DirichletParams<T> {
    /// Validates and wraps concentration parameters.
    pub fn new(alpha: Vec<T>) -> Result<Self, CoreError> {
        if alpha.len() < 2 {
            return Err(CoreError::InvalidDirichlet(format!(
                "need at least 2 concentration parameters, got {}",
                alpha.len()
            )));
        }
        for (i, &a) in alpha.iter().enumerate() {
            if !(a.is_finite() && a > T::zero()) {
                return Err(CoreError::InvalidDirichlet(format!(
                    "concentration parameter {i} must be positive and finite, got {a}"
                )));
            }
        }
        Ok(Self { alpha })
    }

    /// The symmetric parameter vector (a, …, a) of length m.
    pub fn symmetric(m: usize, a: T) -> Result<Self, CoreError> {
        if m < 2 {
            return Err(CoreError::InvalidDirichlet(format!(
                "need at least 2 classes, got {m}"
            )));
        }
        Self::new(vec![a; m])
    }

    /// Concentration parameters, 0-indexed by class.
    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// Number of classes m.
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// Draws `n` points from the Dirichlet distribution using a freshly seeded
/// deterministic generator. Identical inputs give identical outputs.
pub fn sample_dirichlet<T: Scalar>(
    params: &DirichletParams<T>,
    n: usize,
    seed: u64,
) -> Vec<SimplexPoint<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_dirichlet_with(params, n, &mut rng)
}

/// Draws `n` points from the Dirichlet distribution using the caller's
/// generator: each coordinate is an independent Gamma(α_i, 1) draw and the
/// vector is normalized by its sum.
pub fn sample_dirichlet_with<T: Scalar, R: Rng + ?Sized>(
    params: &DirichletParams<T>,
    n: usize,
    rng: &mut R,
) -> Vec<SimplexPoint<T>> {
    let m = params.dim();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let mut coords: Vec<T> = Vec::with_capacity(m);
            let mut sum = T::zero();
            for &a in params.alpha() {
                let g = T::gamma_draw(rng, a);
                sum += g;
                coords.push(g);
            }
            // All draws can underflow to zero for very small concentrations;
            // redraw rather than divide by zero.
            if sum > T::zero() {
                for x in coords.iter_mut() {
                    *x = *x / sum;
                }
                out.push(SimplexPoint::trusted(coords));
                break;
            }
        }
    }
    out
}

/// Dirichlet probability density at a simplex point, with respect to
/// Lebesgue measure on the (m−1)-dimensional coordinate patch
/// {x ∈ R^{m−1} : x_i ≥ 0, Σx_i ≤ 1}. The symmetric all-ones parameter
/// gives the constant density (m−1)!.
///
/// When any concentration parameter is below one the density is unbounded
/// toward the boundary, so the point must then be strictly interior (every
/// coordinate positive) — otherwise [`CoreError::DensityAtBoundary`] is
/// returned. With all parameters ≥ 1 a zero coordinate is fine: the density
/// is 0 there when its parameter exceeds one and simply drops the factor at
/// exactly one.
pub fn dirichlet_density<T: Scalar>(
    params: &DirichletParams<T>,
    point: &SimplexPoint<T>,
) -> Result<T, CoreError> {
    let m = params.dim();
    if point.dim() != m {
        return Err(CoreError::DimensionMismatch {
            expected: m,
            found: point.dim(),
            context: "dirichlet_density",
        });
    }
    let one = T::one();
    let any_below_one = params.alpha().iter().any(|&a| a < one);
    if any_below_one && point.coords().iter().any(|&x| x <= T::zero()) {
        return Err(CoreError::DensityAtBoundary(
            "a concentration parameter is below one, so the point must be strictly interior"
                .to_string(),
        ));
    }
    let mut alpha_sum = T::zero();
    let mut log_density = T::zero();
    for (&a, &x) in params.alpha().iter().zip(point.coords()) {
        alpha_sum += a;
        log_density -= a.ln_gamma();
        if x <= T::zero() {
            if a > one {
                // A factor x^(a−1) with a > 1 vanishes at the boundary.
                return Ok(T::zero());
            }
            // a == 1 exactly: the factor is x^0 = 1.
        } else {
            log_density += (a - one) * x.ln();
        }
    }
    log_density += alpha_sum.ln_gamma();
    Ok(log_density.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::fp;
    use approx::assert_relative_eq;

    #[test]
    fn validate_accepts_exact_and_tolerant_points() {
        let p = validate_simplex(vec![0.2f64, 0.3, 0.5], 1e-9).unwrap();
        assert_eq!(p.coords(), &[0.2, 0.3, 0.5]);
        assert_eq!(p.dim(), 3);
        // Slightly off but inside tolerance; coordinates stay untouched.
        let q = validate_simplex(vec![0.2f64, 0.3, 0.5 + 5e-10], 1e-9).unwrap();
        assert_eq!(q[2], 0.5 + 5e-10);
    }

    #[test]
    fn validate_rejects_bad_points() {
        // Sum off by more than the tolerance.
        assert!(matches!(
            validate_simplex(vec![0.2f64, 0.3, 0.6], 1e-9),
            Err(CoreError::InvalidSimplex(_))
        ));
        // Negative coordinate beyond tolerance.
        assert!(matches!(
            validate_simplex(vec![-0.1f64, 0.6, 0.5], 1e-9),
            Err(CoreError::InvalidSimplex(_))
        ));
        // Too short.
        assert!(matches!(
            validate_simplex(vec![1.0f64], 1e-9),
            Err(CoreError::InvalidSimplex(_))
        ));
        // Non-finite coordinate.
        assert!(matches!(
            validate_simplex(vec![f64::NAN, 0.5, 0.5], 1e-9),
            Err(CoreError::InvalidSimplex(_))
        ));
        // Negative tolerance is a configuration error.
        assert!(matches!(
            validate_simplex(vec![0.5f64, 0.5], -1.0),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn normalize_divides_by_the_sum() {
        let p = normalize_simplex(vec![2.0f64, 3.0, 5.0]).unwrap();
        assert_eq!(p.coords(), &[0.2, 0.3, 0.5]);
        assert!(normalize_simplex(vec![0.0f64, 0.0]).is_err());
        assert!(normalize_simplex(vec![-1.0f64, 2.0]).is_err());
    }

    #[test]
    fn barycenter_and_vertices() {
        let b = SimplexPoint::<f64>::barycenter(4).unwrap();
        assert_eq!(b.coords(), &[0.25, 0.25, 0.25, 0.25]);
        let v = SimplexPoint::<f64>::vertex(3, 2).unwrap();
        assert_eq!(v.coords(), &[0.0, 1.0, 0.0]);
        assert!(SimplexPoint::<f64>::vertex(3, 0).is_err());
        assert!(SimplexPoint::<f64>::vertex(3, 4).is_err());
        assert!(SimplexPoint::<f64>::barycenter(1).is_err());
    }

    #[test]
    fn grid_count_reference_values() {
        assert_eq!(simplex_grid_count(3, 200).unwrap(), 20301);
        assert_eq!(simplex_grid_count(3, 2).unwrap(), 6);
        assert_eq!(simplex_grid_count(2, 4).unwrap(), 5);
        assert_eq!(simplex_grid_count(6, 50).unwrap(), 3478761);
        assert_eq!(simplex_grid_count(4, 10).unwrap(), 286);
        assert!(simplex_grid_count(1, 5).is_err());
        assert!(simplex_grid_count(3, 0).is_err());
    }

    #[test]
    fn grid_m2_k4_is_ascending_lexicographic() {
        let g = simplex_grid::<f64>(2, 4).unwrap();
        let expect = [
            [0.0, 1.0],
            [0.25, 0.75],
            [0.5, 0.5],
            [0.75, 0.25],
            [1.0, 0.0],
        ];
        assert_eq!(g.len(), 5);
        for (p, e) in g.iter().zip(expect.iter()) {
            assert_eq!(p.coords(), e);
        }
    }

    #[test]
    fn grid_m3_k2_has_the_six_expected_points() {
        let g = simplex_grid::<f64>(3, 2).unwrap();
        assert_eq!(g.len(), 6);
        let mut pts: Vec<Vec<f64>> = g.iter().map(|p| p.coords().to_vec()).collect();
        let mut expect = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.5],
        ];
        let key = |v: &Vec<f64>| v.iter().map(|x| (x * 1e6) as i64).collect::<Vec<_>>();
        pts.sort_by_key(key);
        expect.sort_by_key(key);
        assert_eq!(pts, expect);
    }

    #[test]
    fn grid_contains_barycenter_iff_k_divisible_by_m() {
        let b = SimplexPoint::<f64>::barycenter(3).unwrap();
        let g6 = simplex_grid::<f64>(3, 6).unwrap();
        assert!(g6.iter().any(|p| p == &b));
        let g7 = simplex_grid::<f64>(3, 7).unwrap();
        assert!(!g7.iter().any(|p| p == &b));
    }

    #[test]
    fn grid_points_all_validate() {
        for p in simplex_grid::<f64>(4, 7).unwrap() {
            validate_simplex(p.coords().to_vec(), 1e-9).unwrap();
        }
    }

    #[test]
    fn dirichlet_params_validation() {
        assert!(DirichletParams::new(vec![1.0f64, 2.0]).is_ok());
        assert!(DirichletParams::new(vec![1.0f64]).is_err());
        assert!(DirichletParams::new(vec![1.0f64, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0f64, -2.0]).is_err());
        assert!(DirichletParams::new(vec![1.0f64, f64::INFINITY]).is_err());
        let s = DirichletParams::symmetric(3, 5.0f64).unwrap();
        assert_eq!(s.alpha(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn density_reference_values() {
        // Uniform density on the triangle is (m−1)! = 2.
        let flat = DirichletParams::new(vec![1.0f64, 1.0, 1.0]).unwrap();
        let p = validate_simplex(vec![0.5f64, 0.25, 0.25], 1e-9).unwrap();
        assert_relative_eq!(dirichlet_density(&flat, &p).unwrap(), 2.0, max_relative = 1e-12);

        // Symmetric (2,2,2) at the barycenter: 120/27.
        let a222 = DirichletParams::new(vec![2.0f64, 2.0, 2.0]).unwrap();
        let b = SimplexPoint::barycenter(3).unwrap();
        assert_relative_eq!(
            dirichlet_density(&a222, &b).unwrap(),
            120.0 / 27.0,
            max_relative = 1e-12
        );

        // Independently computed values.
        let a555 = DirichletParams::new(vec![5.0f64, 5.0, 5.0]).unwrap();
        let q = validate_simplex(vec![0.2f64, 0.3, 0.5], 1e-9).unwrap();
        assert_relative_eq!(
            dirichlet_density(&a555, &q).unwrap(),
            5.108103000000021,
            max_relative = 1e-12
        );
        let a234 = DirichletParams::new(vec![2.0f64, 3.0, 4.0]).unwrap();
        let r = validate_simplex(vec![0.5f64, 0.3, 0.2], 1e-9).unwrap();
        assert_relative_eq!(
            dirichlet_density(&a234, &r).unwrap(),
            1.2096,
            max_relative = 1e-12
        );
        // Two classes: Beta(2,2) density at 1/2 is 1.5.
        let a22 = DirichletParams::new(vec![2.0f64, 2.0]).unwrap();
        let h = SimplexPoint::barycenter(2).unwrap();
        assert_relative_eq!(dirichlet_density(&a22, &h).unwrap(), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn density_boundary_rules() {
        // Any concentration below one forbids boundary points outright.
        let a = DirichletParams::new(vec![0.5f64, 1.0, 1.0]).unwrap();
        let vertex = SimplexPoint::vertex(3, 1).unwrap();
        assert!(matches!(
            dirichlet_density(&a, &vertex),
            Err(CoreError::DensityAtBoundary(_))
        ));
        // All parameters ≥ 1: zero coordinate under a parameter > 1 gives 0.
        let b = DirichletParams::new(vec![2.0f64, 2.0, 2.0]).unwrap();
        let edge = validate_simplex(vec![0.0f64, 0.5, 0.5], 1e-9).unwrap();
        assert_eq!(dirichlet_density(&b, &edge).unwrap(), 0.0);
        // Zero coordinate whose own parameter is exactly one just drops out.
        let c = DirichletParams::new(vec![1.0f64, 2.0, 2.0]).unwrap();
        let d = dirichlet_density(&c, &edge).unwrap();
        assert!(d.is_finite() && d > 0.0);
        // Dimension mismatch.
        let two = SimplexPoint::<f64>::barycenter(2).unwrap();
        assert!(matches!(
            dirichlet_density(&b, &two),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        let params = DirichletParams::new(vec![2.0f64, 3.0, 4.0]).unwrap();
        let a = sample_dirichlet(&params, 50, 99);
        let b = sample_dirichlet(&params, 50, 99);
        assert_eq!(a, b);
        let c = sample_dirichlet(&params, 50, 100);
        assert_ne!(a, c);
        for p in &a {
            validate_simplex(p.coords().to_vec(), 1e-9).unwrap();
        }
        assert!(sample_dirichlet(&params, 0, 1).is_empty());
    }

    #[test]
    fn sampling_concentrates_with_large_alpha() {
        // Per-coordinate variance of a symmetric Dirichlet on 3 classes is
        // (2/9)/(3a+1); check the empirical variance tracks it.
        let n = 4000;
        for (a, want) in [(1.0f64, 0.05555555555555555), (10.0, 0.007168458781362007)] {
            let params = DirichletParams::symmetric(3, a).unwrap();
            let draws = sample_dirichlet(&params, n, 7);
            let mean: f64 = draws.iter().map(|p| p[0]).sum::<f64>() / n as f64;
            let var: f64 =
                draws.iter().map(|p| (p[0] - mean).powi(2)).sum::<f64>() / n as f64;
            assert_relative_eq!(var, want, max_relative = 0.15);
            assert_relative_eq!(mean, 1.0 / 3.0, epsilon = 0.02);
        }
    }

    #[test]
    fn f32_pipeline_smoke() {
        let g = simplex_grid::<f32>(3, 4).unwrap();
        assert_eq!(g.len(), 15);
        for p in &g {
            // f32 rounding needs a looser sum tolerance than the f64 default.
            validate_simplex(p.coords().to_vec(), fp::<f32>(1e-5)).unwrap();
        }
        let params = DirichletParams::symmetric(3, 2.0f32).unwrap();
        let draws = sample_dirichlet(&params, 10, 3);
        assert_eq!(draws.len(), 10);
        let d = dirichlet_density(&params, &SimplexPoint::barycenter(3).unwrap()).unwrap();
        assert_relative_eq!(d, 120.0f32 / 27.0, max_relative = 1e-5);
    }
}
