//! Floating-point abstraction so every numeric kernel runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::Distribution;

/// Scalar type for simplex, score, tuning, and loss computations.
///
/// Implemented for `f32` and `f64`. Beyond the arithmetic supplied by
/// [`num_traits::Float`], two hooks cover the operations that need more
/// than field arithmetic: the log-gamma function (Dirichlet density) and
/// draws from a Gamma distribution (Dirichlet sampling).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Natural logarithm of the gamma function.
    fn ln_gamma(self) -> Self;

    /// One draw from Gamma(shape, scale = 1).
    fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self;
}

impl Scalar for f64 {
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }

    fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self {
        rand_distr::Gamma::new(shape, 1.0)
            .expect("gamma shape must be positive and finite")
            .sample(rng)
    }
}

impl Scalar for f32 {
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(f64::from(self)) as f32
    }

    fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self) -> Self {
        rand_distr::Gamma::<f32>::new(shape, 1.0)
            .expect("gamma shape must be positive and finite")
            .sample(rng)
    }
}

/// Converts an `f64` constant into the scalar type.
///
/// Panics only if the value is not representable, which cannot happen for
/// the finite constants this crate feeds it.
#[inline]
pub fn fp<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("finite constant must be representable")
}

/// Converts a count into the scalar type.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count must be representable")
}
