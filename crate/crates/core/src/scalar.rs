//! Floating-point abstraction so every numeric component (program VM, GA,
//! networks, environment) works at either `f32` or `f64`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

/// Scalar type all core math is generic over.
///
/// `num_traits::Float` supplies the arithmetic, `NumCast` conversions from
/// literals, and `ndarray::LinalgScalar` lets dense layers dispatch to the
/// BLAS-style matmul kernels for both precisions. The sampling methods exist
/// because `rand` distributions are only implemented for the concrete types.
pub trait Scalar:
    num_traits::Float
    + num_traits::NumCast
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + std::fmt::Display
    + std::fmt::Debug
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Uniform draw from the half-open interval `[lo, hi)`.
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Standard normal draw.
    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless widening for serialization (`f32 -> f64` is exact).
    fn to_f64_lossless(self) -> f64;

    /// Inverse of [`Scalar::to_f64_lossless`]; may round when `Self = f32`.
    fn from_f64_lossy(v: f64) -> Self;

    /// Smallest value strictly greater than `self`.
    fn next_up_val(self) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                Uniform::new(lo, hi).expect("valid uniform range").sample(rng)
            }

            fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn to_f64_lossless(self) -> f64 {
                self as f64
            }

            fn from_f64_lossy(v: f64) -> Self {
                v as $t
            }

            fn next_up_val(self) -> Self {
                self.next_up()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Shorthand for the ubiquitous "literal to scalar" conversion.
#[inline]
pub fn cast<T: Scalar>(v: f64) -> T {
    T::from(v).expect("finite f64 literal representable in scalar type")
}
