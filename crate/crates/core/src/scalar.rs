//! Scalar abstraction shared by every numeric routine.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real field usable as the base of [`crate::Operator`] entries.
pub trait Real: RealField + Copy + Default + std::fmt::LowerExp + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Default absolute tolerance for predicates and checks.
    fn default_tol() -> Self;

    /// Singular-value cutoff relative to the largest singular value for rank decisions.
    fn rank_rtol() -> Self;

    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-9
    }
    fn rank_rtol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
    fn rank_rtol() -> Self {
        1e-5
    }
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn abs<T: Real>(x: T) -> T {
    ComplexField::abs(x)
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Complex<T>) -> T {
    ComplexField::sqrt(z.norm_sqr())
}

#[inline]
pub(crate) fn from_usize<T: Real>(n: usize) -> T {
    <T as FromPrimitive>::from_usize(n).expect("representable count")
}
