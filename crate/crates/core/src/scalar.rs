//! Scalar abstraction shared by the dense kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real floating-point scalar the numerical core is written against: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(v: f64) -> Self;

    /// Tolerance for this precision: the requested absolute tolerance, widened to a
    /// small multiple of machine epsilon when the type cannot resolve it.
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(4096.0);
        Self::lit(base).max(floor)
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Complex scalar over [`Real`].
pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_widens_for_single_precision() {
        assert_eq!(<f64 as Real>::tol(1e-10), 1e-10);
        assert!(<f32 as Real>::tol(1e-10) > 1e-5);
    }
}
