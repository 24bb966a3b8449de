//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar the solver is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Error function, evaluated in double precision.
    #[inline]
    fn erf(self) -> Self {
        Self::lit(libm::erf(self.to_f64_lossy()))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex sample type used for spinor components.
pub type C<T> = Complex<T>;

#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// `i * a` for real `a`.
#[inline]
pub fn imag<T: Real>(a: T) -> C<T> {
    Complex::new(T::zero(), a)
}

/// Sup norm of the pointwise difference of two equally long slices.
pub fn sup_diff<T: Real>(a: &[C<T>], b: &[C<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max)
}

pub fn sup_abs<T: Real>(a: &[C<T>]) -> T {
    a.iter().map(|x| x.norm()).fold(T::zero(), T::max)
}
