//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the solvers are generic over.
///
/// All tolerances quoted in the documentation are for `f64`; the `f32`
/// instantiation is supported but only meets proportionally looser bounds.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Converts an integer count into the scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Magnitude at which running recurrences are rescaled.
    #[inline]
    fn rescale_threshold() -> Self {
        Self::max_value().sqrt().sqrt()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a generic scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

/// Largest of `|a|`, `|b|`, with the `norm` computed by hypot.
#[inline]
pub(crate) fn max_abs<T: Real>(a: Cx<T>, b: Cx<T>) -> T {
    a.norm().max(b.norm())
}

/// `lambda^j` for the two problem kinds.
#[inline]
pub(crate) fn pow_j<T: Real>(lambda: Cx<T>, j: u8) -> Cx<T> {
    if j == 0 {
        Complex::new(T::one(), T::zero())
    } else {
        lambda
    }
}
