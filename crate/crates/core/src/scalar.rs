//! Numeric abstraction shared by every algorithm in the crate.
//!
//! Everything is written against [`Scalar`] rather than `f64` so the same code
//! runs in `f32`, `f64`, or an exact rational type. The rational instantiation
//! is what lets metric identities be checked without rounding error.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A real-like number: ordered field with conversions to and from primitives.
///
/// No square roots or transcendental functions are required, so exact
/// rationals qualify.
pub trait Scalar:
    Num
    + Signed
    + Copy
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts from `f64`, panicking if the value cannot be represented.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(|| panic!("{value} is not representable"))
    }

    /// Converts a count into the scalar type.
    fn of_count(count: usize) -> Self {
        Self::from_usize(count).unwrap_or_else(|| panic!("count {count} is not representable"))
    }

    /// Lossy conversion used for output and logging.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// False for NaN and infinities; always true for exact types.
    fn is_finite_value(self) -> bool {
        self.to_f64().is_none_or(f64::is_finite)
    }
}

impl<T> Scalar for T where
    T: Num
        + Signed
        + Copy
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Sums a sequence in order. Summation order is fixed so results are
/// reproducible bit for bit.
pub fn sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
