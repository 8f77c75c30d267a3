//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the estimator can run on (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// `max_i |w_i|`, zero for an empty slice.
pub fn inf_norm<T: Scalar>(w: &[T]) -> T {
    w.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// `max_i |a_i - b_i|`.
pub fn inf_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs()))
}

pub fn all_finite<T: Scalar>(w: &[T]) -> bool {
    w.iter().all(|v| v.is_finite())
}

pub(crate) fn to_f64_vec<T: Scalar>(w: &[T]) -> Vec<f64> {
    w.iter().map(|v| v.as_f64()).collect()
}

pub(crate) fn from_f64_vec<T: Scalar>(w: &[f64]) -> Vec<T> {
    w.iter().map(|v| T::lit(*v)).collect()
}
