//! Floating-point scalar abstraction shared by the weighting, clustering and
//! ranking code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar type used for weights and scores: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an unsigned count.
    fn from_count(n: u64) -> Self {
        <Self as NumCast>::from(n).expect("count representable as float")
    }

    /// Conversion from an `f64` literal or config value.
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 representable as scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Descending comparison on weights. Weights produced by this crate are
/// always finite, so the `Equal` fallback only covers NaN.
pub(crate) fn cmp_desc<S: Scalar>(a: S, b: S) -> std::cmp::Ordering {
    b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal)
}
