//! Scalar abstraction for the numeric pipeline.

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar: f32 or f64.
///
/// Everything numeric in this crate (feature values, centroids, classifier
/// weights, rank statistics) is generic over this trait; `crate::Scalar`
/// pins the default instantiation.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + std::fmt::Debug
    + std::fmt::Display
    + std::iter::Sum
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    fn of_usize(n: usize) -> Self {
        FromPrimitive::from_usize(n).expect("usize representable as scalar")
    }

    fn of_f64(x: f64) -> Self {
        FromPrimitive::from_f64(x).expect("f64 representable as scalar")
    }

    fn into_f64(self) -> f64 {
        NumCast::from(self).expect("scalar representable as f64")
    }

    /// `num / den` with the degenerate base yielding 0 instead of NaN/inf.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::of_usize(num) / Self::of_usize(den)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
