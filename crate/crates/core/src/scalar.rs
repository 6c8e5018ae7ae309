//! Scalar abstraction shared by the model, inference and decision code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used for probabilities, harms and information values.
///
/// Implemented for `f32` and `f64`. Model documents are always parsed as
/// `f64` and narrowed with [`Probability::of`].
pub trait Probability:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every float type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Binary entropy in bits. Inputs are clamped to [0, 1].
    fn binary_entropy(self) -> Self {
        let p = self.max(Self::zero()).min(Self::one());
        let q = Self::one() - p;
        let mut h = Self::zero();
        if p > Self::zero() {
            h = h - p * p.log2();
        }
        if q > Self::zero() {
            h = h - q * q.log2();
        }
        h
    }
}

impl Probability for f32 {}
impl Probability for f64 {}
