use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, NumAssignOps};
use rand::distributions::uniform::SampleUniform;

/// Floating-point scalar the model and evaluation code are generic over.
///
/// `f32` is the training precision (and the on-disk binary precision);
/// `f64` is used wherever gradients are checked against finite differences.
/// The trait is implemented automatically for every type that satisfies
/// the bounds.
pub trait Scalar:
    Float
    + NumAssignOps
    + Sum
    + SampleUniform
    + FromStr
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from `f64` for constants and learning rates.
    fn from_f64(x: f64) -> Self {
        Self::from(x).unwrap()
    }

    /// Widening conversion used by statistics and serialization.
    fn into_f64(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssignOps
        + Sum
        + SampleUniform
        + FromStr
        + Display
        + Debug
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

/// `ln(1 + exp(x))` without overflow; `-ln_sigmoid(x) = softplus(-x)`.
pub fn softplus<S: Scalar>(x: S) -> S {
    // max(x, 0) + ln(1 + exp(-|x|))
    x.max(S::zero()) + (-x.abs()).exp().ln_1p()
}
