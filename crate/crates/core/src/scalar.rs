//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the calibration math is generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to every Real")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Absolute tolerance under which two scores are treated as tied.
    fn tie_tolerance() -> Self {
        Self::lit(1e-12)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Pairwise summation, giving a summation order independent of thread count.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().copied().fold(T::zero(), |acc, v| acc + v);
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

pub fn mean<T: Real>(values: &[T]) -> T {
    pairwise_sum(values) / T::of_usize(values.len())
}
