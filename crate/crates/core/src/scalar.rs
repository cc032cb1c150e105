//! Numeric abstraction for metric arithmetic.
//!
//! Metrics are ratios of counts, so any field-like type works. `f64` is the
//! everyday choice; `Ratio<i64>` gives exact results for oracle comparisons.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, NumCast, ToPrimitive};

pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: usize) -> Self;
    fn to_f64(self) -> f64;

    fn ratio(num: usize, den: usize) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }
}

impl Scalar for f32 {
    fn from_count(n: usize) -> Self {
        n as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_count(n: usize) -> Self {
        n as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for Ratio<i64> {
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(<i64 as NumCast>::from(n).expect("count fits in i64"))
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Harmonic mean of `p` and `r`; zero when both are zero.
pub fn f1<T: Scalar>(p: T, r: T) -> T {
    if p + r == T::zero() {
        T::zero()
    } else {
        (T::one() + T::one()) * p * r / (p + r)
    }
}
