//! Scalar abstractions.
//!
//! Counting-based estimators (adjustment and mediator formulas) only need
//! field arithmetic, so they are written against [`Scalar`] and work for
//! `f32`, `f64` and exact rationals alike. Information measures need a
//! logarithm and are written against [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Field-like scalar usable by the rewriting estimators.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `num / den` for counts; `den` must be nonzero.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive {}

/// Floating point scalar for entropy and mutual information.
pub trait Real: Scalar + Float + FloatConst + Copy + Send + Sync {
    /// `x * ln(x)` with the convention `0 ln 0 = 0`.
    fn xlnx(x: Self) -> Self {
        if x <= Self::zero() {
            Self::zero()
        } else {
            x * x.ln()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
