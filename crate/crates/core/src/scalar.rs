use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the analysis is generic over: `f32` or `f64`.
///
/// Everything numeric in the crate (probabilities, moments, operators,
/// trajectories) is parameterized by this trait. The eigensolver and the
/// LU-based solves come from `nalgebra`, so a field with square roots and an
/// ordering is required; exact rationals do not fit and are not supported.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for checks on accumulated sums: `1e6 * eps`, capped at 1e-4
    /// (about 2.2e-10 for `f64`, 1e-4 for `f32`).
    fn loose_tol() -> Self {
        let eps = Self::default_epsilon().as_f64();
        Self::lit((eps * 1e6).min(1e-4))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn from_usize<T: Scalar>(n: usize) -> T {
    T::lit(n as f64)
}
