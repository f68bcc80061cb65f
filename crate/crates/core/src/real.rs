//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over: `f32` or `f64`.
///
/// The tolerance hooks let the same invariant checks run at either precision;
/// the `f64` values are the ones the verification suites are calibrated for.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Allowed drift of a probability vector's sum away from one.
    fn sum_tolerance() -> Self;

    /// Drift accepted when parsing or constructing from external data;
    /// anything between this and [`Real::sum_tolerance`] is renormalized.
    fn input_tolerance() -> Self;

    /// Slack used when asserting analytic inequalities numerically.
    fn inequality_slack() -> Self;

    /// Mantissa bits compared when identifying posteriors equal up to rounding.
    fn merge_bits() -> u32;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn sum_tolerance() -> Self {
        1e-12
    }
    fn input_tolerance() -> Self {
        1e-9
    }
    fn inequality_slack() -> Self {
        1e-12
    }
    fn merge_bits() -> u32 {
        40
    }
}

impl Real for f32 {
    fn sum_tolerance() -> Self {
        1e-5
    }
    fn input_tolerance() -> Self {
        1e-4
    }
    fn inequality_slack() -> Self {
        1e-5
    }
    fn merge_bits() -> u32 {
        20
    }
}

/// Key identifying probabilities equal to relative precision `2^-merge_bits`.
///
/// Rounds the mantissa of a positive value, so tiny entries are told apart
/// as sharply as large ones; zero and negatives map to 0.
pub(crate) fn merge_key<T: Real>(x: T) -> i64 {
    let v = x.as_f64();
    if !(v > 0.0) {
        return 0;
    }
    let drop = 52 - T::merge_bits();
    (((v.to_bits() >> (drop - 1)) + 1) >> 1) as i64
}

/// `x * lg x` with the continuous extension `0 * lg 0 = 0`.
#[inline]
pub(crate) fn xlogx<T: Real>(x: T) -> T {
    if x > T::zero() {
        x * x.log2()
    } else {
        T::zero()
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xlogx_extends_continuously_at_zero() {
        assert_eq!(xlogx(0.0f64), 0.0);
        assert_eq!(xlogx(1.0f64), 0.0);
        assert!((xlogx(0.5f64) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-20);
    }
}
