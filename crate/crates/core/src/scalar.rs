//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float
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
    /// Converts an `f64` literal. Every value used in this crate is
    /// representable (possibly rounded) in both `f32` and `f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic sigmoid, evaluated without overflow for large |x|.
#[inline]
pub fn logistic<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `ln σ(x)`, stable in both tails.
#[inline]
pub fn log_logistic<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `ln(Σ exp(v))`; returns `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp<F: Scalar>(values: &[F]) -> F {
    let max = values
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    if max == F::neg_infinity() {
        return max;
    }
    let s: F = values.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_symmetry_and_midpoint() {
        assert_eq!(logistic(0.0_f64), 0.5);
        for &x in &[-30.0_f64, -2.5, -0.1, 0.7, 12.0] {
            assert!((logistic(x) + logistic(-x) - 1.0).abs() < 1e-15);
            assert!((log_logistic(x) - logistic(x).ln()).abs() < 1e-12);
        }
        assert!(logistic(-800.0_f64) >= 0.0);
        assert!(log_logistic(-800.0_f64).is_finite());
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let v = [-1.0_f64, 0.5, 2.0];
        let direct = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&v) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0_f64, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        assert!((logistic(1.0_f32) - 0.731_058_6).abs() < 1e-6);
    }
}
