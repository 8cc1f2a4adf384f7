//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Relative off-diagonal tolerance used by the Hermitian eigensolver.
    fn eig_tolerance() -> Self;

    /// Draw one standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal or configuration value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Real")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {
    fn eig_tolerance() -> Self {
        4.0 * f32::EPSILON
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn eig_tolerance() -> Self {
        1e-12
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// `e^{j2π·cycles}`, with the argument reduced to `[-½, ½]` first so that large
/// time-frequency products keep full phase precision.
#[inline]
pub fn cis_cycles<T: Real>(cycles: T) -> Complex<T> {
    let reduced = cycles - cycles.round();
    let phase = T::TAU() * reduced;
    Complex::new(phase.cos(), phase.sin())
}

/// Fractional part of `x` in `[0, 1)`.
#[inline]
pub(crate) fn frac<T: Real>(x: T) -> T {
    x - x.floor()
}

/// Returns `Some(n)` when `x` is within a relative `tol` of the integer `n`.
pub(crate) fn near_integer(x: f64, tol: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= tol * x.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cis_matches_direct_exponential() {
        for &c in &[0.0, 0.25, -0.25, 0.5, 1234.125, -77.75] {
            let z: Complex<f64> = cis_cycles(c);
            let direct = Complex::new(0.0, std::f64::consts::TAU * c).exp();
            assert!((z - direct).norm() < 1e-9, "{c}");
        }
    }

    #[test]
    fn near_integer_detects_float_noise() {
        assert_eq!(near_integer(0.02 / 0.0008, 1e-9), Some(25));
        assert_eq!(near_integer(25.01, 1e-9), None);
    }
}
