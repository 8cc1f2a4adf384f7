//! Power-of-two period square-wave modulation and the single-channel combiner.
//!
//! Element `n` (from 1) is switched by a ±1 square wave of period
//! `T_p / 2^{n-1}`. Its odd harmonic `k` lands on line multiple
//! `q = k·2^{n-1}` of `f_p`, and since every positive integer factors
//! uniquely as `odd × 2^{n-1}`, no two (element, order) pairs share a line.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::real::{frac, near_integer, Real};
use crate::synth::{ComplexSeries, ElementSignals};

/// One extraction line: element `n`, harmonic order `k`, `q = k·2^{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineId<T> {
    pub element: usize,
    pub order: u32,
    pub multiple: u64,
    /// `f_c + q·f_p`, hertz.
    pub frequency: T,
}

/// How the per-line harmonic weight is modelled when undoing modulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CoefficientModel {
    /// The continuous-time Fourier coefficient `α_k`.
    Continuous,
    /// The DFT coefficient of the sampled ±1 waveform, which carries an extra
    /// `e^{jπk/P}` half-sample phase for `P` samples per period.
    #[default]
    Sampled,
}

/// Square wave of element `n`: `+1` on `[i·T, i·T + T/2)`, `-1` on
/// `[i·T + T/2, (i+1)·T)` with `T = 1 / (2^{n-1} f_p)`.
pub fn square_wave<T: Real>(n: usize, t: T, base_frequency: T) -> T {
    debug_assert!(n >= 1);
    let cycles = t * base_frequency * T::lit(2f64.powi(n as i32 - 1));
    let halves = cycles + cycles;
    let nearest = halves.round();
    // Sample instants that land on a switch (up to rounding) take the value
    // of the interval they open.
    let tol = T::lit(8.0) * T::epsilon() * halves.abs().max(T::one());
    if (halves - nearest).abs() <= tol {
        let index = nearest.to_i64().expect("finite time");
        return if index.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        };
    }
    if frac(cycles) < T::lit(0.5) {
        T::one()
    } else {
        -T::one()
    }
}

/// Continuous Fourier coefficient `α_k = (j/kπ)(e^{-jkπ} - 1)` of the ±1
/// square wave. Zero for even `k` (and `k = 0`), `-2j/(kπ)` for odd `k`.
pub fn fourier_coefficient<T: Real>(k: i64) -> Complex<T> {
    if k % 2 == 0 {
        return Complex::zero();
    }
    Complex::new(T::zero(), -T::lit(2.0) / (T::lit(k as f64) * T::PI()))
}

/// `(1/P) Σ_{i<P} U[i] e^{-j2πki/P}` for the ±1 wave sampled with `P` (even)
/// samples per period, first half `+1`.
pub fn sampled_coefficient<T: Real>(k: i64, samples_per_period: usize) -> Complex<T> {
    debug_assert!(samples_per_period >= 2 && samples_per_period.is_multiple_of(2));
    if k % 2 == 0 {
        return Complex::zero();
    }
    let p = T::from_usize_lossy(samples_per_period);
    let x = T::PI() * T::lit(k as f64) / p;
    // (4/P) / (1 - e^{-j2x}) = -2j e^{jx} / (P sin x)
    let scale = T::lit(2.0) / (p * x.sin());
    Complex::new(T::zero(), -scale) * Complex::new(x.cos(), x.sin())
}

/// Coefficient used when dividing element `n`'s order-`k` line.
pub fn harmonic_weight<T: Real>(
    model: CoefficientModel,
    k: u32,
    element: usize,
    samples_per_window: usize,
) -> Complex<T> {
    match model {
        CoefficientModel::Continuous => fourier_coefficient(k as i64),
        CoefficientModel::Sampled => {
            sampled_coefficient(k as i64, samples_per_window >> (element - 1))
        }
    }
}

pub fn line_id<T: Real>(
    element: usize,
    order: u32,
    base_frequency: T,
    carrier_frequency: T,
) -> Result<LineId<T>> {
    if order == 0 || order.is_multiple_of(2) {
        return Err(Error::EvenOrder(order));
    }
    debug_assert!((1..=63).contains(&element));
    let multiple = (order as u64) << (element - 1);
    Ok(LineId {
        element,
        order,
        multiple,
        frequency: carrier_frequency + T::lit(multiple as f64) * base_frequency,
    })
}

/// Unique `(element, order)` with odd `order` and `q = order·2^{element-1}`.
pub fn line_owner(q: u64) -> (usize, u32) {
    assert!(q >= 1, "line multiple must be positive");
    let twos = q.trailing_zeros();
    ((twos + 1) as usize, (q >> twos) as u32)
}

/// Sample-wise `Σ_n U_n(t_i) x_n(t_i)` with exact ±1 switching.
pub fn modulate_and_combine<T: Real>(
    signals: &ElementSignals<T>,
    base_frequency: T,
) -> Result<ComplexSeries<T>> {
    let first = signals.elements().first().ok_or(Error::LengthMismatch)?;
    let (t0, fs, len) = (first.start_time, first.sample_rate, first.len());
    for s in signals.elements() {
        if s.len() != len || s.start_time != t0 || s.sample_rate != fs {
            return Err(Error::LengthMismatch);
        }
    }

    let mut out = vec![Complex::<T>::zero(); len];
    for (idx, series) in signals.elements().iter().enumerate() {
        let element = idx + 1;
        let signs = switch_signs(element, t0, fs, base_frequency, len);
        for ((o, &x), sign) in out.iter_mut().zip(series.samples()).zip(signs) {
            if sign > T::zero() {
                *o += x;
            } else {
                *o -= x;
            }
        }
    }
    Ok(ComplexSeries::new(t0, fs, out))
}

/// Switching sequence of element `n` over `len` samples from `t0`.
///
/// When the start time sits on the sample grid and the element period is a
/// whole number of samples, the sign is taken from the integer sample phase;
/// otherwise it falls back to [`square_wave`] on each sample time.
pub fn switch_signs<T: Real>(
    element: usize,
    t0: T,
    fs: T,
    base_frequency: T,
    len: usize,
) -> Vec<T> {
    let (t0f, fsf, fpf) = (
        t0.to_f64_lossy(),
        fs.to_f64_lossy(),
        base_frequency.to_f64_lossy(),
    );
    let period_samples = fsf / (fpf * 2f64.powi(element as i32 - 1));
    let exact = near_integer(t0f * fsf, 1e-9)
        .zip(near_integer(period_samples, 1e-9))
        .filter(|&(_, p)| p >= 2 && p % 2 == 0);
    match exact {
        Some((start, period)) => (0..len as i64)
            .map(|i| {
                if (start + i).rem_euclid(period) < period / 2 {
                    T::one()
                } else {
                    -T::one()
                }
            })
            .collect(),
        None => (0..len)
            .map(|i| square_wave(element, t0 + T::from_usize_lossy(i) / fs, base_frequency))
            .collect(),
    }
}
