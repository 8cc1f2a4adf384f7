//! Single-channel direction finding with a time-modulated linear array.
//!
//! Each element of an `N`-element array is switched by a ±1 square wave whose
//! period halves from one element to the next. The switched outputs are
//! summed into one channel; because element `n`'s odd harmonics occupy
//! lines `f_c + odd·2^{n-1}·f_p` that no other element touches, a single-bin
//! correlation per line recovers a conventional array snapshot from the one
//! channel. MUSIC then estimates the directions of arrival.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below are the usual entry points.

pub mod error;
pub mod linalg;
pub mod music;
pub mod pipeline;
pub mod real;
pub mod scenario;
pub mod snapshot;
pub mod synth;
pub mod timemod;

pub use error::{Error, Result};
pub use real::Real;

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type Complex32 = Complex<f32>;

pub type Scenario64 = scenario::Scenario<f64>;
pub type Scenario32 = scenario::Scenario<f32>;
pub type ComplexSeries64 = synth::ComplexSeries<f64>;
pub type ElementSignals64 = synth::ElementSignals<f64>;
pub type SnapshotMatrix64 = snapshot::SnapshotMatrix<f64>;
pub type CovarianceMatrix64 = music::CovarianceMatrix<f64>;
pub type SpatialSpectrum64 = music::SpatialSpectrum<f64>;
pub type SpatialSpectrum32 = music::SpatialSpectrum<f32>;
pub type AngleGrid64 = music::AngleGrid<f64>;
pub type RunOutput64 = pipeline::RunOutput<f64>;
