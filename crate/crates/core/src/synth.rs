//! Per-element received analytic signals with true inter-element delays, and
//! calibrated circular complex Gaussian noise.

use std::io::{Read, Write};

use num_complex::Complex;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{cis_cycles, Real};
use crate::scenario::{Scenario, SourceSpec};

/// Uniformly sampled complex signal; sample `i` is at `start_time + i / sample_rate`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSeries<T> {
    pub start_time: T,
    pub sample_rate: T,
    samples: Vec<Complex<T>>,
}

impl<T: Real> ComplexSeries<T> {
    pub fn new(start_time: T, sample_rate: T, samples: Vec<Complex<T>>) -> Self {
        Self {
            start_time,
            sample_rate,
            samples,
        }
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, index: usize) -> T {
        self.start_time + T::from_usize_lossy(index) / self.sample_rate
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self::new(
            self.start_time,
            self.sample_rate,
            self.samples.iter().map(|&x| x * factor).collect(),
        )
    }
}

/// Time-aligned per-element series, element `n` at index `n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementSignals<T> {
    elements: Vec<ComplexSeries<T>>,
}

impl<T: Real> ElementSignals<T> {
    pub fn new(elements: Vec<ComplexSeries<T>>) -> Result<Self> {
        if let Some(first) = elements.first() {
            let aligned = elements.iter().all(|s| {
                s.len() == first.len()
                    && s.start_time == first.start_time
                    && s.sample_rate == first.sample_rate
            });
            if !aligned {
                return Err(Error::LengthMismatch);
            }
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexSeries<T>] {
        &self.elements
    }

    pub fn element(&self, n: usize) -> &ComplexSeries<T> {
        &self.elements[n - 1]
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn samples_per_element(&self) -> usize {
        self.elements.first().map_or(0, ComplexSeries::len)
    }
}

/// Propagation delay between adjacent elements, `D sin θ / c`.
pub fn tau<T: Real>(theta_deg: T, spacing: T, speed: T) -> T {
    spacing * theta_deg.to_radians().sin() / speed
}

/// `a_m e^{j2π f_bm t}`.
pub fn baseband_value<T: Real>(source: &SourceSpec<T>, t: T) -> Complex<T> {
    source.amplitude * cis_cycles(source.baseband_frequency * t)
}

/// Inter-element phase `(n-1)·βD·sin θ` expressed in cycles.
fn spatial_cycles<T: Real>(scenario: &Scenario<T>, n: usize, theta_deg: T) -> T {
    let g = scenario.geometry();
    T::from_usize_lossy(n - 1) * g.spacing_wavelengths() * theta_deg.to_radians().sin()
}

/// Received analytic signal of element `n` (from 1) at time `t`, with the
/// baseband evaluated at the delayed instant `t - (n-1)τ_m`.
pub fn element_signal<T: Real>(scenario: &Scenario<T>, n: usize, t: T) -> Complex<T> {
    let g = scenario.geometry();
    let lag = T::from_usize_lossy(n - 1);
    let baseband: Complex<T> = scenario
        .sources()
        .iter()
        .map(|src| {
            let delay = lag * tau(src.angle_deg, g.element_spacing, g.propagation_speed);
            baseband_value(src, t - delay) * cis_cycles(-spatial_cycles(scenario, n, src.angle_deg))
        })
        .sum();
    baseband * cis_cycles(g.carrier_frequency * t)
}

/// Noiseless samples of all elements over `n_samples` instants from `t0`.
pub fn synthesize<T: Real>(scenario: &Scenario<T>, t0: T, n_samples: usize) -> ElementSignals<T> {
    let g = scenario.geometry();
    let fs = scenario.sampling().sample_rate;
    let n_elements = g.element_count;
    let sources = scenario.sources();

    // s_b(t - (n-1)τ) e^{-j(n-1)βD sinθ} = a·e^{j2πf_b t} · e^{-j2πf_b(n-1)τ} e^{-j(n-1)βD sinθ};
    // only the first factor depends on time.
    let weights: Vec<Vec<Complex<T>>> = (1..=n_elements)
        .map(|n| {
            let lag = T::from_usize_lossy(n - 1);
            sources
                .iter()
                .map(|src| {
                    let delay = lag * tau(src.angle_deg, g.element_spacing, g.propagation_speed);
                    src.amplitude
                        * cis_cycles(-src.baseband_frequency * delay)
                        * cis_cycles(-spatial_cycles(scenario, n, src.angle_deg))
                })
                .collect()
        })
        .collect();

    let mut out: Vec<Vec<Complex<T>>> = vec![Vec::with_capacity(n_samples); n_elements];
    let mut tones = vec![Complex::<T>::zero(); sources.len()];
    for i in 0..n_samples {
        let t = t0 + T::from_usize_lossy(i) / fs;
        let carrier = cis_cycles(g.carrier_frequency * t);
        for (tone, src) in tones.iter_mut().zip(sources) {
            *tone = cis_cycles(src.baseband_frequency * t) * carrier;
        }
        for (samples, w) in out.iter_mut().zip(&weights) {
            let x: Complex<T> = w.iter().zip(&tones).map(|(&a, &b)| a * b).sum();
            samples.push(x);
        }
    }
    ElementSignals {
        elements: out
            .into_iter()
            .map(|s| ComplexSeries::new(t0, fs, s))
            .collect(),
    }
}

/// Noise variance `σ² = P_sig / 10^{snr/10}`; zero for infinite SNR.
pub fn noise_variance<T: Real>(signal_power: T, snr_db: T) -> T {
    if snr_db == T::infinity() {
        return T::zero();
    }
    signal_power / T::lit(10.0).powf(snr_db / T::lit(10.0))
}

/// Add independent circular complex Gaussian noise of total variance
/// `noise_variance(signal_power, snr_db)` to every sample. Element `n` draws
/// from ChaCha8 stream `n` of `seed`, so results do not depend on the order
/// elements are processed in.
pub fn add_noise<T: Real>(
    signals: &ElementSignals<T>,
    snr_db: T,
    signal_power: T,
    seed: u64,
) -> ElementSignals<T> {
    let variance = noise_variance(signal_power, snr_db);
    if variance == T::zero() {
        return signals.clone();
    }
    let sigma = (variance / T::lit(2.0)).sqrt();
    let elements = signals
        .elements
        .iter()
        .enumerate()
        .map(|(idx, series)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64 + 1);
            let samples = series
                .samples
                .iter()
                .map(|&x| {
                    let re = T::standard_normal(&mut rng);
                    let im = T::standard_normal(&mut rng);
                    x + Complex::new(re, im) * sigma
                })
                .collect();
            ComplexSeries::new(series.start_time, series.sample_rate, samples)
        })
        .collect();
    ElementSignals { elements }
}

/// JSON sidecar describing a binary signal dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpSidecar {
    pub schema_version: u32,
    pub format: String,
    pub t0: f64,
    pub f_s: f64,
    #[serde(rename = "N")]
    pub element_count: usize,
    pub length: usize,
}

pub const DUMP_FORMAT: &str = "f64le-interleaved-element-major";

impl<T: Real> ElementSignals<T> {
    /// Write all elements back to back as little-endian `f64` `re, im` pairs.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<DumpSidecar> {
        for series in &self.elements {
            for x in series.samples() {
                out.write_all(&x.re.to_f64_lossy().to_le_bytes())?;
                out.write_all(&x.im.to_f64_lossy().to_le_bytes())?;
            }
        }
        out.flush()?;
        let (t0, fs) = self.elements.first().map_or((0.0, 0.0), |s| {
            (s.start_time.to_f64_lossy(), s.sample_rate.to_f64_lossy())
        });
        Ok(DumpSidecar {
            schema_version: 1,
            format: DUMP_FORMAT.to_owned(),
            t0,
            f_s: fs,
            element_count: self.elements.len(),
            length: self.samples_per_element(),
        })
    }
}

/// Read a dump written by [`ElementSignals::write_dump`].
pub fn read_dump<R: Read>(mut input: R, sidecar: &DumpSidecar) -> Result<ElementSignals<f64>> {
    if sidecar.format != DUMP_FORMAT {
        return Err(Error::Dump(format!(
            "unsupported format {}",
            sidecar.format
        )));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let expected = sidecar.element_count * sidecar.length * 16;
    if bytes.len() != expected {
        return Err(Error::Dump(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let elements = values
        .chunks(2 * sidecar.length.max(1))
        .take(sidecar.element_count)
        .map(|chunk| {
            let samples = chunk
                .chunks_exact(2)
                .map(|p| Complex::new(p[0], p[1]))
                .collect();
            ComplexSeries::new(sidecar.t0, sidecar.f_s, samples)
        })
        .collect();
    ElementSignals::new(elements)
}
