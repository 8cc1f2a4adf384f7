//! Experiment description: parsing, validation and derived quantities.
//!
//! A [`RawScenario`] is the on-disk JSON form. [`validate`] checks every
//! physical and sampling constraint in `f64` and, on success, produces an
//! immutable [`Scenario`] in the caller's scalar type.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::real::{near_integer, Real};
use crate::timemod::{line_id, LineId};

/// Speed of light in vacuum, the default propagation speed.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Default minimum ratio `f_p / B_m` accepted as narrowband.
pub const DEFAULT_NARROWBAND_RATIO: f64 = 100.0;

const CLOCK_TOLERANCE: f64 = 1e-9;

fn default_speed() -> f64 {
    SPEED_OF_LIGHT
}

fn default_orders() -> Vec<i64> {
    vec![1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGeometry {
    pub element_count: i64,
    /// Meters.
    pub element_spacing: f64,
    /// Meters per second.
    #[serde(default = "default_speed")]
    pub propagation_speed: f64,
    /// Hertz.
    pub carrier_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSource {
    pub angle_deg: f64,
    /// `[re, im]`.
    pub baseband_amplitude: [f64; 2],
    pub baseband_frequency: f64,
    /// Defaults to `|baseband_frequency|` for a single tone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModulation {
    pub base_frequency: f64,
    #[serde(default = "default_orders")]
    pub harmonic_orders: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub narrowband_min_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSampling {
    pub sample_rate: f64,
    pub window_count: i64,
    /// Seconds between window starts; defaults to one modulation period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_stride: Option<f64>,
    #[serde(default)]
    pub start_time: f64,
    /// Absent means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
}

/// Scenario exactly as read from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub geometry: RawGeometry,
    pub sources: Vec<RawSource>,
    pub modulation: RawModulation,
    pub sampling: RawSampling,
}

impl RawScenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("raw scenario always serializes")
    }

    /// The three-source numerical experiment: 4 elements at half-wavelength
    /// spacing (c = 3e8 m/s), f_c = 5 kHz, f_p = 1250 Hz, f_s = 1.6 MHz,
    /// five consecutive one-period windows, 20 dB SNR, sources at 10°, 30°
    /// and 40°.
    pub fn table1() -> Self {
        let source = |angle_deg: f64, im: f64, freq: f64| RawSource {
            angle_deg,
            baseband_amplitude: [0.0, im],
            baseband_frequency: freq,
            bandwidth: None,
        };
        Self {
            geometry: RawGeometry {
                element_count: 4,
                element_spacing: 30_000.0,
                propagation_speed: 3e8,
                carrier_frequency: 5_000.0,
            },
            sources: vec![
                source(10.0, 0.6, 7.0),
                source(30.0, -0.8, 1.0),
                source(40.0, 0.3, 4.0),
            ],
            modulation: RawModulation {
                base_frequency: 1_250.0,
                harmonic_orders: vec![1],
                narrowband_min_ratio: None,
            },
            sampling: RawSampling {
                sample_rate: 1.6e6,
                window_count: 5,
                window_stride: Some(8e-4),
                start_time: 0.0,
                snr_db: Some(20.0),
                rng_seed: 1,
            },
        }
    }
}

/// A single failed constraint.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    InvalidValue {
        field: String,
        reason: String,
    },
    AmbiguityViolation {
        element_spacing: f64,
        half_wavelength: f64,
    },
    IncommensurateClocks {
        detail: String,
    },
    NarrowbandViolation {
        ratio: f64,
        required: f64,
    },
    TooManySources {
        sources: usize,
        max: usize,
    },
    NyquistViolation {
        sample_rate: f64,
        required_above: f64,
    },
    InsufficientWindows {
        windows: usize,
        sources: usize,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::InvalidValue { .. } => "InvalidValue",
            Violation::AmbiguityViolation { .. } => "AmbiguityViolation",
            Violation::IncommensurateClocks { .. } => "IncommensurateClocks",
            Violation::NarrowbandViolation { .. } => "NarrowbandViolation",
            Violation::TooManySources { .. } => "TooManySources",
            Violation::NyquistViolation { .. } => "NyquistViolation",
            Violation::InsufficientWindows { .. } => "InsufficientWindows",
        }
    }

    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Violation::InvalidValue {
            field: field.to_owned(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidValue { field, reason } => write!(f, "{field}: {reason}"),
            Violation::AmbiguityViolation {
                element_spacing,
                half_wavelength,
            } => write!(
                f,
                "element spacing {element_spacing} m exceeds half wavelength {half_wavelength} m"
            ),
            Violation::IncommensurateClocks { detail } => {
                write!(f, "incommensurate clocks: {detail}")
            }
            Violation::NarrowbandViolation { ratio, required } => {
                write!(
                    f,
                    "f_p / B = {ratio} is below the narrowband minimum {required}"
                )
            }
            Violation::TooManySources { sources, max } => {
                write!(f, "{sources} sources exceed the maximum of {max}")
            }
            Violation::NyquistViolation {
                sample_rate,
                required_above,
            } => write!(
                f,
                "sample rate {sample_rate} Hz must exceed {required_above} Hz"
            ),
            Violation::InsufficientWindows { windows, sources } => {
                write!(f, "{windows} windows cannot give rank {sources}")
            }
        }
    }
}

/// Every violation found in one validation pass.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidationErrors(pub Vec<Violation>);

impl ValidationErrors {
    pub fn contains(&self, kind: &str) -> bool {
        self.0.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario: ")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry<T> {
    pub element_count: usize,
    pub element_spacing: T,
    pub propagation_speed: T,
    pub carrier_frequency: T,
}

impl<T: Real> ArrayGeometry<T> {
    pub fn wavelength(&self) -> T {
        self.propagation_speed / self.carrier_frequency
    }

    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength()
    }

    /// Inter-element spacing in wavelengths, `D / λ`.
    pub fn spacing_wavelengths(&self) -> T {
        self.element_spacing / self.wavelength()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec<T> {
    pub angle_deg: T,
    pub amplitude: Complex<T>,
    pub baseband_frequency: T,
    pub bandwidth: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulationSpec<T> {
    pub base_frequency: T,
    pub harmonic_orders: Vec<u32>,
    pub narrowband_min_ratio: T,
}

impl<T: Real> ModulationSpec<T> {
    pub fn period(&self) -> T {
        self.base_frequency.recip()
    }

    /// `f_{p,n} = 2^{n-1} f_p`, elements numbered from 1.
    pub fn element_frequency(&self, n: usize) -> T {
        self.base_frequency * T::lit(2f64.powi(n as i32 - 1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingSpec<T> {
    pub sample_rate: T,
    pub window_count: usize,
    pub window_stride: T,
    /// `window_stride` in whole modulation periods.
    pub stride_periods: usize,
    pub start_time: T,
    pub snr_db: Option<T>,
    pub rng_seed: u64,
    /// Samples per modulation period, `f_s / f_p`.
    pub samples_per_window: usize,
}

/// A validated experiment. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T> {
    raw: RawScenario,
    geometry: ArrayGeometry<T>,
    sources: Vec<SourceSpec<T>>,
    modulation: ModulationSpec<T>,
    sampling: SamplingSpec<T>,
}

impl<T: Real> Scenario<T> {
    pub fn raw(&self) -> &RawScenario {
        &self.raw
    }

    pub fn geometry(&self) -> &ArrayGeometry<T> {
        &self.geometry
    }

    pub fn sources(&self) -> &[SourceSpec<T>] {
        &self.sources
    }

    pub fn modulation(&self) -> &ModulationSpec<T> {
        &self.modulation
    }

    pub fn sampling(&self) -> &SamplingSpec<T> {
        &self.sampling
    }

    pub fn element_count(&self) -> usize {
        self.geometry.element_count
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// True angles in degrees, sorted ascending.
    pub fn true_angles_deg(&self) -> Vec<T> {
        let mut angles: Vec<T> = self.sources.iter().map(|s| s.angle_deg).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
        angles
    }

    /// Total source power at one element, `Σ |a_m|²`.
    pub fn signal_power(&self) -> T {
        self.sources.iter().map(|s| s.amplitude.norm_sqr()).sum()
    }

    pub fn derived(&self) -> DerivedParams<T> {
        let geometry = &self.geometry;
        let modulation = &self.modulation;
        let n = geometry.element_count;
        let lines = modulation
            .harmonic_orders
            .iter()
            .flat_map(|&k| {
                (1..=n).map(move |element| {
                    line_id(
                        element,
                        k,
                        modulation.base_frequency,
                        geometry.carrier_frequency,
                    )
                    .expect("orders are odd after validation")
                })
            })
            .collect();
        DerivedParams {
            carrier_frequency: geometry.carrier_frequency,
            base_frequency: modulation.base_frequency,
            wavelength: geometry.wavelength(),
            wavenumber: geometry.wavenumber(),
            carrier_period: geometry.carrier_frequency.recip(),
            modulation_period: modulation.period(),
            samples_per_window: self.sampling.samples_per_window,
            element_frequencies: (1..=n).map(|e| modulation.element_frequency(e)).collect(),
            lines,
        }
    }

    /// Convert to another scalar type without revalidating.
    pub fn cast<U: Real>(&self) -> Scenario<U> {
        build(
            &self.raw,
            self.sampling.stride_periods,
            self.sampling.samples_per_window,
        )
    }
}

/// Quantities derived from a validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedParams<T> {
    pub carrier_frequency: T,
    pub base_frequency: T,
    pub wavelength: T,
    pub wavenumber: T,
    pub carrier_period: T,
    pub modulation_period: T,
    pub samples_per_window: usize,
    /// `f_{p,n}` for n = 1..N.
    pub element_frequencies: Vec<T>,
    /// Extraction lines, order-major then element.
    pub lines: Vec<LineId<T>>,
}

fn check_positive(v: &mut Vec<Violation>, field: &str, x: f64) {
    if !x.is_finite() || x <= 0.0 {
        v.push(Violation::invalid(
            field,
            format!("must be finite and positive, got {x}"),
        ));
    }
}

/// Check every constraint and build a [`Scenario`].
pub fn validate<T: Real>(raw: &RawScenario) -> Result<Scenario<T>, ValidationErrors> {
    let mut v = Vec::new();
    let g = &raw.geometry;
    let m = &raw.modulation;
    let s = &raw.sampling;

    if g.element_count < 2 {
        v.push(Violation::invalid(
            "geometry.element_count",
            "at least 2 elements required",
        ));
    } else if g.element_count > 30 {
        v.push(Violation::invalid(
            "geometry.element_count",
            "at most 30 elements supported",
        ));
    }
    check_positive(&mut v, "geometry.element_spacing", g.element_spacing);
    check_positive(&mut v, "geometry.propagation_speed", g.propagation_speed);
    check_positive(&mut v, "geometry.carrier_frequency", g.carrier_frequency);

    if raw.sources.is_empty() {
        v.push(Violation::invalid(
            "sources",
            "at least one source required",
        ));
    }
    for (i, src) in raw.sources.iter().enumerate() {
        if !src.angle_deg.is_finite() || src.angle_deg.abs() > 90.0 {
            v.push(Violation::invalid(
                &format!("sources[{i}].angle_deg"),
                format!("must lie in [-90, 90], got {}", src.angle_deg),
            ));
        }
        let [re, im] = src.baseband_amplitude;
        if !re.is_finite() || !im.is_finite() || (re == 0.0 && im == 0.0) {
            v.push(Violation::invalid(
                &format!("sources[{i}].baseband_amplitude"),
                "must be finite and nonzero",
            ));
        }
        if !src.baseband_frequency.is_finite() {
            v.push(Violation::invalid(
                &format!("sources[{i}].baseband_frequency"),
                "must be finite",
            ));
        }
        if let Some(b) = src.bandwidth {
            if !b.is_finite() || b < 0.0 {
                v.push(Violation::invalid(
                    &format!("sources[{i}].bandwidth"),
                    "must be finite and non-negative",
                ));
            }
        }
    }

    check_positive(&mut v, "modulation.base_frequency", m.base_frequency);
    if m.harmonic_orders.is_empty() {
        v.push(Violation::invalid(
            "modulation.harmonic_orders",
            "at least one order required",
        ));
    }
    for &k in &m.harmonic_orders {
        if k < 1 || k % 2 == 0 || k > u32::MAX as i64 {
            v.push(Violation::invalid(
                "modulation.harmonic_orders",
                format!("order {k} is not a positive odd integer"),
            ));
        }
    }
    let narrowband_ratio = m.narrowband_min_ratio.unwrap_or(DEFAULT_NARROWBAND_RATIO);
    if let Some(r) = m.narrowband_min_ratio {
        check_positive(&mut v, "modulation.narrowband_min_ratio", r);
    }

    check_positive(&mut v, "sampling.sample_rate", s.sample_rate);
    if s.window_count < 1 {
        v.push(Violation::invalid(
            "sampling.window_count",
            "at least one window required",
        ));
    }
    if let Some(stride) = s.window_stride {
        check_positive(&mut v, "sampling.window_stride", stride);
    }
    if !s.start_time.is_finite() {
        v.push(Violation::invalid("sampling.start_time", "must be finite"));
    }
    if let Some(snr) = s.snr_db {
        if snr.is_nan() {
            v.push(Violation::invalid("sampling.snr_db", "must be a number"));
        }
    }

    // Cross-field checks only make sense on sane primitives.
    if !v.is_empty() {
        return Err(ValidationErrors(v));
    }

    let n = g.element_count as usize;
    let wavelength = g.propagation_speed / g.carrier_frequency;
    if g.element_spacing > wavelength / 2.0 * (1.0 + 1e-12) {
        v.push(Violation::AmbiguityViolation {
            element_spacing: g.element_spacing,
            half_wavelength: wavelength / 2.0,
        });
    }

    let carrier_cycles = g.carrier_frequency / m.base_frequency;
    if near_integer(carrier_cycles, CLOCK_TOLERANCE)
        .filter(|&k| k >= 1)
        .is_none()
    {
        v.push(Violation::IncommensurateClocks {
            detail: format!("T_p / T_c = {carrier_cycles} is not a positive integer"),
        });
    }
    let mut samples_per_window = 0usize;
    match near_integer(s.sample_rate / m.base_frequency, CLOCK_TOLERANCE) {
        Some(spw) if spw >= 1 => {
            samples_per_window = spw as usize;
            let divisor = 1usize << n;
            if !samples_per_window.is_multiple_of(divisor) {
                v.push(Violation::IncommensurateClocks {
                    detail: format!(
                        "samples per window {samples_per_window} not divisible by 2^N = {divisor}; \
                         switch instants would fall between samples"
                    ),
                });
            }
        }
        _ => v.push(Violation::IncommensurateClocks {
            detail: format!(
                "f_s / f_p = {} is not an integer",
                s.sample_rate / m.base_frequency
            ),
        }),
    }
    let period = m.base_frequency.recip();
    let stride = s.window_stride.unwrap_or(period);
    let stride_periods = match near_integer(stride / period, CLOCK_TOLERANCE) {
        Some(p) if p >= 1 => p as usize,
        _ => {
            v.push(Violation::IncommensurateClocks {
                detail: format!(
                    "window stride {stride} s is not a positive multiple of T_p = {period} s"
                ),
            });
            0
        }
    };

    let max_bandwidth = raw
        .sources
        .iter()
        .map(|src| src.bandwidth.unwrap_or(src.baseband_frequency.abs()))
        .fold(0.0, f64::max);
    if max_bandwidth > 0.0 {
        let ratio = m.base_frequency / max_bandwidth;
        if ratio < narrowband_ratio {
            v.push(Violation::NarrowbandViolation {
                ratio,
                required: narrowband_ratio,
            });
        }
    }

    if raw.sources.len() > n - 1 {
        v.push(Violation::TooManySources {
            sources: raw.sources.len(),
            max: n - 1,
        });
    }

    let max_order = *m.harmonic_orders.iter().max().expect("checked nonempty") as f64;
    let highest_line = g.carrier_frequency + max_order * 2f64.powi(n as i32 - 1) * m.base_frequency;
    if s.sample_rate <= 2.0 * highest_line {
        v.push(Violation::NyquistViolation {
            sample_rate: s.sample_rate,
            required_above: 2.0 * highest_line,
        });
    }

    if (s.window_count as usize) < raw.sources.len() {
        v.push(Violation::InsufficientWindows {
            windows: s.window_count as usize,
            sources: raw.sources.len(),
        });
    }

    if !v.is_empty() {
        return Err(ValidationErrors(v));
    }
    Ok(build(raw, stride_periods, samples_per_window))
}

fn build<T: Real>(
    raw: &RawScenario,
    stride_periods: usize,
    samples_per_window: usize,
) -> Scenario<T> {
    let g = &raw.geometry;
    let m = &raw.modulation;
    let s = &raw.sampling;
    let period = m.base_frequency.recip();
    Scenario {
        raw: raw.clone(),
        geometry: ArrayGeometry {
            element_count: g.element_count as usize,
            element_spacing: T::lit(g.element_spacing),
            propagation_speed: T::lit(g.propagation_speed),
            carrier_frequency: T::lit(g.carrier_frequency),
        },
        sources: raw
            .sources
            .iter()
            .map(|src| SourceSpec {
                angle_deg: T::lit(src.angle_deg),
                amplitude: Complex::new(
                    T::lit(src.baseband_amplitude[0]),
                    T::lit(src.baseband_amplitude[1]),
                ),
                baseband_frequency: T::lit(src.baseband_frequency),
                bandwidth: T::lit(src.bandwidth.unwrap_or(src.baseband_frequency.abs())),
            })
            .collect(),
        modulation: ModulationSpec {
            base_frequency: T::lit(m.base_frequency),
            harmonic_orders: m.harmonic_orders.iter().map(|&k| k as u32).collect(),
            narrowband_min_ratio: T::lit(
                m.narrowband_min_ratio.unwrap_or(DEFAULT_NARROWBAND_RATIO),
            ),
        },
        sampling: SamplingSpec {
            sample_rate: T::lit(s.sample_rate),
            window_count: s.window_count as usize,
            window_stride: T::lit(stride_periods as f64 * period),
            stride_periods,
            start_time: T::lit(s.start_time),
            snr_db: s.snr_db.map(T::lit),
            rng_seed: s.rng_seed,
            samples_per_window,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kinds(raw: &RawScenario) -> Vec<&'static str> {
        match validate::<f64>(raw) {
            Ok(_) => vec![],
            Err(e) => e.0.iter().map(Violation::kind).collect(),
        }
    }

    #[test]
    fn table1_is_valid() {
        let s = validate::<f64>(&RawScenario::table1()).unwrap();
        let d = s.derived();
        assert_eq!(d.wavelength, 60_000.0);
        assert_eq!(s.geometry().element_spacing, d.wavelength / 2.0);
        assert_relative_eq!(
            d.modulation_period,
            4.0 * d.carrier_period,
            max_relative = 1e-15
        );
        assert_eq!(d.samples_per_window, 1280);
        assert_eq!(s.sampling().stride_periods, 1);
    }

    #[test]
    fn derived_element_frequencies_and_lines() {
        let d = validate::<f64>(&RawScenario::table1()).unwrap().derived();
        assert_eq!(d.element_frequencies, vec![1250.0, 2500.0, 5000.0, 10000.0]);
        let f: Vec<f64> = d.lines.iter().map(|l| l.frequency).collect();
        assert_eq!(f, vec![6250.0, 7500.0, 10000.0, 15000.0]);
    }

    #[test]
    fn derived_is_deterministic() {
        let raw = RawScenario::table1();
        let a = validate::<f64>(&raw).unwrap();
        let b = validate::<f64>(&raw).unwrap();
        assert_eq!(a.derived(), b.derived());
    }

    #[test]
    fn full_wavelength_spacing_is_ambiguous() {
        let mut raw = RawScenario::table1();
        raw.geometry.element_spacing = 60_000.0;
        assert_eq!(kinds(&raw), vec!["AmbiguityViolation"]);
    }

    #[test]
    fn four_sources_on_four_elements_rejected() {
        let mut raw = RawScenario::table1();
        raw.sampling.window_count = 8;
        raw.sources.push(RawSource {
            angle_deg: -20.0,
            baseband_amplitude: [0.5, 0.0],
            baseband_frequency: 2.0,
            bandwidth: None,
        });
        assert_eq!(kinds(&raw), vec!["TooManySources"]);
    }

    #[test]
    fn clock_violations() {
        let mut raw = RawScenario::table1();
        raw.modulation.base_frequency = 1500.0; // 5000/1500 not integral, nor 1.6e6/1500
        let k = kinds(&raw);
        assert!(
            k.iter().filter(|&&x| x == "IncommensurateClocks").count() >= 2,
            "{k:?}"
        );

        let mut raw = RawScenario::table1();
        raw.sampling.window_stride = Some(1.5e-3);
        assert_eq!(kinds(&raw), vec!["IncommensurateClocks"]);
    }

    #[test]
    fn narrowband_threshold_and_override() {
        let mut raw = RawScenario::table1();
        raw.sources[0].baseband_frequency = 20.0; // 1250 / 20 = 62.5
        assert_eq!(kinds(&raw), vec!["NarrowbandViolation"]);
        raw.modulation.narrowband_min_ratio = Some(50.0);
        assert!(kinds(&raw).is_empty());
    }

    #[test]
    fn nyquist_and_window_count() {
        let mut raw = RawScenario::table1();
        raw.sampling.sample_rate = 20_000.0; // 16 samples per window, lines up to 15 kHz
        assert!(kinds(&raw).contains(&"NyquistViolation"));

        let mut raw = RawScenario::table1();
        raw.sampling.window_count = 2;
        assert_eq!(kinds(&raw), vec!["InsufficientWindows"]);
    }

    #[test]
    fn malformed_primitives_are_named() {
        let mut raw = RawScenario::table1();
        raw.geometry.element_count = 1;
        raw.geometry.carrier_frequency = f64::NAN;
        raw.sources[0].angle_deg = 95.0;
        raw.sources[1].baseband_amplitude = [0.0, 0.0];
        raw.modulation.harmonic_orders = vec![1, 2];
        raw.sampling.window_count = -3;
        let k = kinds(&raw);
        assert_eq!(k.len(), 6, "{k:?}");
        assert!(k.iter().all(|&x| x == "InvalidValue"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut json: serde_json::Value = serde_json::to_value(RawScenario::table1()).unwrap();
        json["geometry"]["polarization"] = serde_json::json!("h");
        assert!(serde_json::from_value::<RawScenario>(json).is_err());
    }

    #[test]
    fn speed_of_light_default() {
        let text = r#"{
            "geometry": {"element_count": 3, "element_spacing": 10.0, "carrier_frequency": 1e6},
            "sources": [{"angle_deg": 0, "baseband_amplitude": [1, 0], "baseband_frequency": 0}],
            "modulation": {"base_frequency": 1e4},
            "sampling": {"sample_rate": 1.28e7, "window_count": 2}
        }"#;
        let raw = RawScenario::from_json(text).unwrap();
        assert_eq!(raw.geometry.propagation_speed, SPEED_OF_LIGHT);
        let s = validate::<f64>(&raw).unwrap();
        assert_eq!(s.sampling().snr_db, None);
        assert_eq!(s.modulation().harmonic_orders, vec![1]);
    }

    #[test]
    fn cast_to_f32_preserves_structure() {
        let s = validate::<f64>(&RawScenario::table1()).unwrap();
        let s32: Scenario<f32> = s.cast();
        assert_eq!(s32.derived().samples_per_window, 1280);
        assert_eq!(s32.geometry().carrier_frequency, 5000.0f32);
    }
}
