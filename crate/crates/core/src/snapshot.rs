//! Array snapshot reconstruction from the combined channel.
//!
//! Within one modulation period every extraction line sits exactly on a DFT
//! bin, so each element's snapshot entry is a single-bin correlation at
//! `f_c + k·2^{n-1}·f_p` divided by the order-`k` harmonic weight.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::real::{cis_cycles, Real};
use crate::scenario::{DerivedParams, Scenario};
use crate::synth::{baseband_value, ComplexSeries};
use crate::timemod::{harmonic_weight, CoefficientModel};

/// Analysis windows, each one modulation period long.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPlan<T> {
    /// Absolute start time of each window.
    pub window_starts: Vec<T>,
    /// Sample offset of each window from the start of the series.
    pub start_indices: Vec<usize>,
    pub window_length: T,
    pub samples_per_window: usize,
}

impl<T: Real> WindowPlan<T> {
    /// Windows `t0 + κ·stride`, κ = 0..K, for a series that starts at `t0`.
    pub fn from_scenario(scenario: &Scenario<T>) -> Self {
        let s = scenario.sampling();
        let spw = s.samples_per_window;
        let start_indices: Vec<usize> = (0..s.window_count)
            .map(|k| k * s.stride_periods * spw)
            .collect();
        let fs = s.sample_rate;
        Self {
            window_starts: start_indices
                .iter()
                .map(|&i| s.start_time + T::from_usize_lossy(i) / fs)
                .collect(),
            start_indices,
            window_length: scenario.modulation().period(),
            samples_per_window: spw,
        }
    }

    pub fn window_count(&self) -> usize {
        self.start_indices.len()
    }

    /// Samples needed to cover every window.
    pub fn total_samples(&self) -> usize {
        self.start_indices
            .last()
            .map_or(0, |&last| last + self.samples_per_window)
    }

    pub fn window_center(&self, window: usize) -> T {
        self.window_starts[window] + self.window_length / T::lit(2.0)
    }
}

/// `(1/n) Σ_i x[start + i] e^{-j2π f (t_start + i/f_s)}`, phase referenced to
/// absolute time.
pub fn extract_line<T: Real>(
    series: &ComplexSeries<T>,
    start: usize,
    n_pts: usize,
    frequency: T,
) -> Result<Complex<T>> {
    if n_pts == 0 || start + n_pts > series.len() {
        return Err(Error::WindowOutOfRange {
            start,
            len: n_pts,
            series_len: series.len(),
        });
    }
    let nyquist = series.sample_rate / T::lit(2.0);
    if frequency.abs() >= nyquist {
        return Err(Error::AboveNyquist {
            frequency: frequency.to_f64_lossy(),
            nyquist: nyquist.to_f64_lossy(),
        });
    }
    let base = frequency * series.time_at(start);
    let base = base - base.round();
    let step = frequency / series.sample_rate;
    let acc: Complex<T> = series.samples()[start..start + n_pts]
        .iter()
        .enumerate()
        .map(|(i, &x)| x * cis_cycles(-(base + step * T::from_usize_lossy(i))))
        .sum();
    Ok(acc / T::from_usize_lossy(n_pts))
}

/// Snapshot `γ_n`, n = 1..N, from the order-`k` lines of one window.
pub fn reconstruct_snapshot<T: Real>(
    series: &ComplexSeries<T>,
    start: usize,
    order: u32,
    derived: &DerivedParams<T>,
    model: CoefficientModel,
) -> Result<Vec<Complex<T>>> {
    if order.is_multiple_of(2) {
        return Err(Error::EvenOrder(order));
    }
    let spw = derived.samples_per_window;
    (1..=derived.element_frequencies.len())
        .map(|n| {
            let multiple = T::lit((order as u64 * (1u64 << (n - 1))) as f64);
            let f = derived.carrier_frequency + multiple * derived.base_frequency;
            let line = extract_line(series, start, spw, f)?;
            Ok(line / harmonic_weight::<T>(model, order, n, spw))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct SnapshotColumn<T> {
    pub window_index: usize,
    pub order: u32,
    pub window_start: T,
    #[serde(serialize_with = "serialize_complex_vec")]
    pub values: Vec<Complex<T>>,
}

fn serialize_complex_vec<T: Real + Serialize, S: serde::Serializer>(
    v: &[Complex<T>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

/// Reconstructed snapshots, one column per (window, order), window-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Real + Serialize")]
pub struct SnapshotMatrix<T> {
    pub element_count: usize,
    pub columns: Vec<SnapshotColumn<T>>,
}

impl<T: Real> SnapshotMatrix<T> {
    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn vectors(&self) -> Vec<Vec<Complex<T>>> {
        self.columns.iter().map(|c| c.values.clone()).collect()
    }

    pub fn to_matrix(&self) -> CMatrix<T> {
        CMatrix::from_columns(&self.vectors())
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        for c in &mut out.columns {
            c.values.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<T>> {
        let g = self.to_matrix();
        let gram = &g * &g.adjoint();
        Ok(hermitian_eigen(&gram)?
            .values
            .into_iter()
            .map(|l| l.max(T::zero()).sqrt())
            .collect())
    }

    /// CSV (CRLF) with header `window_index,order_k,element_n,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "window_index,order_k,element_n,re,im\r\n")?;
        for c in &self.columns {
            for (n, z) in c.values.iter().enumerate() {
                write!(
                    out,
                    "{},{},{},{},{}\r\n",
                    c.window_index,
                    c.order,
                    n + 1,
                    z.re,
                    z.im
                )?;
            }
        }
        Ok(())
    }
}

/// Snapshots from every window of `plan` and every order, window-major.
pub fn collect_snapshots<T: Real>(
    series: &ComplexSeries<T>,
    plan: &WindowPlan<T>,
    orders: &[u32],
    derived: &DerivedParams<T>,
    required_sources: usize,
    model: CoefficientModel,
) -> Result<SnapshotMatrix<T>> {
    let total = plan.window_count() * orders.len();
    if total < required_sources {
        return Err(Error::InsufficientWindows {
            available: total,
            required: required_sources,
        });
    }
    let mut columns = Vec::with_capacity(total);
    for (w, &start) in plan.start_indices.iter().enumerate() {
        for &k in orders {
            columns.push(SnapshotColumn {
                window_index: w,
                order: k,
                window_start: plan.window_starts[w],
                values: reconstruct_snapshot(series, start, k, derived, model)?,
            });
        }
    }
    Ok(SnapshotMatrix {
        element_count: derived.element_frequencies.len(),
        columns,
    })
}

/// `γ_n = Σ_m s_b(m)(t) e^{-j(n-1)βD sin θ_m}` with the baseband frozen at `t`.
pub fn ideal_snapshot<T: Real>(scenario: &Scenario<T>, t: T) -> Vec<Complex<T>> {
    let g = scenario.geometry();
    (0..g.element_count)
        .map(|lag| {
            scenario
                .sources()
                .iter()
                .map(|src| {
                    let cycles = T::from_usize_lossy(lag)
                        * g.spacing_wavelengths()
                        * src.angle_deg.to_radians().sin();
                    baseband_value(src, t) * cis_cycles(-cycles)
                })
                .sum()
        })
        .collect()
}

/// `‖a - b‖₂ / ‖b‖₂`.
pub fn relative_l2<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let num: T = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: T = b.iter().map(|y| y.norm_sqr()).sum();
    if den == T::zero() {
        return if num == T::zero() {
            T::zero()
        } else {
            T::infinity()
        };
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{validate, RawScenario, RawSource};
    use crate::synth::synthesize;
    use crate::timemod::modulate_and_combine;

    fn tone(f: f64, amp: Complex<f64>, fs: f64, t0: f64, n: usize) -> ComplexSeries<f64> {
        let s = (0..n)
            .map(|i| amp * cis_cycles(f * (t0 + i as f64 / fs)))
            .collect();
        ComplexSeries::new(t0, fs, s)
    }

    #[test]
    fn matched_tone_and_adjacent_bin() {
        let fs = 1.6e6;
        let amp = Complex::new(0.3, -1.1);
        let x = tone(6250.0, amp, fs, 0.0137, 1280);
        assert!((extract_line(&x, 0, 1280, 6250.0).unwrap() - amp).norm() < 1e-12);
        let y = tone(6250.0 + 1250.0, amp, fs, 0.0137, 1280);
        assert!(extract_line(&y, 0, 1280, 6250.0).unwrap().norm() < 1e-12);
    }

    #[test]
    fn extraction_errors() {
        let x = tone(100.0, Complex::new(1.0, 0.0), 1000.0, 0.0, 50);
        assert!(matches!(
            extract_line(&x, 10, 50, 100.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            extract_line(&x, 0, 0, 100.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            extract_line(&x, 0, 50, 500.0),
            Err(Error::AboveNyquist { .. })
        ));
    }

    fn scenario(raw: &RawScenario) -> Scenario<f64> {
        validate(raw).unwrap()
    }

    fn noiseless_combined(s: &Scenario<f64>) -> (ComplexSeries<f64>, WindowPlan<f64>) {
        let plan = WindowPlan::from_scenario(s);
        let sig = synthesize(s, s.sampling().start_time, plan.total_samples());
        (
            modulate_and_combine(&sig, s.modulation().base_frequency).unwrap(),
            plan,
        )
    }

    #[test]
    fn first_line_of_table1() {
        let s = scenario(&RawScenario::table1());
        let (y, plan) = noiseless_combined(&s);
        let line = extract_line(&y, 0, 1280, 6250.0).unwrap();
        // α_1 γ_1 with γ_1 = 0.6j - 0.8j + 0.3j = 0.1j. γ_1 is a near-cancellation,
        // so leakage from the neighbouring lines (baseband drift over the
        // window) is measured against the whole snapshot's norm.
        let alpha = Complex::new(0.0, -2.0 / std::f64::consts::PI);
        let expected = alpha * Complex::new(0.0, 0.1);
        assert!((expected.re - 0.063_66).abs() < 1e-5);
        let ideal = ideal_snapshot(&s, plan.window_center(0));
        let column_norm = ideal.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!(
            (line - expected).norm() < 0.02 * alpha.norm() * column_norm,
            "{line}"
        );
    }

    #[test]
    fn broadside_source_gives_flat_snapshot() {
        let mut raw = RawScenario::table1();
        raw.sources = vec![RawSource {
            angle_deg: 0.0,
            baseband_amplitude: [0.7, 0.2],
            baseband_frequency: 3.0,
            bandwidth: None,
        }];
        let s = scenario(&raw);
        let (y, _) = noiseless_combined(&s);
        let g = reconstruct_snapshot(&y, 0, 1, &s.derived(), CoefficientModel::Sampled).unwrap();
        let a = s.sources()[0].amplitude;
        for x in &g {
            assert!((x - a).norm() / a.norm() < 0.02);
        }
    }

    #[test]
    fn table1_snapshot_matches_oracle() {
        let s = scenario(&RawScenario::table1());
        let (y, plan) = noiseless_combined(&s);
        let d = s.derived();
        let g1 = reconstruct_snapshot(&y, 0, 1, &d, CoefficientModel::Sampled).unwrap();
        // oracle at t = 0: Σ a_m e^{-j(n-1)π sin θ_m}
        let amps = [
            Complex::new(0.0, 0.6),
            Complex::new(0.0, -0.8),
            Complex::new(0.0, 0.3),
        ];
        let angles = [10f64, 30.0, 40.0];
        let oracle_n = |n: usize| -> Complex<f64> {
            amps.iter()
                .zip(angles)
                .map(|(a, th)| {
                    a * Complex::new(
                        0.0,
                        -(n as f64) * std::f64::consts::PI * th.to_radians().sin(),
                    )
                    .exp()
                })
                .sum()
        };
        assert!((oracle_n(0) - Complex::new(0.0, 0.1)).norm() < 1e-12);
        let g2 = oracle_n(1);
        assert!((g2 - Complex::new(-0.218, 0.383)).norm() < 2e-3, "{g2}");
        let ideal0 = ideal_snapshot(&s, 0.0);
        for (n, g) in ideal0.iter().enumerate() {
            assert!((g - oracle_n(n)).norm() < 1e-12);
        }
        let center = ideal_snapshot(&s, plan.window_center(0));
        assert!(
            (g1[1] - center[1]).norm() / center[1].norm() < 0.02,
            "{}",
            g1[1]
        );
        assert!(relative_l2(&g1, &center) < 0.02);

        let g3 = reconstruct_snapshot(&y, 0, 3, &d, CoefficientModel::Sampled).unwrap();
        assert!(relative_l2(&g3, &g1) < 0.03);
    }

    #[test]
    fn continuous_coefficients_leave_a_half_sample_phase_error() {
        let s = scenario(&RawScenario::table1());
        let (y, plan) = noiseless_combined(&s);
        let d = s.derived();
        let ideal = ideal_snapshot(&s, plan.window_center(0));
        let sampled = reconstruct_snapshot(&y, 0, 3, &d, CoefficientModel::Sampled).unwrap();
        let continuous = reconstruct_snapshot(&y, 0, 3, &d, CoefficientModel::Continuous).unwrap();
        assert!(relative_l2(&sampled, &ideal) < relative_l2(&continuous, &ideal));
    }

    #[test]
    fn collect_shapes_and_errors() {
        let s = scenario(&RawScenario::table1());
        let (y, plan) = noiseless_combined(&s);
        let d = s.derived();
        let m = collect_snapshots(&y, &plan, &[1], &d, 3, CoefficientModel::Sampled).unwrap();
        assert_eq!((m.element_count, m.column_count()), (4, 5));
        let m2 = collect_snapshots(&y, &plan, &[1, 3], &d, 3, CoefficientModel::Sampled).unwrap();
        assert_eq!(m2.column_count(), 10);
        assert_eq!((m2.columns[1].window_index, m2.columns[1].order), (0, 3));

        let mut short = plan.clone();
        short.start_indices.truncate(2);
        short.window_starts.truncate(2);
        assert!(matches!(
            collect_snapshots(&y, &short, &[1], &d, 3, CoefficientModel::Sampled),
            Err(Error::InsufficientWindows {
                available: 2,
                required: 3
            })
        ));
        assert!(matches!(
            reconstruct_snapshot(&y, 0, 2, &d, CoefficientModel::Sampled),
            Err(Error::EvenOrder(2))
        ));
    }

    #[test]
    fn ideal_snapshot_special_cases() {
        let mut raw = RawScenario::table1();
        raw.sources = vec![RawSource {
            angle_deg: 30.0,
            baseband_amplitude: [1.0, 0.0],
            baseband_frequency: 0.0,
            bandwidth: None,
        }];
        let s = scenario(&raw);
        let g = ideal_snapshot(&s, 0.5);
        let expected = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (x, (re, im)) in g.iter().zip(expected) {
            assert!((x - Complex::new(re, im)).norm() < 1e-12);
        }
        raw.sources[0].angle_deg = 0.0;
        let g = ideal_snapshot(&scenario(&raw), 0.0);
        assert!(g
            .iter()
            .all(|x| (x - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn csv_layout() {
        let m = SnapshotMatrix {
            element_count: 2,
            columns: vec![SnapshotColumn {
                window_index: 0,
                order: 1,
                window_start: 0.0,
                values: vec![Complex::new(1.0, -0.5), Complex::new(0.25, 0.0)],
            }],
        };
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "window_index,order_k,element_n,re,im\r\n0,1,1,1,-0.5\r\n0,1,2,0.25,0\r\n"
        );
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(
            json["columns"][0]["values"][0],
            serde_json::json!([1.0, -0.5])
        );
    }
}
