//! MUSIC spatial spectrum over reconstructed snapshots.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianEigen};
use crate::real::{cis_cycles, Real};
use crate::scenario::ArrayGeometry;
use crate::snapshot::SnapshotMatrix;

/// Sample covariance `R = (1/K) Σ γ γ^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix<T>(CMatrix<T>);

impl<T: Real> CovarianceMatrix<T> {
    /// Wrap an arbitrary matrix; it must be square and Hermitian.
    pub fn from_matrix(m: CMatrix<T>) -> Result<Self> {
        let tol = T::lit(1e3) * T::epsilon() * T::from_usize_lossy(m.rows().max(1));
        if !m.is_square() || m.hermitian_defect() > tol {
            return Err(Error::NotHermitian(m.hermitian_defect().to_f64_lossy()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.rows()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self(self.0.scale(factor))
    }

    pub fn eigen(&self) -> Result<HermitianEigen<T>> {
        hermitian_eigen(&self.0)
    }
}

pub fn sample_covariance<T: Real>(snapshots: &[Vec<Complex<T>>]) -> Result<CovarianceMatrix<T>> {
    let first = snapshots.first().ok_or(Error::EmptySnapshotSet)?;
    let n = first.len();
    let mut r = CMatrix::zeros(n, n);
    for g in snapshots {
        assert_eq!(g.len(), n, "snapshot lengths differ");
        for i in 0..n {
            for j in i..n {
                r[(i, j)] += g[i] * g[j].conj();
            }
        }
    }
    let k = T::from_usize_lossy(snapshots.len());
    for i in 0..n {
        r[(i, i)] = Complex::new(r[(i, i)].re / k, T::zero());
        for j in (i + 1)..n {
            let v = r[(i, j)] / k;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
    Ok(CovarianceMatrix(r))
}

impl<T: Real> SnapshotMatrix<T> {
    pub fn covariance(&self) -> Result<CovarianceMatrix<T>> {
        sample_covariance(&self.vectors())
    }
}

/// `a(θ)_n = e^{-j(n-1)βD sin θ}`.
pub fn steering_vector<T: Real>(theta_deg: T, geometry: &ArrayGeometry<T>) -> Vec<Complex<T>> {
    let per_element = geometry.spacing_wavelengths() * theta_deg.to_radians().sin();
    (0..geometry.element_count)
        .map(|lag| {
            if lag == 0 {
                Complex::new(T::one(), T::zero())
            } else {
                cis_cycles(-T::from_usize_lossy(lag) * per_element)
            }
        })
        .collect()
}

/// Strictly increasing scan angles in degrees within [-90, 90].
#[derive(Clone, Debug, PartialEq)]
pub struct AngleGrid<T>(Vec<T>);

impl<T: Real> AngleGrid<T> {
    pub fn new(angles: Vec<T>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidGrid("empty".into()));
        }
        let limit = T::lit(90.0);
        if angles.iter().any(|a| !a.is_finite() || a.abs() > limit) {
            return Err(Error::InvalidGrid("angles must lie in [-90, 90]".into()));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "angles must be strictly increasing".into(),
            ));
        }
        Ok(Self(angles))
    }

    /// `start, start + step, …` up to and including `stop` (within rounding).
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    pub fn uniform(start: T, stop: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || stop < start {
            return Err(Error::InvalidGrid("need step > 0 and stop >= start".into()));
        }
        let count = ((stop - start) / step + T::lit(1e-6))
            .floor()
            .to_usize()
            .unwrap_or(0)
            + 1;
        Self::new(
            (0..count)
                .map(|i| (start + step * T::from_usize_lossy(i)).min(stop))
                .collect(),
        )
    }

    /// [-90°, 90°] in 0.1° steps.
    pub fn default_grid() -> Self {
        Self::uniform(T::lit(-90.0), T::lit(90.0), T::lit(0.1)).expect("valid default grid")
    }

    pub fn angles(&self) -> &[T] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak<T> {
    /// Refined angle, degrees.
    pub angle_deg: T,
    /// Interpolated pseudo-spectrum value (linear).
    pub value: T,
    pub grid_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialSpectrum<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// Sorted by descending value; at most `source_count`.
    pub peaks: Vec<Peak<T>>,
    pub source_count: usize,
}

impl<T: Real> SpatialSpectrum<T> {
    pub fn values_db(&self) -> Vec<T> {
        self.values.iter().map(|&p| to_db(p)).collect()
    }

    /// Peak angles sorted ascending.
    pub fn estimated_angles(&self) -> Vec<T> {
        let mut a: Vec<T> = self.peaks.iter().map(|p| p.angle_deg).collect();
        a.sort_by(|x, y| x.partial_cmp(y).expect("finite angles"));
        a
    }

    /// CSV (CRLF) with header `theta_deg,p_linear,p_db`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "theta_deg,p_linear,p_db\r\n")?;
        for ((theta, p), db) in self.grid.iter().zip(&self.values).zip(self.values_db()) {
            write!(out, "{theta},{p},{db}\r\n")?;
        }
        Ok(())
    }
}

fn to_db<T: Real>(p: T) -> T {
    T::lit(10.0) * p.log10()
}

/// MUSIC pseudo-spectrum `1 / (a^H E_n E_n^H a)` with the noise subspace
/// `E_n` spanned by the `N - M` smallest eigenvectors of `R`.
pub fn music_spectrum<T: Real>(
    covariance: &CovarianceMatrix<T>,
    source_count: usize,
    geometry: &ArrayGeometry<T>,
    grid: &AngleGrid<T>,
) -> Result<SpatialSpectrum<T>> {
    let n = covariance.dimension();
    if source_count == 0 || source_count >= n {
        return Err(Error::SubspaceDimension {
            sources: source_count,
            elements: n,
        });
    }
    let eigen = covariance.eigen()?;
    let noise: Vec<Vec<Complex<T>>> = (source_count..n).map(|i| eigen.vectors.column(i)).collect();

    let values: Vec<T> = grid
        .angles()
        .iter()
        .map(|&theta| {
            let a = steering_vector(theta, geometry);
            let denom: T = noise
                .iter()
                .map(|e| {
                    e.iter()
                        .zip(&a)
                        .map(|(x, y)| x.conj() * y)
                        .sum::<Complex<T>>()
                        .norm_sqr()
                })
                .sum();
            denom.max(T::min_positive_value()).recip()
        })
        .collect();

    let peaks = pick_peaks(grid.angles(), &values, source_count);
    Ok(SpatialSpectrum {
        grid: grid.angles().to_vec(),
        values,
        peaks,
        source_count,
    })
}

/// Top-`count` local maxima, refined by a parabola through the three dB
/// values around each. Values within a relative [`TIE_TOLERANCE`] count as
/// equal, and equal values prefer the smaller `|θ|`.
pub fn pick_peaks<T: Real>(grid: &[T], values: &[T], count: usize) -> Vec<Peak<T>> {
    let tie = T::lit(TIE_TOLERANCE);
    let at_least = |a: T, b: T| a >= b - tie * a.abs().max(b.abs());
    let len = values.len();
    let mut candidates: Vec<usize> = (0..len)
        .filter(|&i| {
            let left = i == 0 || at_least(values[i], values[i - 1]);
            let right = i + 1 == len || at_least(values[i], values[i + 1]);
            left && right
        })
        .collect();

    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count && !candidates.is_empty() {
        let best = candidates
            .iter()
            .map(|&i| values[i])
            .fold(T::neg_infinity(), T::max);
        let (pos, _) = candidates
            .iter()
            .enumerate()
            .filter(|&(_, &i)| at_least(values[i], best))
            .min_by(|(_, &a), (_, &b)| {
                grid[a]
                    .abs()
                    .partial_cmp(&grid[b].abs())
                    .expect("finite grid")
            })
            .expect("the maximum is always a candidate");
        chosen.push(candidates.swap_remove(pos));
    }
    chosen
        .into_iter()
        .map(|i| refine(grid, values, i))
        .collect()
}

/// Relative difference below which two spectrum values are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

fn refine<T: Real>(grid: &[T], values: &[T], i: usize) -> Peak<T> {
    let unrefined = Peak {
        angle_deg: grid[i],
        value: values[i],
        grid_index: i,
    };
    if i == 0 || i + 1 == values.len() {
        return unrefined;
    }
    let (l, c, r) = (to_db(values[i - 1]), to_db(values[i]), to_db(values[i + 1]));
    let curvature = l - c - c + r;
    if curvature.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Less) || !curvature.is_finite()
    {
        return unrefined;
    }
    let half = T::lit(0.5);
    let offset = (half * (l - r) / curvature).max(-half).min(half);
    let step = if offset >= T::zero() {
        grid[i + 1] - grid[i]
    } else {
        grid[i] - grid[i - 1]
    };
    let peak_db = c - T::lit(0.25) * (l - r) * offset;
    Peak {
        angle_deg: grid[i] + offset * step,
        value: T::lit(10.0).powf(peak_db / T::lit(10.0)),
        grid_index: i,
    }
}

/// Source count from the largest ratio between consecutive eigenvalues
/// (descending input), limited to `1..=N-1`.
pub fn estimate_source_count<T: Real>(eigenvalues: &[T]) -> usize {
    let floor = eigenvalues.first().map_or(T::zero(), |&l| l.abs()) * T::epsilon();
    let floor = floor.max(T::min_positive_value());
    (0..eigenvalues.len().saturating_sub(1))
        .map(|i| {
            (
                i + 1,
                eigenvalues[i].max(floor) / eigenvalues[i + 1].max(floor),
            )
        })
        .fold(
            (1, T::zero()),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{validate, RawScenario};

    fn geometry() -> ArrayGeometry<f64> {
        validate::<f64>(&RawScenario::table1())
            .unwrap()
            .geometry()
            .clone()
    }

    #[test]
    fn steering_values() {
        let g = geometry();
        assert!(steering_vector(0.0, &g)
            .iter()
            .all(|x| *x == Complex::new(1.0, 0.0)));
        let a = steering_vector(30.0, &g);
        let expected = [(1.0, 0.0), (0.0, -1.0), (-1.0, 0.0), (0.0, 1.0)];
        for (x, (re, im)) in a.iter().zip(expected) {
            assert!((x - Complex::new(re, im)).norm() < 1e-12);
        }
        let b = steering_vector(-30.0, &g);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-12);
            assert!((y.norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(b[0], Complex::new(1.0, 0.0));
    }

    #[test]
    fn covariance_basics() {
        let a = steering_vector(30.0, &geometry());
        let r = sample_covariance(std::slice::from_ref(&a)).unwrap();
        assert!((r.matrix().trace().re - 4.0).abs() < 1e-12);
        let e = r.eigen().unwrap();
        assert!((e.values[0] - 4.0).abs() < 1e-10 && e.values[1].abs() < 1e-10);
        assert_eq!(r.matrix().hermitian_defect(), 0.0);

        let z = sample_covariance(&vec![vec![Complex::new(0.0, 0.0); 4]; 3]).unwrap();
        assert_eq!(z.matrix().frobenius_norm(), 0.0);
        assert!(matches!(
            sample_covariance::<f64>(&[]),
            Err(Error::EmptySnapshotSet)
        ));
    }

    #[test]
    fn single_source_peak_on_fine_grid() {
        let g = geometry();
        let r = sample_covariance(&[steering_vector(30.0, &g)]).unwrap();
        let grid = AngleGrid::uniform(-90.0, 90.0, 0.01).unwrap();
        let s = music_spectrum(&r, 1, &g, &grid).unwrap();
        assert_eq!(s.peaks.len(), 1);
        assert!((s.peaks[0].angle_deg - 30.0).abs() <= 0.01, "{:?}", s.peaks);
    }

    #[test]
    fn isotropic_covariance_is_flat() {
        let g = geometry();
        let r = CovarianceMatrix::from_matrix(CMatrix::identity(4)).unwrap();
        let s = music_spectrum(&r, 1, &g, &AngleGrid::default_grid()).unwrap();
        let (lo, hi) = s
            .values
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!((hi - lo) / hi < 1e-12);
        assert_eq!(s.peaks.len(), 1);
        assert!(s.peaks[0].angle_deg.abs() < 1e-9);
    }

    #[test]
    fn subspace_dimension_checked() {
        let g = geometry();
        let r = CovarianceMatrix::from_matrix(CMatrix::identity(4)).unwrap();
        let grid = AngleGrid::default_grid();
        assert!(matches!(
            music_spectrum(&r, 4, &g, &grid),
            Err(Error::SubspaceDimension { .. })
        ));
        assert!(matches!(
            music_spectrum(&r, 0, &g, &grid),
            Err(Error::SubspaceDimension { .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(AngleGrid::<f64>::new(vec![]).is_err());
        assert!(AngleGrid::new(vec![0.0, 0.0]).is_err());
        assert!(AngleGrid::new(vec![-91.0, 0.0]).is_err());
        let g = AngleGrid::<f64>::default_grid();
        assert_eq!(g.angles().len(), 1801);
        assert_eq!(*g.angles().last().unwrap(), 90.0);
    }

    #[test]
    fn parabolic_refinement_recovers_vertex() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        // dB parabola with vertex at 4.3
        let values: Vec<f64> = grid
            .iter()
            .map(|x| 10f64.powf((20.0 - (x - 4.3) * (x - 4.3)) / 10.0))
            .collect();
        let peaks = pick_peaks(&grid, &values, 3);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].angle_deg - 4.3).abs() < 1e-12);
        assert!((peaks[0].value - 100.0).abs() < 1e-9);
    }

    #[test]
    fn gap_estimator() {
        assert_eq!(estimate_source_count(&[5.0, 4.0, 1e-3, 9e-4]), 2);
        assert_eq!(estimate_source_count(&[5.0, 1e-3, 1e-3, 1e-3]), 1);
        assert_eq!(estimate_source_count(&[5.0, 4.0, 3.0, 0.0]), 3);
    }
}
