//! Small dense complex matrices and a cyclic Jacobi Hermitian eigensolver.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::real::Real;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        Self::from_fn(rows, columns.len(), |r, c| columns[c][r])
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, c: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `‖A - A^H‖_F / ‖A‖_F` (0 for the zero matrix).
    pub fn hermitian_defect(&self) -> T {
        let norm = self.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        self.sub(&self.adjoint()).frobenius_norm() / norm
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows);
        CMatrix::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|k| self[(r, k)] * rhs[(k, c)]).sum()
        })
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V Λ V^H`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let scaled = &self.vectors * &CMatrix::diagonal(&self.values);
        &scaled * &self.vectors.adjoint()
    }
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Stops when the off-diagonal Frobenius mass falls below
/// `T::eig_tolerance()·‖A‖_F`; fails after `100·N²` rotations.
pub fn hermitian_eigen<T: Real>(matrix: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    assert!(
        matrix.is_square(),
        "eigendecomposition needs a square matrix"
    );
    let n = matrix.rows();
    let defect = matrix.hermitian_defect();
    if defect > T::lit(1e3) * T::epsilon() * T::from_usize_lossy(n.max(1)) {
        return Err(Error::NotHermitian(defect.to_f64_lossy()));
    }

    // Symmetrize exactly so the diagonal is real.
    let mut a = CMatrix::from_fn(n, n, |r, c| {
        (matrix[(r, c)] + matrix[(c, r)].conj()) * T::lit(0.5)
    });
    let mut v = CMatrix::identity(n);
    let threshold = T::eig_tolerance() * a.frobenius_norm();
    let max_rotations = 100 * n * n;
    let mut rotations = 0usize;

    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                if rotations == max_rotations {
                    return Err(Error::ConvergenceFailure(max_rotations));
                }
                rotations += 1;
                rotate(&mut a, &mut v, p, q, apq, r);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut sum = T::zero();
    for r in 0..n {
        for c in 0..n {
            if r != c {
                sum += a[(r, c)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Apply `A ← J^H A J`, `V ← V J` with `J` zeroing `A[p,q]`.
///
/// `J = diag(1, e^{-jφ}) · G` on the (p, q) plane, where `φ = arg A[p,q]`
/// makes the pivot real and `G` is the real Jacobi rotation for it.
fn rotate<T: Real>(
    a: &mut CMatrix<T>,
    v: &mut CMatrix<T>,
    p: usize,
    q: usize,
    apq: Complex<T>,
    r: T,
) {
    let n = a.rows();
    let phase = apq / r; // e^{jφ}
    let theta = (a[(q, q)].re - a[(p, p)].re) / (T::lit(2.0) * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;

    // J columns restricted to the (p, q) plane.
    let jpp = Complex::new(c, T::zero());
    let jpq = Complex::new(s, T::zero());
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A ← A J (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    // A ← J^H A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)].im = T::zero();
    a[(q, q)].im = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn unitary_defect(v: &CMatrix<f64>) -> f64 {
        (&v.adjoint() * v)
            .sub(&CMatrix::identity(v.rows()))
            .frobenius_norm()
    }

    #[test]
    fn identity_and_diagonal() {
        let e = hermitian_eigen(&CMatrix::<f64>::identity(4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);

        let e = hermitian_eigen(&CMatrix::diagonal(&[1.0, 3.0, 4.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![4.0, 3.0, 2.0, 1.0]);
        for (col, basis) in [2usize, 1, 3, 0].into_iter().enumerate() {
            assert_eq!(e.vectors[(basis, col)].norm(), 1.0);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let a = vec![c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)];
        let m = CMatrix::from_fn(4, 4, |r, k| a[r] * a[k].conj());
        let e = hermitian_eigen(&m).unwrap();
        assert!((e.values[0] - 4.0).abs() < 1e-10);
        assert!(e.values[1..].iter().all(|x| x.abs() < 1e-10));
        let top = e.vectors.column(0);
        let overlap: Complex<f64> = top.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::<f64>::identity(3);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eigen(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let m = CMatrix::from_fn(3, 3, |r, k| {
            if r == k {
                Complex::new((r + 2) as f32, 0.0)
            } else if r < k {
                Complex::new(0.3, 0.2)
            } else {
                Complex::new(0.3, -0.2)
            }
        });
        let e = hermitian_eigen(&m).unwrap();
        let err = e.reconstruct().sub(&m).frobenius_norm() / m.frobenius_norm();
        assert!(err < 1e-5, "{err}");
    }

    fn psd_strategy() -> impl Strategy<Value = CMatrix<f64>> {
        (2usize..=8).prop_flat_map(|n| {
            proptest::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |raw| {
                let b = CMatrix::from_fn(n, n, |r, k| {
                    c(raw[2 * (r * n + k)], raw[2 * (r * n + k) + 1])
                });
                &b * &b.adjoint()
            })
        })
    }

    proptest! {
        #[test]
        fn reconstructs_random_psd(m in psd_strategy()) {
            let e = hermitian_eigen(&m).unwrap();
            let norm = m.frobenius_norm();
            prop_assert!(e.reconstruct().sub(&m).frobenius_norm() <= 1e-9 * norm);
            prop_assert!(unitary_defect(&e.vectors) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let trace = m.trace().re;
            for (i, &lambda) in e.values.iter().enumerate() {
                let vi = e.vectors.column(i);
                let mv = m.mul_vec(&vi);
                let resid: f64 = mv.iter().zip(&vi).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(resid <= 1e-9 * trace.max(1e-300));
                prop_assert!(lambda >= -1e-10 * trace);
            }
        }
    }
}
