//! Dense complex matrices and small real linear solvers.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> =
            rows.iter().map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect()).collect();
        Self::from_rows(&rows)
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

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Frobenius norm of `self† · self − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self[(k, i)].conj() * self[(k, j)];
                }
                if i == j {
                    s -= 1.0;
                }
                acc += s.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Largest entrywise modulus of `self − other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_mul(rhs).expect("matrix shapes do not conform")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Solves the symmetric system `(A + shift·I) x = b`.
///
/// Tries a Cholesky factorisation first and falls back to LU for
/// indefinite-but-invertible systems. The solution is rejected when the
/// relative residual exceeds `1e-8`.
pub fn solve_shifted_symmetric(a: &DMatrix<f64>, shift: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare { rows: n, cols: a.ncols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += shift;
    }
    let x = match m.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => m.clone().lu().solve(b).ok_or(Error::Singular)?,
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    let residual = (&m * &x - b).norm();
    if residual > 1e-8 * b.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Minimum-norm least-squares solution of `A x ≈ b` via SVD.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-13 * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, eps).map_err(|_| Error::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_unitary() {
        assert!(ComplexMatrix::identity(4).unitarity_deviation() < 1e-15);
    }

    #[test]
    fn adjoint_of_product() {
        let a = ComplexMatrix::from_rows(&[
            vec![Complex64::new(1.0, 2.0), Complex64::new(0.5, -1.0)],
            vec![Complex64::new(0.0, 1.0), Complex64::new(3.0, 0.0)],
        ]);
        let b = ComplexMatrix::from_rows(&[
            vec![Complex64::new(-1.0, 0.0), Complex64::new(2.0, 2.0)],
            vec![Complex64::new(0.25, 0.0), Complex64::new(0.0, -1.0)],
        ]);
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        assert!(lhs.approx_eq(&rhs, 1e-14));
    }

    #[test]
    fn mismatched_product_is_rejected() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.checked_mul(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn shifted_solve_identity() {
        let k = DMatrix::<f64>::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let beta = solve_shifted_symmetric(&k, 1.0, &y).unwrap();
        assert!((beta - &y / 2.0).norm() < 1e-14);
    }

    #[test]
    fn singular_system_is_reported() {
        let k = DMatrix::<f64>::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![1.0, -1.0]);
        assert!(matches!(solve_shifted_symmetric(&k, 0.0, &y), Err(Error::Singular)));
    }
}
