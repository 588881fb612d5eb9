//! Dense complex linear algebra: LU factorization, determinants, linear
//! solves and a Hessenberg + shifted-QR eigensolver for general complex
//! matrices.

mod eigen;
mod lu;

pub use eigen::{eigenvalues, max_multiset_distance, Spectrum};
pub use lu::{lu_decompose, solve, LUFactorization};

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("entry storage length {len} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular or near-singular (pivot magnitude {pivot:e})")]
    NearSingular { pivot: f64 },
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("QR iteration failed to converge after {iterations} iterations")]
    EigenFailure { iterations: usize },
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                rows,
                cols,
                len: entries.len(),
            });
        }
        for (k, e) in entries.iter().enumerate() {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Internal constructor for entries already known to be finite.
    pub(crate) fn from_parts(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_parts(rows, cols, entries)
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

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: rhs.rows,
                right_cols: rhs.cols,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ComplexMatrix::from_parts(self.rows, self.cols, entries))
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        let entries = self.entries.iter().map(|e| e * factor).collect();
        ComplexMatrix::from_parts(self.rows, self.cols, entries)
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Determinant via partial-pivoted LU: product of U's diagonal times the
/// permutation sign. Exact zero is a legitimate result.
pub fn det(m: &ComplexMatrix) -> Result<Complex64, LinalgError> {
    let fac = lu_decompose(m)?;
    Ok(fac.det())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn new_rejects_shape_mismatch() {
        let err = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0); 3]).unwrap_err();
        assert!(matches!(err, LinalgError::ShapeMismatch { .. }));
    }

    #[test]
    fn new_rejects_non_finite_entries() {
        let err =
            ComplexMatrix::new(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(
            err,
            LinalgError::NonFinite { row: 0, col: 1 }
        );
        let err = ComplexMatrix::new(2, 1, vec![c(1.0, 0.0), c(0.0, f64::INFINITY)]).unwrap_err();
        assert_eq!(err, LinalgError::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn mul_against_hand_computed_product() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let b = ComplexMatrix::new(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)])
            .unwrap();
        let p = a.mul(&b).unwrap();
        // row 0: [i*1, 1*1 + i*(-i)] = [i, 2]
        assert_eq!(p[(0, 0)], c(0.0, 1.0));
        assert_eq!(p[(0, 1)], c(2.0, 0.0));
        // row 1: [0, 2]
        assert_eq!(p[(1, 0)], c(0.0, 0.0));
        assert_eq!(p[(1, 1)], c(2.0, 0.0));
    }
}
