use num_complex::Complex64;

use super::{ComplexMatrix, LinalgError};

/// Relative pivot threshold below which `solve` refuses to substitute.
const NEAR_SINGULAR_RELATIVE: f64 = 1e-12;

/// Packed partial-pivoted LU factorization: P*M = L*U with unit-diagonal L
/// stored below the diagonal of `lu` and U on and above it.
#[derive(Debug, Clone)]
pub struct LUFactorization {
    lu: ComplexMatrix,
    pivot: Vec<usize>,
    sign: i32,
}

impl LUFactorization {
    pub fn lu(&self) -> &ComplexMatrix {
        &self.lu
    }

    /// Row permutation: `pivot[i]` is the input row placed at position i.
    pub fn pivot(&self) -> &[usize] {
        &self.pivot
    }

    /// Permutation parity, +1 or -1.
    pub fn sign(&self) -> i32 {
        self.sign
    }

    pub fn dimension(&self) -> usize {
        self.lu.rows()
    }

    pub fn det(&self) -> Complex64 {
        let mut d = Complex64::new(self.sign as f64, 0.0);
        for i in 0..self.dimension() {
            d *= self.lu[(i, i)];
        }
        d
    }

    pub fn smallest_pivot_magnitude(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.lu[(i, i)].norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn largest_pivot_magnitude(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.lu[(i, i)].norm())
            .fold(0.0, f64::max)
    }

    /// A zero pivot marks an exactly singular input; it is recorded here
    /// rather than raised during factorization.
    pub fn is_singular(&self) -> bool {
        self.smallest_pivot_magnitude() == 0.0
    }

    fn check_conditioning(&self) -> Result<(), LinalgError> {
        let smallest = self.smallest_pivot_magnitude();
        if smallest < NEAR_SINGULAR_RELATIVE * self.largest_pivot_magnitude() {
            return Err(LinalgError::NearSingular { pivot: smallest });
        }
        Ok(())
    }

    /// Solves M*X = B for each column of B using the stored factors.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let n = self.dimension();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                left_rows: n,
                left_cols: n,
                right_rows: b.rows(),
                right_cols: b.cols(),
            });
        }
        self.check_conditioning()?;

        let ncols = b.cols();
        let mut x = ComplexMatrix::zeros(n, ncols);
        // apply the row permutation to b
        for i in 0..n {
            for j in 0..ncols {
                x[(i, j)] = b[(self.pivot[i], j)];
            }
        }
        // forward substitution with unit-diagonal L
        for i in 1..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                for j in 0..ncols {
                    let t = l * x[(k, j)];
                    x[(i, j)] -= t;
                }
            }
        }
        // back substitution with U
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                for j in 0..ncols {
                    let t = u * x[(k, j)];
                    x[(i, j)] -= t;
                }
            }
            let d = self.lu[(i, i)];
            for j in 0..ncols {
                x[(i, j)] /= d;
            }
        }
        Ok(x)
    }
}

/// Partial-pivoted LU factorization. A singular matrix factorizes with a zero
/// pivot and is flagged through [`LUFactorization::is_singular`], not raised.
pub fn lu_decompose(m: &ComplexMatrix) -> Result<LUFactorization, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NonSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let mut lu = m.clone();
    let mut pivot: Vec<usize> = (0..n).collect();
    let mut sign = 1i32;

    for k in 0..n {
        // pivot on the largest remaining magnitude in column k
        let mut best = k;
        let mut best_mag = lu[(k, k)].norm_sqr();
        for i in k + 1..n {
            let mag = lu[(i, k)].norm_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(best, j)];
                lu[(best, j)] = t;
            }
            pivot.swap(k, best);
            sign = -sign;
        }
        let p = lu[(k, k)];
        if p == Complex64::new(0.0, 0.0) {
            // exactly singular: leave the zero pivot in place
            continue;
        }
        for i in k + 1..n {
            let factor = lu[(i, k)] / p;
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let t = factor * lu[(k, j)];
                lu[(i, j)] -= t;
            }
        }
    }

    Ok(LUFactorization { lu, pivot, sign })
}

/// Solves m*x = b, refusing near-singular systems (smallest pivot magnitude
/// below 1e-12 of the largest).
pub fn solve(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    lu_decompose(m)?.solve(b)
}
