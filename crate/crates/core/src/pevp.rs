//! The random matrix-polynomial ensemble: degree-d polynomials with r x r
//! complex Gaussian coefficient blocks scaled by square-root binomials, and
//! root extraction through block-companion linearization.

use num_complex::Complex64;

use crate::linalg::{self, ComplexMatrix, LinalgError};
use crate::sampling::{RngStream, SamplingError};
use crate::theory::ln_gamma_int;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PevpError {
    #[error("d and r must be positive, got d={d}, r={r}")]
    InvalidParams { d: u64, r: u64 },
    #[error("binomial index {i} out of range 0..={d}")]
    BinomialIndexOutOfRange { d: u64, i: u64 },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One instance family of the ensemble: degree d, block size r, and the
/// generic root count N = d*r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleParams {
    d: u64,
    r: u64,
}

impl EnsembleParams {
    pub fn new(d: u64, r: u64) -> Result<Self, PevpError> {
        if d == 0 || r == 0 {
            return Err(PevpError::InvalidParams { d, r });
        }
        Ok(EnsembleParams { d, r })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn n(&self) -> u64 {
        self.d * self.r
    }
}

/// A sampled matrix polynomial: coefficient i is an r x r standard complex
/// Gaussian block scaled entrywise by sqrt(binom(d, i)).
#[derive(Debug, Clone)]
pub struct MatrixPolynomial {
    params: EnsembleParams,
    coeffs: Vec<ComplexMatrix>,
}

impl MatrixPolynomial {
    pub fn params(&self) -> EnsembleParams {
        self.params
    }

    /// The d+1 scaled coefficient blocks, degree order.
    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    /// The unscaled leading block: binom(d, d) = 1, so this is the raw
    /// Gaussian draw.
    pub fn leading(&self) -> &ComplexMatrix {
        &self.coeffs[self.params.d as usize]
    }

    /// Evaluates det(sum coeffs[i] z^i); the scalar polynomial whose zeros
    /// are the ensemble points.
    pub fn det_at(&self, z: Complex64) -> Result<Complex64, LinalgError> {
        let r = self.params.r as usize;
        let mut acc = ComplexMatrix::zeros(r, r);
        let mut power = Complex64::new(1.0, 0.0);
        for coeff in &self.coeffs {
            for i in 0..r {
                for j in 0..r {
                    acc[(i, j)] += coeff[(i, j)] * power;
                }
            }
            power *= z;
        }
        linalg::det(&acc)
    }
}

/// The extracted roots of one sampled polynomial. A trial is degenerate when
/// the leading block trips the near-singular guard or the QR iteration does
/// not converge; degenerate trials carry no roots and are counted by the
/// caller, never resampled.
#[derive(Debug, Clone)]
pub struct RootSet {
    params: EnsembleParams,
    roots: Vec<Complex64>,
    leading_det: Complex64,
    degenerate: bool,
}

impl RootSet {
    /// Assembles a root set from known roots, bypassing sampling; test-only.
    #[cfg(any(test, feature = "test-fixtures"))]
    pub fn synthetic_for_tests(
        params: EnsembleParams,
        roots: Vec<Complex64>,
        leading_det: Complex64,
    ) -> Self {
        RootSet {
            params,
            roots,
            leading_det,
            degenerate: false,
        }
    }

    pub fn params(&self) -> EnsembleParams {
        self.params
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn leading_det(&self) -> Complex64 {
        self.leading_det
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

/// sqrt(binom(d, i)); exact integer arithmetic up to d = 50, log-gamma
/// beyond that to avoid overflow.
pub fn binomial_sqrt(d: u64, i: u64) -> Result<f64, PevpError> {
    if i > d {
        return Err(PevpError::BinomialIndexOutOfRange { d, i });
    }
    if d <= 50 {
        let k = i.min(d - i) as u128;
        let mut num: u128 = 1;
        for j in 1..=k {
            // stays integral when multiplied before dividing in order
            num = num * (d as u128 - k + j) / j;
        }
        Ok((num as f64).sqrt())
    } else {
        let ln_binom = ln_gamma_int(d + 1).expect("positive")
            - ln_gamma_int(i + 1).expect("positive")
            - ln_gamma_int(d - i + 1).expect("positive");
        Ok((0.5 * ln_binom).exp())
    }
}

/// Draws the d+1 coefficient blocks in degree order, each entry i.i.d.
/// standard complex Gaussian, scaled by sqrt(binom(d, i)).
pub fn build_matrix_polynomial(
    stream: &mut RngStream,
    params: EnsembleParams,
) -> Result<MatrixPolynomial, PevpError> {
    let r = params.r as usize;
    let mut coeffs = Vec::with_capacity(params.d as usize + 1);
    for i in 0..=params.d {
        let scale = binomial_sqrt(params.d, i)?;
        let g = stream.sample_matrix(r, 1.0)?;
        coeffs.push(g.scale(Complex64::new(scale, 0.0)));
    }
    Ok(MatrixPolynomial { params, coeffs })
}

/// Block-companion linearization with the leading block inverted into the
/// lower coefficients: identity blocks along the block superdiagonal and
/// the block row (-A_d^{-1}A_0, ..., -A_d^{-1}A_{d-1}) at the bottom. Its
/// spectrum is exactly the root set of det(sum A_i z^i).
pub fn companion_linearize(p: &MatrixPolynomial) -> Result<ComplexMatrix, PevpError> {
    let d = p.params.d as usize;
    let r = p.params.r as usize;
    let n = d * r;

    // solve A_d X_i = A_i for all lower coefficients at once
    let mut rhs = ComplexMatrix::zeros(r, d * r);
    for (i, coeff) in p.coeffs.iter().take(d).enumerate() {
        for a in 0..r {
            for b in 0..r {
                rhs[(a, i * r + b)] = coeff[(a, b)];
            }
        }
    }
    let solved = linalg::solve(p.leading(), &rhs)?;

    let mut c = ComplexMatrix::zeros(n, n);
    for block in 0..d.saturating_sub(1) {
        for k in 0..r {
            c[(block * r + k, (block + 1) * r + k)] = Complex64::new(1.0, 0.0);
        }
    }
    for i in 0..d {
        for a in 0..r {
            for b in 0..r {
                c[((d - 1) * r + a, i * r + b)] = -solved[(a, i * r + b)];
            }
        }
    }
    Ok(c)
}

/// Samples one polynomial and extracts its N roots through the companion
/// eigensolve. Near-singular leading blocks and eigensolver failures come
/// back as degenerate root sets.
pub fn pevp_roots(stream: &mut RngStream, params: EnsembleParams) -> Result<RootSet, PevpError> {
    let p = build_matrix_polynomial(stream, params)?;
    let leading_det = linalg::det(p.leading())?;
    let companion = match companion_linearize(&p) {
        Ok(c) => c,
        Err(PevpError::Linalg(LinalgError::NearSingular { .. })) => {
            return Ok(RootSet {
                params,
                roots: Vec::new(),
                leading_det,
                degenerate: true,
            });
        }
        Err(e) => return Err(e),
    };
    match linalg::eigenvalues(&companion) {
        Ok(spectrum) => Ok(RootSet {
            params,
            roots: spectrum.eigenvalues().to_vec(),
            leading_det,
            degenerate: false,
        }),
        Err(LinalgError::EigenFailure { .. }) => Ok(RootSet {
            params,
            roots: Vec::new(),
            leading_det,
            degenerate: true,
        }),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_multiset_distance;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn params_require_positive_factors() {
        assert!(EnsembleParams::new(0, 3).is_err());
        assert!(EnsembleParams::new(3, 0).is_err());
        let p = EnsembleParams::new(3, 4).unwrap();
        assert_eq!(p.n(), 12);
    }

    #[test]
    fn binomial_sqrt_edges() {
        assert_eq!(binomial_sqrt(7, 0).unwrap(), 1.0);
        assert_eq!(binomial_sqrt(7, 7).unwrap(), 1.0);
        assert!((binomial_sqrt(4, 2).unwrap() - 6.0f64.sqrt()).abs() < 1e-15);
        assert!(binomial_sqrt(4, 5).is_err());
    }

    #[test]
    fn binomial_sqrt_large_matches_log_gamma_form() {
        let ours = binomial_sqrt(60, 30).unwrap();
        let via_gamma = (0.5
            * (ln_gamma_int(61).unwrap() - 2.0 * ln_gamma_int(31).unwrap()))
        .exp();
        assert!((ours - via_gamma).abs() <= 1e-12 * via_gamma);
    }

    #[test]
    fn degree_one_coefficients_are_unscaled() {
        let params = EnsembleParams::new(1, 3).unwrap();
        let mut s = RngStream::substream(5, 0);
        let p = build_matrix_polynomial(&mut s, params).unwrap();
        let mut replay = RngStream::substream(5, 0);
        let g0 = replay.sample_matrix(3, 1.0).unwrap();
        let g1 = replay.sample_matrix(3, 1.0).unwrap();
        assert_eq!(p.coeffs()[0].entries(), g0.entries());
        assert_eq!(p.coeffs()[1].entries(), g1.entries());
    }

    #[test]
    fn coefficient_variance_follows_binomial() {
        let params = EnsembleParams::new(6, 1).unwrap();
        let trials = 100_000usize;
        let i = 2usize; // binom(6, 2) = 15
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut s = RngStream::substream(17, 0);
        for _ in 0..trials {
            let p = build_matrix_polynomial(&mut s, params).unwrap();
            let v = p.coeffs()[i][(0, 0)].norm_sqr();
            sum += v;
            sum_sq += v * v;
        }
        let nf = trials as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0);
        let stderr = (var / nf).sqrt();
        assert!(
            (mean - 15.0).abs() < 4.0 * stderr,
            "entry variance {mean} vs 15 (stderr {stderr})"
        );
    }

    #[test]
    fn scalar_monic_quadratic_roots() {
        // r = 1, p(z) = 1 + 0*z + z^2 linearizes to eigenvalues ±i
        let params = EnsembleParams::new(2, 1).unwrap();
        let coeffs = vec![
            ComplexMatrix::new(1, 1, vec![c(1.0, 0.0)]).unwrap(),
            ComplexMatrix::new(1, 1, vec![c(0.0, 0.0)]).unwrap(),
            ComplexMatrix::new(1, 1, vec![c(1.0, 0.0)]).unwrap(),
        ];
        let p = MatrixPolynomial { params, coeffs };
        let comp = companion_linearize(&p).unwrap();
        let spec = linalg::eigenvalues(&comp).unwrap();
        assert!(
            max_multiset_distance(spec.eigenvalues(), &[c(0.0, 1.0), c(0.0, -1.0)]) < 1e-12
        );
    }

    #[test]
    fn degree_one_companion_is_pencil_solution() {
        let params = EnsembleParams::new(1, 5).unwrap();
        let mut s = RngStream::substream(23, 0);
        let rs = pevp_roots(&mut s, params).unwrap();
        assert!(!rs.degenerate());
        assert_eq!(rs.roots().len(), 5);

        // same draw replayed: eigenvalues of -G0 G1^{-1} (similar matrix)
        let mut replay = RngStream::substream(23, 0);
        let g0 = replay.sample_matrix(5, 1.0).unwrap();
        let g1 = replay.sample_matrix(5, 1.0).unwrap();
        let g1_inv = linalg::solve(&g1, &ComplexMatrix::identity(5)).unwrap();
        let target = g0.mul(&g1_inv).unwrap().scale(c(-1.0, 0.0));
        let spec = linalg::eigenvalues(&target).unwrap();
        assert!(max_multiset_distance(rs.roots(), spec.eigenvalues()) < 1e-8);
    }

    /// Durand-Kerner iteration on a scalar polynomial, as an independent
    /// root-finding oracle for the r = 1 path.
    fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = coeffs.len() - 1;
        let lead = coeffs[n];
        let monic: Vec<Complex64> = coeffs.iter().map(|&a| a / lead).collect();
        let eval = |z: Complex64| {
            let mut acc = c(0.0, 0.0);
            for &a in monic.iter().rev() {
                acc = acc * z + a;
            }
            acc
        };
        let radius = 1.0
            + monic
                .iter()
                .take(n)
                .map(|a| a.norm())
                .fold(0.0f64, f64::max);
        let mut roots: Vec<Complex64> = (0..n)
            .map(|k| {
                Complex64::from_polar(
                    radius * 0.7,
                    2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4,
                )
            })
            .collect();
        for _ in 0..500 {
            let mut moved = 0.0f64;
            for k in 0..n {
                let mut denom = c(1.0, 0.0);
                for j in 0..n {
                    if j != k {
                        denom *= roots[k] - roots[j];
                    }
                }
                let delta = eval(roots[k]) / denom;
                roots[k] -= delta;
                moved = moved.max(delta.norm());
            }
            if moved < 1e-13 {
                break;
            }
        }
        roots
    }

    #[test]
    fn scalar_degree_twelve_matches_durand_kerner() {
        let params = EnsembleParams::new(12, 1).unwrap();
        let mut s = RngStream::substream(23, 1);
        let rs = pevp_roots(&mut s, params).unwrap();
        assert_eq!(rs.roots().len(), 12);

        let mut replay = RngStream::substream(23, 1);
        let p = build_matrix_polynomial(&mut replay, params).unwrap();
        let scalar: Vec<Complex64> = p.coeffs().iter().map(|m| m[(0, 0)]).collect();
        let oracle = durand_kerner(&scalar);
        assert!(
            max_multiset_distance(rs.roots(), &oracle) < 1e-7,
            "mismatch {} against the iteration oracle",
            max_multiset_distance(rs.roots(), &oracle)
        );
    }

    #[test]
    fn block_companion_residual_oracle() {
        let params = EnsembleParams::new(2, 2).unwrap();
        let mut s = RngStream::substream(23, 2);
        let p = build_matrix_polynomial(&mut s, params).unwrap();
        let comp = companion_linearize(&p).unwrap();
        let spec = linalg::eigenvalues(&comp).unwrap();
        for &lambda in spec.eigenvalues() {
            let residual = p.det_at(lambda).unwrap().norm();
            let scale: f64 = p
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, m)| m.frobenius_norm() * lambda.norm().max(1.0).powi(i as i32))
                .product();
            assert!(
                residual <= 1e-6 * scale,
                "residual {residual:e} vs scale {scale:e}"
            );
        }
    }

    #[test]
    fn root_count_and_leading_det_contract() {
        let mut s = RngStream::substream(23, 3);
        for (d, r) in [(1u64, 6u64), (2, 3), (3, 2), (6, 1)] {
            let params = EnsembleParams::new(d, r).unwrap();
            let rs = pevp_roots(&mut s, params).unwrap();
            assert!(!rs.degenerate());
            assert_eq!(rs.roots().len() as u64, params.n());
            assert!(rs.leading_det().norm() > 0.0);
        }
    }

    #[test]
    fn degenerate_trials_are_rare_at_desk_scale() {
        let params = EnsembleParams::new(2, 8).unwrap();
        let mut degenerate = 0u64;
        for t in 0..10_000u64 {
            let mut s = RngStream::substream(29, t);
            if pevp_roots(&mut s, params).unwrap().degenerate() {
                degenerate += 1;
            }
        }
        assert_eq!(degenerate, 0, "expected no degenerate trials at r = 8");
    }
}
