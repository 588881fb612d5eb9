//! Closed-form expectations: digamma at integer arguments, the expected
//! logarithmic energy of the ensemble on both sphere models, its per-term
//! decomposition, the large-N expansion, and the minimal-energy reference
//! line with its constant bounds.

use crate::pevp::EnsembleParams;

/// Euler-Mascheroni constant, 16 significant digits.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Gamma(1/3), 17 significant digits; enters the upper constant bound.
const GAMMA_ONE_THIRD: f64 = 2.6789385347077476;

/// kappa = 1/2 - ln 2, the coefficient of the leading N^2/2 energy term.
pub fn kappa() -> f64 {
    0.5 - std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("digamma is evaluated at positive integers only, got {0}")]
    NonPositiveArgument(i64),
    #[error("{d} does not divide {n}")]
    NotADivisor { d: u64, n: u64 },
}

/// The fixed constants of the energy expansion and the bracketing values
/// for the unknown linear-term constant of the true minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub kappa: f64,
    pub gamma_euler: f64,
    pub c_low: f64,
    pub c_high: f64,
}

impl TheoryConstants {
    pub fn new() -> Self {
        let ln2 = std::f64::consts::LN_2;
        let c_low = ln2 / 2.0 - 3.0 / 8.0;
        let c_high = ln2
            + 0.25 * (2.0f64 / 3.0).ln()
            + 1.5 * (std::f64::consts::PI.sqrt() / GAMMA_ONE_THIRD).ln();
        TheoryConstants {
            kappa: kappa(),
            gamma_euler: EULER_GAMMA,
            c_low,
            c_high,
        }
    }
}

impl Default for TheoryConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Expected energies for one (d, r) pair on both sphere models, along with
/// the three expectation terms the Riemann value decomposes into.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryPrediction {
    pub params: EnsembleParams,
    pub riemann_value: f64,
    pub s2_value: f64,
    pub term_first: f64,
    pub term_second: f64,
    pub term_third: f64,
}

/// Digamma at a positive integer: psi(n) = -gamma + H_{n-1}, with the
/// harmonic number accumulated smallest term first.
pub fn digamma_int(n: u64) -> Result<f64, TheoryError> {
    if n < 1 {
        return Err(TheoryError::NonPositiveArgument(n as i64));
    }
    let mut harmonic = 0.0f64;
    for j in (1..n).rev() {
        harmonic += 1.0 / j as f64;
    }
    Ok(harmonic - EULER_GAMMA)
}

/// Natural log of Gamma(n) at a positive integer, i.e. ln (n-1)!.
pub fn ln_gamma_int(n: u64) -> Result<f64, TheoryError> {
    if n < 1 {
        return Err(TheoryError::NonPositiveArgument(n as i64));
    }
    let mut acc = 0.0f64;
    for k in 2..n {
        acc += (k as f64).ln();
    }
    Ok(acc)
}

/// The three expectation terms of the Riemann-sphere energy decomposition:
/// the chordal-lift sum, the log-derivative sum, and the leading-coefficient
/// log-determinant. They recombine as
/// (N-1)*t1 - t2/2 + (N/2)*t3 = riemann_value.
pub fn expected_three_terms(params: EnsembleParams) -> (f64, f64, f64) {
    let n = params.n() as f64;
    let d = params.d() as f64;
    let r = params.r();
    let rf = r as f64;
    let psi2 = digamma_int(2).expect("2 >= 1");
    let psi_r1 = digamma_int(r + 1).expect("r + 1 >= 1");
    let psi_r2 = digamma_int(r + 2).expect("r + 2 >= 1");
    let first = n / 2.0;
    let second = (n / 2.0) * (n + d.ln() + (rf + 1.0) * psi_r2 - rf - psi2 - 2.0);
    let third = rf * (psi_r1 - 1.0) / 2.0;
    (first, second, third)
}

/// Expected logarithmic energy of the ensemble for one (d, r) pair on the
/// Riemann sphere and on the unit sphere, with its three-term breakdown.
pub fn expected_energy(params: EnsembleParams) -> TheoryPrediction {
    let n = params.n() as f64;
    let d = params.d() as f64;
    let r = params.r();
    let psi2 = digamma_int(2).expect("2 >= 1");
    let psi_r1 = digamma_int(r + 1).expect("r + 1 >= 1");
    let riemann_value =
        n * n / 4.0 - n * d.ln() / 4.0 - (n / 4.0) * (1.0 + psi_r1 - psi2);
    let s2_value = riemann_value - n * (n - 1.0) / 2.0 * std::f64::consts::LN_2;
    let (term_first, term_second, term_third) = expected_three_terms(params);
    TheoryPrediction {
        params,
        riemann_value,
        s2_value,
        term_first,
        term_second,
        term_third,
    }
}

/// Large-N expansion of the unit-sphere energy at fixed d:
/// (kappa/2)N^2 - N ln N/4 + N(ln2/2 - gamma/4) - d/8 + d^2/(48N).
pub fn asymptotic_energy_s2(n: u64, d: u64) -> Result<f64, TheoryError> {
    if d == 0 || n % d != 0 {
        return Err(TheoryError::NotADivisor { d, n });
    }
    let nf = n as f64;
    let df = d as f64;
    let ln2 = std::f64::consts::LN_2;
    Ok(kappa() / 2.0 * nf * nf - nf * nf.ln() / 4.0
        + nf * (ln2 / 2.0 - EULER_GAMMA / 4.0)
        - df / 8.0
        + df * df / (48.0 * nf))
}

/// Reference line for the minimal energy: (kappa/2)N^2 - N ln N / 4 + C N,
/// with the o(N) term omitted. C is not known; see TheoryConstants for the
/// published bracket.
pub fn min_energy_reference(n: u64, c: f64) -> f64 {
    let nf = n as f64;
    kappa() / 2.0 * nf * nf - nf * nf.ln() / 4.0 + c * nf
}
