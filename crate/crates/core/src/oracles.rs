//! Independent verification of every intermediate identity behind the main
//! energy formula: Monte Carlo estimates of the random-matrix expectations,
//! the root-density laws, and a deterministic quadrature of the Kac-Rice
//! integral. Each estimate carries its own standard error and z-score
//! against the closed form it checks.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{self, LinalgError};
use crate::pevp::{pevp_roots, EnsembleParams, PevpError};
use crate::quadrature::{self, QuadratureError};
use crate::sampling::{SamplingError, TrialStreams};
use crate::sphere_energy::{
    energy_three_term, log_energy, project_roots, riemann_energy_to_s2, SphereError,
};
use crate::theory::{digamma_int, expected_energy, expected_three_terms, ln_gamma_int};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("estimator needs at least {required} trials, got {got}")]
    TooFewTrials { required: u64, got: u64 },
    #[error("only {hits} hits inside the disk; at least {required} needed for a density estimate")]
    InsufficientHits { hits: u64, required: u64 },
    #[error(transparent)]
    Pevp(#[from] PevpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A Monte Carlo estimate against a closed-form target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over sqrt(trials).
    pub stderr: f64,
    pub trials: u64,
    pub target: f64,
    /// (mean - target) / stderr.
    pub z_score: f64,
}

impl MCEstimate {
    fn from_samples(samples: &[f64], target: f64) -> Self {
        let trials = samples.len() as u64;
        let nf = trials as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = if trials >= 2 {
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let stderr = (var / nf).sqrt();
        MCEstimate {
            mean,
            stderr,
            trials,
            target,
            z_score: (mean - target) / stderr,
        }
    }

    pub fn passes(&self, z_limit: f64) -> bool {
        self.z_score.abs() <= z_limit
    }
}

/// An estimate plus the count of trials excluded from it (determinant
/// underflow or degenerate root extraction, depending on the estimator).
#[derive(Debug, Clone, PartialEq)]
pub struct MCRun {
    pub estimate: MCEstimate,
    pub excluded: u64,
}

/// Tail diagnostics for heavy-tailed integrands, reported alongside the
/// standard error so CLT validity can be judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDiagnostics {
    pub max_abs_sample: f64,
    pub excess_kurtosis: f64,
}

fn require_trials(required: u64, got: u64) -> Result<(), OracleError> {
    if got < required {
        return Err(OracleError::TooFewTrials { required, got });
    }
    Ok(())
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// E ln|det A| for a standard complex Gaussian r x r matrix:
/// r (psi(r+1) - 1)/2. Samples with |det| below 1e-300 are excluded and
/// counted rather than poisoning the mean.
pub fn mc_log_det(r: u64, trials: u64, streams: &TrialStreams) -> Result<MCRun, OracleError> {
    require_trials(100, trials)?;
    let target = r as f64 * (digamma_int(r + 1).expect("r+1 >= 1") - 1.0) / 2.0;
    let dets = sample_abs_dets(r, 1.0, trials, streams)?;
    let mut samples = Vec::with_capacity(trials as usize);
    let mut excluded = 0u64;
    for d in dets {
        if d < 1e-300 {
            excluded += 1;
        } else {
            samples.push(d.ln());
        }
    }
    Ok(MCRun {
        estimate: MCEstimate::from_samples(&samples, target),
        excluded,
    })
}

/// E |det A|^2 = r!.
pub fn mc_det_sq(r: u64, trials: u64, streams: &TrialStreams) -> Result<MCRun, OracleError> {
    require_trials(10_000, trials)?;
    let target = factorial(r);
    let dets = sample_abs_dets(r, 1.0, trials, streams)?;
    let samples: Vec<f64> = dets.iter().map(|d| d * d).collect();
    Ok(MCRun {
        estimate: MCEstimate::from_samples(&samples, target),
        excluded: 0,
    })
}

/// E |det A|^2 ln|det A| = (r!/2)((r+1) psi(r+2) - r - psi(2)). The
/// integrand is heavy-tailed, so tail diagnostics ride along.
pub fn mc_det_sq_log_det(
    r: u64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<(MCRun, TailDiagnostics), OracleError> {
    require_trials(10_000, trials)?;
    let psi2 = digamma_int(2).expect("2 >= 1");
    let psi_r2 = digamma_int(r + 2).expect("r+2 >= 1");
    let target = factorial(r) / 2.0 * ((r as f64 + 1.0) * psi_r2 - r as f64 - psi2);
    let dets = sample_abs_dets(r, 1.0, trials, streams)?;
    let mut samples = Vec::with_capacity(trials as usize);
    let mut excluded = 0u64;
    for d in dets {
        if d < 1e-300 {
            excluded += 1;
        } else {
            samples.push(d * d * d.ln());
        }
    }
    let estimate = MCEstimate::from_samples(&samples, target);
    let nf = samples.len() as f64;
    let var = samples
        .iter()
        .map(|v| (v - estimate.mean).powi(2))
        .sum::<f64>()
        / nf;
    let m4 = samples
        .iter()
        .map(|v| (v - estimate.mean).powi(4))
        .sum::<f64>()
        / nf;
    let diagnostics = TailDiagnostics {
        max_abs_sample: samples.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        excess_kurtosis: if var > 0.0 { m4 / (var * var) - 3.0 } else { 0.0 },
    };
    Ok((
        MCRun {
            estimate,
            excluded,
        },
        diagnostics,
    ))
}

fn sample_abs_dets(
    r: u64,
    sigma2: f64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<Vec<f64>, OracleError> {
    (0..trials as usize)
        .into_par_iter()
        .with_min_len(256)
        .map(|t| {
            let mut s = streams.stream(t as u64);
            let g = s.sample_matrix(r as usize, sigma2)?;
            Ok(linalg::det(&g)?.norm())
        })
        .collect()
}

/// The density-at-zero experiment: raw disk-counting estimators at radius
/// eps and eps/2, plus their Richardson extrapolation (the smoothing bias is
/// quadratic in the radius).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRun {
    pub raw: MCEstimate,
    pub half_radius: MCEstimate,
    pub richardson: f64,
    pub hits: u64,
    pub hits_half: u64,
}

/// Density of det(A) at 0 for N_C(0, sigma2) entries:
/// 1/(pi sigma^{2r} Gamma(r)), estimated by P(|det| < eps)/(pi eps^2).
/// The raw estimator averages the true density over the eps-disk, so its
/// bias is O(eps^2); the (eps, eps/2) pair extrapolates it away.
pub fn mc_density_at_zero(
    r: u64,
    sigma2: f64,
    eps: f64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<DensityRun, OracleError> {
    require_trials(10_000, trials)?;
    let target = 1.0
        / (std::f64::consts::PI
            * sigma2.powi(r as i32)
            * ln_gamma_int(r).expect("r >= 1").exp());
    let flags: Vec<u8> = (0..trials as usize)
        .into_par_iter()
        .with_min_len(256)
        .map(|t| {
            let mut s = streams.stream(t as u64);
            let g = s.sample_matrix(r as usize, sigma2)?;
            let d = linalg::det(&g)?.norm();
            Ok(if d < eps / 2.0 {
                2u8
            } else if d < eps {
                1u8
            } else {
                0u8
            })
        })
        .collect::<Result<_, OracleError>>()?;

    let hits = flags.iter().filter(|&&f| f >= 1).count() as u64;
    let hits_half = flags.iter().filter(|&&f| f == 2).count() as u64;
    if hits < 50 {
        return Err(OracleError::InsufficientHits {
            hits,
            required: 50,
        });
    }
    let area = std::f64::consts::PI * eps * eps;
    let raw = indicator_estimate(hits, trials, area, target);
    let half_radius = indicator_estimate(hits_half, trials, area / 4.0, target);
    let richardson = (4.0 * half_radius.mean - raw.mean) / 3.0;
    Ok(DensityRun {
        raw,
        half_radius,
        richardson,
        hits,
        hits_half,
    })
}

fn indicator_estimate(hits: u64, trials: u64, area: f64, target: f64) -> MCEstimate {
    let nf = trials as f64;
    let p = hits as f64 / nf;
    let sample_var = p * (1.0 - p) * nf / (nf - 1.0);
    let stderr = (sample_var / nf).sqrt() / area;
    let mean = p / area;
    MCEstimate {
        mean,
        stderr,
        trials,
        target,
        z_score: (mean - target) / stderr,
    }
}

/// Radial law of the planar root distribution: the expected fraction of
/// roots within radius R of the origin is R^2/(1+R^2).
pub fn radial_cdf(radius: f64) -> f64 {
    radius * radius / (1.0 + radius * radius)
}

/// The radial-law experiment output: per-trial in-ball fractions reduced to
/// an estimate, plus every root modulus for distribution-level tests.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRun {
    pub estimate: MCEstimate,
    pub trials_degenerate: u64,
    pub moduli: Vec<f64>,
}

/// Mean fraction of roots inside radius `radius`, against the radial CDF.
pub fn mc_radial_law(
    params: EnsembleParams,
    radius: f64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<RadialRun, OracleError> {
    require_trials(1_000, trials)?;
    let target = radial_cdf(radius);
    let outcomes: Vec<Option<Vec<f64>>> = (0..trials as usize)
        .into_par_iter()
        .with_min_len(16)
        .map(|t| {
            let mut s = streams.stream(t as u64);
            let rs = pevp_roots(&mut s, params)?;
            if rs.degenerate() {
                return Ok(None);
            }
            Ok(Some(rs.roots().iter().map(|z| z.norm()).collect()))
        })
        .collect::<Result<_, OracleError>>()?;

    let mut fractions = Vec::with_capacity(trials as usize);
    let mut moduli = Vec::new();
    let mut trials_degenerate = 0u64;
    for outcome in outcomes {
        match outcome {
            None => trials_degenerate += 1,
            Some(mods) => {
                let inside = mods.iter().filter(|&&m| m <= radius).count();
                fractions.push(inside as f64 / mods.len() as f64);
                moduli.extend(mods);
            }
        }
    }
    Ok(RadialRun {
        estimate: MCEstimate::from_samples(&fractions, target),
        trials_degenerate,
        moduli,
    })
}

/// E sum_i ln sqrt(1+|z_i|^2) = N/2.
pub fn mc_first_term(
    params: EnsembleParams,
    trials: u64,
    streams: &TrialStreams,
) -> Result<MCRun, OracleError> {
    require_trials(1_000, trials)?;
    let target = params.n() as f64 / 2.0;
    let outcomes: Vec<Option<f64>> = (0..trials as usize)
        .into_par_iter()
        .with_min_len(16)
        .map(|t| {
            let mut s = streams.stream(t as u64);
            let rs = pevp_roots(&mut s, params)?;
            if rs.degenerate() {
                return Ok(None);
            }
            let lift = rs
                .roots()
                .iter()
                .map(|z| 0.5 * (1.0 + z.norm_sqr()).ln())
                .sum::<f64>();
            Ok(Some(lift))
        })
        .collect::<Result<_, OracleError>>()?;
    let samples: Vec<f64> = outcomes.iter().filter_map(|o| *o).collect();
    let excluded = trials - samples.len() as u64;
    Ok(MCRun {
        estimate: MCEstimate::from_samples(&samples, target),
        excluded,
    })
}

/// Deterministic verification of the hardest step: integrates the product of
/// the closed-form conditional expectation and the closed-form density of
/// the polynomial at zero over the plane (polar coordinates, radius folded
/// to [0, 1) by t = rho^2/(1+rho^2)), and returns the integral, which must
/// reproduce the second expectation term.
pub fn quad_kac_rice_second_term(params: EnsembleParams) -> Result<f64, OracleError> {
    let n = params.n() as f64;
    let d = params.d() as f64;
    let r = params.r();
    let rf = r as f64;
    let psi2 = digamma_int(2).expect("2 >= 1");
    let psi_r2 = digamma_int(r + 2).expect("r+2 >= 1");
    let ln_gamma_r = ln_gamma_int(r).expect("r >= 1");
    let ln_pi = std::f64::consts::PI.ln();

    // With s = |z|^2 = t/(1-t), each factor is assembled in log space from
    // its own closed form and only then combined; L = ln(1+s) = -ln(1-t).
    let integrand = move |t: f64| {
        let big_l = -(-t).ln_1p();
        // density of F(z) at 0: 1/(pi (1+s)^N Gamma(r))
        let ln_density = -ln_pi - n * big_l - ln_gamma_r;
        // conditional expectation E(|F'|^2 ln|F'| | F = 0):
        // amplitude N(1+s)^{N-2} Gamma(r)/2 times the digamma bracket
        let ln_cond_amplitude = (n / 2.0).ln() + (n - 2.0) * big_l + ln_gamma_r;
        let bracket = (rf + 1.0) * psi_r2 - rf - psi2 + d.ln() + (n - 2.0) * big_l;
        // area element: dz = pi ds = pi dt/(1-t)^2
        let ln_measure = ln_pi + 2.0 * big_l;
        bracket * (ln_cond_amplitude + ln_density + ln_measure).exp()
    };

    let value = quadrature::integrate(integrand, 0.0, 1.0, 1e-14, 1e-10, 40_000)?;
    Ok(value)
}

/// Per-trial outcome bookkeeping for the end-to-end energy experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRun {
    pub estimate: MCEstimate,
    /// Unit-sphere energy of every completed trial, in trial order.
    pub per_trial: Vec<f64>,
    pub trials_requested: u64,
    pub trials_degenerate: u64,
    pub trials_coincident: u64,
    /// Largest per-trial relative gap between the pairwise energy and the
    /// three-term decomposition transported to the unit sphere.
    pub decomposition_max_rel_err: f64,
}

enum TrialOutcome {
    Ok { s2_energy: f64, decomp_rel_err: f64 },
    Degenerate,
    Coincident,
}

/// The end-to-end experiment: sample a polynomial, solve for its roots,
/// project to the unit sphere, and measure the pairwise logarithmic energy.
/// Every completed trial also evaluates the three-term decomposition as a
/// consistency check. Target is the closed-form expectation.
pub fn mc_energy(
    params: EnsembleParams,
    trials: u64,
    streams: &TrialStreams,
) -> Result<EnergyRun, OracleError> {
    require_trials(100, trials)?;
    let target = expected_energy(params).s2_value;
    let outcomes: Vec<TrialOutcome> = (0..trials as usize)
        .into_par_iter()
        .with_min_len(8)
        .map(|t| {
            let mut s = streams.stream(t as u64);
            let rs = pevp_roots(&mut s, params)?;
            if rs.degenerate() {
                return Ok(TrialOutcome::Degenerate);
            }
            let riemann_cfg = project_roots(&rs)?;
            let s2_cfg = riemann_cfg.to_unit_sphere()?;
            let pairwise = match log_energy(&s2_cfg) {
                Ok(e) => e,
                Err(SphereError::CoincidentPoints { .. }) => {
                    return Ok(TrialOutcome::Coincident)
                }
                Err(e) => return Err(e.into()),
            };
            let decomposed = match energy_three_term(&rs) {
                Ok(e) => e,
                Err(SphereError::RepeatedRoots { .. }) => {
                    return Ok(TrialOutcome::Coincident)
                }
                Err(e) => return Err(e.into()),
            };
            let shifted = riemann_energy_to_s2(decomposed)?;
            let rel_err =
                (shifted.value - pairwise.value).abs() / (1.0 + pairwise.value.abs());
            Ok(TrialOutcome::Ok {
                s2_energy: pairwise.value,
                decomp_rel_err: rel_err,
            })
        })
        .collect::<Result<_, OracleError>>()?;

    let mut per_trial = Vec::with_capacity(trials as usize);
    let mut trials_degenerate = 0u64;
    let mut trials_coincident = 0u64;
    let mut decomposition_max_rel_err = 0.0f64;
    for outcome in outcomes {
        match outcome {
            TrialOutcome::Ok {
                s2_energy,
                decomp_rel_err,
            } => {
                per_trial.push(s2_energy);
                decomposition_max_rel_err = decomposition_max_rel_err.max(decomp_rel_err);
            }
            TrialOutcome::Degenerate => trials_degenerate += 1,
            TrialOutcome::Coincident => trials_coincident += 1,
        }
    }
    Ok(EnergyRun {
        estimate: MCEstimate::from_samples(&per_trial, target),
        per_trial,
        trials_requested: trials,
        trials_degenerate,
        trials_coincident,
        decomposition_max_rel_err,
    })
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        worst = worst.max((c - lo).abs()).max((hi - c).abs());
    }
    worst
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut worst = 0.0f64;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    worst
}

/// Large-sample 1% critical value for the one-sample KS statistic.
pub fn ks_critical_one_percent(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Large-sample 1% critical value for the two-sample KS statistic.
pub fn ks_two_sample_critical_one_percent(n: usize, m: usize) -> f64 {
    1.6276 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngStream;
    use crate::theory::EULER_GAMMA;

    #[test]
    fn log_det_scalar_case() {
        // r = 1: E ln|Z| = -gamma/2
        let streams = TrialStreams::with_base(101, 0);
        let run = mc_log_det(1, 100_000, &streams).unwrap();
        assert_eq!(run.excluded + run.estimate.trials, 100_000);
        assert!(
            (run.estimate.target - (-EULER_GAMMA / 2.0)).abs() < 1e-15,
            "target mismatch"
        );
        assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
    }

    #[test]
    fn log_det_r3_target_formula() {
        let streams = TrialStreams::with_base(101, 1 << 32);
        let run = mc_log_det(3, 100_000, &streams).unwrap();
        let expect = 1.5 * (5.0 / 6.0 - EULER_GAMMA);
        assert!((run.estimate.target - expect).abs() < 1e-14);
        assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
    }

    #[test]
    fn log_det_deterministic_rerun() {
        let streams = TrialStreams::with_base(77, 0);
        let a = mc_log_det(2, 20_000, &streams).unwrap();
        let b = mc_log_det(2, 20_000, &streams).unwrap();
        assert_eq!(a.estimate.mean.to_bits(), b.estimate.mean.to_bits());
    }

    #[test]
    fn too_few_trials_rejected() {
        let streams = TrialStreams::new(1);
        assert!(matches!(
            mc_log_det(1, 99, &streams),
            Err(OracleError::TooFewTrials { .. })
        ));
        assert!(matches!(
            mc_det_sq(1, 9_999, &streams),
            Err(OracleError::TooFewTrials { .. })
        ));
    }

    #[test]
    fn det_sq_small_r() {
        let streams = TrialStreams::with_base(103, 0);
        let r1 = mc_det_sq(1, 100_000, &streams).unwrap();
        assert_eq!(r1.estimate.target, 1.0);
        assert!(r1.estimate.passes(5.0), "z = {}", r1.estimate.z_score);
        let streams = TrialStreams::with_base(103, 1 << 32);
        let r2 = mc_det_sq(2, 100_000, &streams).unwrap();
        assert_eq!(r2.estimate.target, 2.0);
        assert!(r2.estimate.passes(5.0), "z = {}", r2.estimate.z_score);
    }

    #[test]
    fn det_sq_log_det_hand_algebra_r1() {
        // (1!/2)(2 psi(3) - 1 - psi(2)) = (1 - gamma)/2
        let streams = TrialStreams::with_base(105, 0);
        let (run, diag) = mc_det_sq_log_det(1, 50_000, &streams).unwrap();
        assert!((run.estimate.target - (1.0 - EULER_GAMMA) / 2.0).abs() < 1e-14);
        assert!(run.estimate.passes(5.0), "z = {}", run.estimate.z_score);
        assert!(diag.max_abs_sample.is_finite());
        assert!(diag.excess_kurtosis > 0.0, "integrand should be heavy-tailed");
    }

    #[test]
    fn det_sq_log_det_corollary_reduces_at_identity() {
        // with M = I the corollary is the plain lemma: same target formula
        let psi2 = digamma_int(2).unwrap();
        for r in 1..=4u64 {
            let psi_r2 = digamma_int(r + 2).unwrap();
            let lemma = factorial(r) / 2.0 * ((r as f64 + 1.0) * psi_r2 - r as f64 - psi2);
            let det_m: f64 = 1.0; // |det I|
            let corollary = det_m * det_m
                * (factorial(r) / 2.0)
                * ((r as f64 + 1.0) * psi_r2 - r as f64 - psi2 + (det_m * det_m).ln());
            assert_eq!(lemma, corollary);
        }
    }

    #[test]
    fn density_scalar_target_is_inv_pi() {
        let streams = TrialStreams::with_base(107, 0);
        let run = mc_density_at_zero(1, 1.0, 0.05, 2_000_000, &streams).unwrap();
        let inv_pi = 1.0 / std::f64::consts::PI;
        assert!((run.raw.target - inv_pi).abs() < 1e-15);
        // 4 stderr + 2% smoothing allowance
        let slack = 4.0 * run.raw.stderr + 0.02 * inv_pi;
        assert!(
            (run.raw.mean - inv_pi).abs() < slack,
            "estimate {} vs {} (slack {slack})",
            run.raw.mean,
            inv_pi
        );
        assert!(run.hits >= 500);
    }

    #[test]
    fn density_targets_scale_with_sigma() {
        // r=2, sigma^2=1: 1/(pi Gamma(2)) = 1/pi; sigma^2=4: 1/(64 pi)
        let streams = TrialStreams::with_base(107, 1 << 32);
        let run = mc_density_at_zero(2, 1.0, 0.05, 200_000, &streams).unwrap();
        assert!((run.raw.target - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        let streams = TrialStreams::with_base(107, 2 << 32);
        let run4 = mc_density_at_zero(2, 4.0, 0.4, 2_000_000, &streams).unwrap();
        assert!((run4.raw.target - 1.0 / (64.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(
            (run4.raw.mean - run4.raw.target).abs()
                < 4.0 * run4.raw.stderr + 0.02 * run4.raw.target
        );
    }

    #[test]
    fn density_insufficient_hits_flagged() {
        let streams = TrialStreams::with_base(107, 3 << 32);
        // tiny disk, few trials: cannot possibly gather 50 hits
        let res = mc_density_at_zero(1, 1.0, 1e-6, 10_000, &streams);
        assert!(matches!(res, Err(OracleError::InsufficientHits { .. })));
    }

    #[test]
    fn radial_cdf_landmarks() {
        assert_eq!(radial_cdf(1.0), 0.5);
        assert!((radial_cdf(3.0f64.sqrt()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn radial_law_unit_disk() {
        let params = EnsembleParams::new(1, 8).unwrap();
        let streams = TrialStreams::with_base(109, 0);
        let run = mc_radial_law(params, 1.0, 2_000, &streams).unwrap();
        assert_eq!(run.estimate.target, 0.5);
        assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
        assert_eq!(run.trials_degenerate, 0);
    }

    #[test]
    fn radial_law_sqrt3_ball() {
        let params = EnsembleParams::new(4, 2).unwrap();
        let streams = TrialStreams::with_base(109, 1 << 32);
        let run = mc_radial_law(params, 3.0f64.sqrt(), 2_000, &streams).unwrap();
        assert!((run.estimate.target - 0.75).abs() < 1e-15);
        assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
    }

    #[test]
    fn first_term_two_shapes() {
        for (d, r, base) in [(2u64, 3u64, 0u64), (6, 1, 1 << 32)] {
            let params = EnsembleParams::new(d, r).unwrap();
            let streams = TrialStreams::with_base(111, base);
            let run = mc_first_term(params, 2_000, &streams).unwrap();
            assert_eq!(run.estimate.target, 3.0);
            assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
        }
    }

    #[test]
    fn kac_rice_quadrature_matches_closed_form() {
        for (d, r) in [(1u64, 1u64), (5, 2), (2, 3)] {
            let params = EnsembleParams::new(d, r).unwrap();
            let quad = quad_kac_rice_second_term(params).unwrap();
            let (_, second, _) = expected_three_terms(params);
            assert!(
                (quad - second).abs() <= 1e-8 * second.abs().max(1e-300),
                "(d={d}, r={r}): quadrature {quad} vs closed form {second}"
            );
        }
    }

    #[test]
    fn energy_small_run_consistency() {
        let params = EnsembleParams::new(2, 3).unwrap();
        let streams = TrialStreams::with_base(113, 0);
        let run = mc_energy(params, 400, &streams).unwrap();
        assert_eq!(
            run.per_trial.len() as u64 + run.trials_degenerate + run.trials_coincident,
            run.trials_requested
        );
        assert!(run.decomposition_max_rel_err <= 1e-6);
        assert!(run.estimate.passes(4.0), "z = {}", run.estimate.z_score);
    }

    #[test]
    fn ks_statistic_on_exact_uniform_grid() {
        // CDF evaluated exactly on the plug-in grid: statistic is 1/(2n)...
        let mut xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let stat = ks_statistic(&mut xs, |x| x);
        assert!((stat - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let mut a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let mut b = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut b), 0.0);
    }

    #[test]
    fn unitary_invariance_of_det_distribution() {
        // |det(G U)| and |det G| agree in law for a fixed unitary U
        let n_samples = 20_000u64;
        let mut u = crate::linalg::ComplexMatrix::identity(3);
        // Householder reflector times phases, exactly unitary
        let mut s = RngStream::substream(115, 0);
        let v: Vec<Complex64> = (0..3)
            .map(|_| s.sample_complex_gaussian(1.0).unwrap())
            .collect();
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                u[(i, j)] = delta - v[i] * v[j].conj() * (2.0 / vnorm);
            }
        }
        let streams_a = TrialStreams::with_base(115, 1 << 32);
        let streams_b = TrialStreams::with_base(115, 2 << 32);
        let mut plain: Vec<f64> = (0..n_samples)
            .map(|t| {
                let mut s = streams_a.stream(t);
                linalg::det(&s.sample_matrix(3, 1.0).unwrap()).unwrap().norm()
            })
            .collect();
        let mut rotated: Vec<f64> = (0..n_samples)
            .map(|t| {
                let mut s = streams_b.stream(t);
                let g = s.sample_matrix(3, 1.0).unwrap();
                linalg::det(&g.mul(&u).unwrap()).unwrap().norm()
            })
            .collect();
        let stat = ks_two_sample(&mut plain, &mut rotated);
        let critical =
            ks_two_sample_critical_one_percent(n_samples as usize, n_samples as usize);
        assert!(stat < critical, "KS {stat} vs critical {critical}");
    }
}
