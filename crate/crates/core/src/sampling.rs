//! Reproducible random number generation: counter-based streams keyed by
//! (master seed, stream id) so every trial draws from its own substream no
//! matter how work is scheduled across threads.

use num_complex::Complex64;

use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplingError {
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(String),
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 finalizer (Stafford mix 13).
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream: output j is a keyed hash of the counter j,
/// so streams with distinct ids are distinct keyed permutations of the
/// counter sequence rather than offsets of a shared cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    counter: u64,
    stream_id: u64,
}

impl RngStream {
    /// Stream `stream_id` of the family keyed by `master_seed`. Identical
    /// arguments produce bit-identical output sequences on every host.
    pub fn substream(master_seed: u64, stream_id: u64) -> Self {
        let key = mix64(master_seed ^ GOLDEN)
            ^ mix64(stream_id.wrapping_mul(STREAM_SALT) ^ master_seed.rotate_left(32));
        RngStream {
            key,
            counter: 0,
            stream_id,
        }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        let x = self.key ^ self.counter.wrapping_mul(GOLDEN);
        mix64(mix64(x).wrapping_add(self.key))
    }

    /// Uniform in (0, 1]: safe as a Box-Muller log argument.
    fn next_uniform_pos(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Uniform in [0, 1).
    fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
    }

    /// One standard Gaussian pair via Box-Muller; table-free so the output
    /// is identical on every platform.
    fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_uniform_pos();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        (radius * theta.cos(), radius * theta.sin())
    }

    /// A complex Gaussian N_C(0, sigma2): real and imaginary parts are
    /// independent real Gaussians of mean 0 and variance sigma2/2.
    pub fn sample_complex_gaussian(&mut self, sigma2: f64) -> Result<Complex64, SamplingError> {
        if !(sigma2 > 0.0) {
            return Err(SamplingError::NonPositiveVariance(format!("{sigma2}")));
        }
        let (re, im) = self.next_gaussian_pair();
        let half_std = (sigma2 * 0.5).sqrt();
        Ok(Complex64::new(half_std * re, half_std * im))
    }

    /// An r x r matrix of i.i.d. N_C(0, sigma2) entries drawn in row-major
    /// order (the reproducibility contract).
    pub fn sample_matrix(&mut self, r: usize, sigma2: f64) -> Result<ComplexMatrix, SamplingError> {
        let mut entries = Vec::with_capacity(r * r);
        for _ in 0..r * r {
            entries.push(self.sample_complex_gaussian(sigma2)?);
        }
        Ok(ComplexMatrix::from_parts(r, r, entries))
    }
}

/// Hands each trial of a campaign its own substream under one master seed.
/// The base offset keeps distinct campaigns in one run on disjoint stream
/// ids, so results never depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    master_seed: u64,
    base: u64,
}

impl TrialStreams {
    pub fn new(master_seed: u64) -> Self {
        TrialStreams {
            master_seed,
            base: 0,
        }
    }

    pub fn with_base(master_seed: u64, base: u64) -> Self {
        TrialStreams { master_seed, base }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, trial: u64) -> RngStream {
        RngStream::substream(self.master_seed, self.base.wrapping_add(trial))
    }
}
