//! A Monte Carlo laboratory for the logarithmic energy of random point
//! ensembles on the sphere. Points come from the roots of a random matrix
//! polynomial (degree d, block size r, N = d*r roots) projected
//! stereographically; the library measures their logarithmic energy and
//! checks it — together with every random-matrix identity feeding it —
//! against closed-form expectations.

pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod pevp;
pub mod quadrature;
pub mod sampling;
pub mod sphere_energy;
pub mod theory;

pub use linalg::ComplexMatrix;
pub use pevp::EnsembleParams;
pub use sampling::{RngStream, TrialStreams};
