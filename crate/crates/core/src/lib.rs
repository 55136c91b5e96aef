//! Operational quasiprobabilities for qudits.
//!
//! A set of `K` observables is measured selectively and in fixed
//! chronological order. The expectations of all `D^K` setups form a
//! characteristic function whose discrete Fourier transform is a
//! quasiprobability `W(a)` over outcome tuples. `W` is a genuine probability
//! distribution whenever the statistics admit a hidden-variable model with
//! noninvasive measurability, so its negativity certifies nonclassicality.
//!
//! Modules:
//! - [`linalg`]: matrices, density operators, Bloch representation.
//! - [`measurement`]: Kraus sets, mutually unbiased bases, the biased qubit pair.
//! - [`engine`]: sequential statistics, `χ`, `W`, marginals, negativity.
//! - [`classical`]: hidden-variable tables and the positivity certificate.
//! - [`bipartite`]: two-qudit tables and the marginal entanglement witness.
//! - [`photon`]: Monte-Carlo model of the polarization experiment.
//! - [`io`]: JSON and CSV formats.

pub mod bipartite;
pub mod classical;
pub mod engine;
mod error;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod photon;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Entries of `W` in `[-ε, 0)` are treated as zero.
pub const NEGATIVITY_EPS: f64 = 1e-12;
/// Absolute tolerance for Hermiticity and unit trace.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a positive semidefinite operator.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated in a Fourier-transformed `χ`.
pub const IMAGINARY_TOL: f64 = 1e-9;
/// Tolerance on `χ(0) = 1` and on probability sums.
pub const NORMALIZATION_TOL: f64 = 1e-10;
