//! Off-diagonal decay of the normalised kernel
//! `N(z, w) = |K(z, w)| e^{−φ(z)−φ(w)} τ(z) τ(w)` against the geodesic distance.
//!
//! The expected behaviour is `N(z, w) ≤ C e^{−σ d_φ(z, w)}` with constants that
//! are only known to exist, so this module fits them from samples and checks the
//! bound's consequences rather than asserting given values.

mod checks;
mod compare;
mod fit;
mod samples;

pub use checks::{mean_value_check, near_diagonal_check, NearDiagonalReport};
pub use compare::{compare_bounds, BoundComparison};
pub use fit::{fit_decay, DecayReport, SlackPolicy};
pub use samples::{
    read_samples_csv, sample_pairs, write_plot_data, write_samples_csv, SamplePair, SampleSet, Strategy,
};

use num_complex::Complex64;

use crate::error::Result;
use crate::kernel::KernelValue;
use crate::weights::{eval_phi, eval_tau, WeightSpec};

/// Default near-diagonal radius factor: `|z − w| ≤ α min(τ(z), τ(w))`.
pub const NEAR_DIAGONAL_ALPHA: f64 = 0.5;

/// `log N(z, w) = log|K(z, w)| − φ(z) − φ(w) + log τ(z) + log τ(w)`.
pub fn normalized_kernel(spec: &WeightSpec, kv: &KernelValue, z: Complex64, w: Complex64) -> Result<f64> {
    Ok(kv.log_mag - eval_phi(spec, z)? - eval_phi(spec, w)? + eval_tau(spec, z)?.ln() + eval_tau(spec, w)?.ln())
}
