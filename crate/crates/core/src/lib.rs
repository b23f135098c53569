//! Weighted Bergman kernels on the unit disc for exponential-type weights.
//!
//! * [`weights`]: the weight families, `τ = (Δφ)^{-1/2}` and empirical
//!   certification of the Oleinik–Perel'man conditions.
//! * [`kernel`]: the Bergman kernel by moment series, closed form and Gram matrix.
//! * [`metric`]: the geodesic distance of `τ^{-2} dz⊗dz̄` on a polar graph.
//! * [`decay`]: normalised kernel, envelope fits of the off-diagonal decay and
//!   the near-diagonal, mean-value and polynomial-bound comparisons.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod decay;
pub mod error;
pub mod io;
pub mod kernel;
pub mod metric;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};
pub use kernel::{KernelSource, KernelValue, Method, MomentTable};
pub use metric::MetricGraph;
pub use weights::{OPReport, WeightSpec};
