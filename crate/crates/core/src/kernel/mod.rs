//! Bergman kernel of `AL²_φ(𝔻)` by three routes: moment series for radial
//! weights, the closed form for the standard weight, and Gram-matrix inversion
//! for weights with a harmonic perturbation.
//!
//! Kernel values are carried as `(log |K|, arg K)` because for exponential-type
//! weights the diagonal grows like `e^{2φ}/τ²` and overflows near the boundary.

mod closed_form;
mod gram;
mod moments;
mod series;

pub use closed_form::kernel_closed_form;
pub use gram::{kernel_gram, GramBasis, GramOptions};
pub use moments::{compute_moments, MomentTable};
pub use series::kernel_series;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    ClosedForm,
    Gram,
}

/// One kernel evaluation in log-magnitude/phase form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub log_mag: f64,
    /// In `(−π, π]`.
    pub phase: f64,
    pub method: Method,
    /// Bound on the relative error of `K`.
    pub err_rel: f64,
}

impl KernelValue {
    pub fn from_complex(k: Complex64, method: Method, err_rel: f64) -> Self {
        KernelValue { log_mag: k.norm().ln(), phase: wrap_phase(k.arg()), method, err_rel }
    }

    /// `K` as a complex number; overflows to infinity for huge magnitudes.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    pub fn conj(&self) -> Self {
        KernelValue { phase: wrap_phase(-self.phase), ..*self }
    }
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Anything that can evaluate `K(z, w)` for a fixed weight.
pub trait KernelSource: Sync {
    fn spec(&self) -> &WeightSpec;
    fn eval(&self, z: Complex64, w: Complex64) -> Result<KernelValue>;
}

/// Series route backed by a precomputed moment table.
pub struct SeriesKernel<'a> {
    pub spec: &'a WeightSpec,
    pub table: &'a MomentTable,
    pub tol: f64,
}

impl KernelSource for SeriesKernel<'_> {
    fn spec(&self) -> &WeightSpec {
        self.spec
    }
    fn eval(&self, z: Complex64, w: Complex64) -> Result<KernelValue> {
        kernel_series(self.table, z, w, self.tol)
    }
}

/// Closed form for the standard weight `−(A/2) log(1−|z|²)`.
pub struct ClosedFormKernel {
    spec: WeightSpec,
}

impl ClosedFormKernel {
    pub fn new(a: f64) -> Self {
        ClosedFormKernel { spec: WeightSpec::standard(a) }
    }
}

impl KernelSource for ClosedFormKernel {
    fn spec(&self) -> &WeightSpec {
        &self.spec
    }
    fn eval(&self, z: Complex64, w: Complex64) -> Result<KernelValue> {
        kernel_closed_form(self.spec.a, z, w)
    }
}

impl KernelSource for GramBasis {
    fn spec(&self) -> &WeightSpec {
        GramBasis::spec(self)
    }
    fn eval(&self, z: Complex64, w: Complex64) -> Result<KernelValue> {
        GramBasis::eval(self, z, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn complex_round_trip() {
        let k = Complex64::new(-1.5, 0.25);
        let kv = KernelValue::from_complex(k, Method::Gram, 0.0);
        assert!((kv.to_complex() - k).norm() < 1e-15);
        assert!((kv.conj().to_complex() - k.conj()).norm() < 1e-15);
    }
}
