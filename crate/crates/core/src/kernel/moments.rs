use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::quadrature;
use crate::weights::WeightSpec;

/// Log-scale monomial norms `log m_n`, `m_n = ‖z^n‖² = 2π ∫₀¹ r^{2n+1} e^{−2φ(r)} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub log_m: Vec<f64>,
    /// Absolute quadrature error estimate for each `m_n`.
    pub quad_err: Vec<f64>,
    pub spec_hash: String,
    pub tol: f64,
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    spec_hash: String,
    tol: f64,
    /// `(n, log m_n, quad_err_n)`
    entries: Vec<(usize, f64, f64)>,
}

impl MomentTable {
    /// Highest tabulated index `N`.
    pub fn n_max(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn m(&self, n: usize) -> f64 {
        self.log_m[n].exp()
    }

    /// Relative quadrature error of `m_n`, computed in log space.
    pub fn rel_err(&self, n: usize) -> f64 {
        if self.quad_err[n] == 0.0 {
            0.0
        } else {
            (self.quad_err[n].ln() - self.log_m[n]).exp()
        }
    }

    /// `m_n / m_{n+1}`.
    pub fn ratio(&self, n: usize) -> f64 {
        (self.log_m[n] - self.log_m[n + 1]).exp()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = MomentFile {
            spec_hash: self.spec_hash.clone(),
            tol: self.tol,
            entries: (0..self.log_m.len()).map(|n| (n, self.log_m[n], self.quad_err[n])).collect(),
        };
        write_atomic(path, serde_json::to_string(&file)?.as_bytes())
    }

    /// Loads a table and checks that it was generated for `spec`.
    pub fn load_json(path: &Path, spec: &WeightSpec) -> Result<Self> {
        let file: MomentFile = serde_json::from_slice(&std::fs::read(path)?)?;
        if file.spec_hash != spec.spec_hash() {
            return Err(Error::Config(format!(
                "moment table {} belongs to spec {}, not {}",
                path.display(),
                file.spec_hash,
                spec.spec_hash()
            )));
        }
        if file.entries.is_empty() || file.entries.iter().enumerate().any(|(i, e)| e.0 != i) {
            return Err(Error::Config("moment table entries must be 0..=N in order".into()));
        }
        Ok(MomentTable {
            log_m: file.entries.iter().map(|e| e.1).collect(),
            quad_err: file.entries.iter().map(|e| e.2).collect(),
            spec_hash: file.spec_hash,
            tol: file.tol,
        })
    }
}

/// Tabulates `log m_n` for `n = 0..=n_max` with relative error at most `tol`.
///
/// Each integrand is evaluated as `exp((2n+1) log r − 2φ(r) − s)` where `s` is
/// the log-integrand's maximum. The log-integrand is concave, so its peak is
/// found by bisection and used to seed the panel partition.
pub fn compute_moments(spec: &WeightSpec, n_max: usize, tol: f64) -> Result<MomentTable> {
    spec.validate()?;
    if !spec.is_radial() {
        return Err(Error::MethodMismatch("moment tables need a radial weight (constant g)".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol = {tol} must be positive")));
    }
    let shift = spec.constant_shift();
    let entries: Vec<(f64, f64)> = (0..=n_max)
        .into_par_iter()
        .map(|n| log_moment(spec, n, tol).map(|(lm, rel)| (lm - 2.0 * shift, rel)))
        .collect::<Result<_>>()?;

    let log_m: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let quad_err: Vec<f64> = entries.iter().map(|e| e.0.exp() * e.1).collect();
    if let Some(n) = (0..n_max).find(|&n| log_m[n + 1] >= log_m[n]) {
        return Err(Error::Accuracy {
            achieved: (log_m[n + 1] - log_m[n]).exp() - 1.0,
            requested: tol,
        });
    }
    Ok(MomentTable { log_m, quad_err, spec_hash: spec.spec_hash(), tol })
}

/// `(log m_n, relative error)` for the weight without its constant shift.
fn log_moment(spec: &WeightSpec, n: usize, tol: f64) -> Result<(f64, f64)> {
    let p = (2 * n + 1) as f64;
    let log_f = |r: f64| p * r.ln() - 2.0 * spec.radial_phi(r * r);
    let slope = |r: f64| p / r - 2.0 * spec.radial_phi_dr(r);

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let peak = 0.5 * (lo + hi);
    let top = log_f(peak);

    // curvature scale of the peak from a centred difference of the slope
    let d = 1e-6 * peak.min(1.0 - peak);
    let curv = -(slope(peak + d) - slope(peak - d)) / (2.0 * d);
    let width = if curv.is_finite() && curv > 0.0 { curv.sqrt().recip() } else { 0.1 };

    let mut breaks = vec![0.0, peak, 1.0];
    for k in [1.0, 2.0, 4.0, 8.0, 16.0] {
        for x in [peak - k * width, peak + k * width] {
            if x > 0.0 && x < 1.0 {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integral = quadrature::integrate(|r| (log_f(r) - top).exp(), &breaks, 0.25 * tol, 0.0, 4000)?;
    Ok((TAU.ln() + top + integral.value.ln(), integral.rel_err()))
}
