use serde::{Deserialize, Serialize};

use super::fit::DecayReport;
use super::samples::SamplePair;
use crate::error::{Error, Result};

/// Polynomial bounds are fitted on `d_τ ≥ 2`.
const FAR_DTAU: f64 = 2.0;
const MIN_FAR_SAMPLES: usize = 5;

/// One row of the exponential-versus-polynomial comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub k: u32,
    /// Intercept of the tight bound `log N ≤ log c − k log d_τ`.
    pub log_c_poly: f64,
    /// Mean gap between the polynomial bound and the samples.
    pub poly_mean_residual: f64,
    /// Mean gap between the fitted exponential bound and the same samples.
    pub exp_mean_residual: f64,
    /// Smallest sampled `d_τ` from which on the exponential bound is the
    /// smaller one at every far sample.
    pub crossover_d_tau: Option<f64>,
    pub far_samples: usize,
}

/// Compare the fitted `e^{−σ d_φ}` envelope with `d_τ^{−k}` envelopes.
pub fn compare_bounds(report: &DecayReport, samples: &[SamplePair], k_list: &[u32]) -> Result<Vec<BoundComparison>> {
    if k_list.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(k) = k_list.iter().find(|&&k| k == 0) {
        return Err(Error::Config(format!("k = {k} must be positive")));
    }
    let mut far: Vec<&SamplePair> = samples.iter().filter(|p| p.d_tau >= FAR_DTAU).collect();
    if far.len() < MIN_FAR_SAMPLES {
        return Err(Error::InsufficientRange(format!(
            "{} samples with d_tau >= {FAR_DTAU}, need {MIN_FAR_SAMPLES}",
            far.len()
        )));
    }
    far.sort_by(|a, b| a.d_tau.total_cmp(&b.d_tau));
    let n = far.len() as f64;
    let exp_gap: Vec<f64> = far.iter().map(|p| report.envelope(p.d_phi) - p.log_norm_kernel).collect();
    let exp_mean = exp_gap.iter().sum::<f64>() / n;

    Ok(k_list
        .iter()
        .map(|&k| {
            let kf = k as f64;
            let log_c = far.iter().map(|p| p.log_norm_kernel + kf * p.d_tau.ln()).fold(f64::NEG_INFINITY, f64::max);
            let poly_gap: Vec<f64> =
                far.iter().map(|p| log_c - kf * p.d_tau.ln() - p.log_norm_kernel).collect();
            // walk from the far end while the exponential bound stays below
            let mut cross = None;
            for i in (0..far.len()).rev() {
                if exp_gap[i] < poly_gap[i] {
                    cross = Some(far[i].d_tau);
                } else {
                    break;
                }
            }
            BoundComparison {
                k,
                log_c_poly: log_c,
                poly_mean_residual: poly_gap.iter().sum::<f64>() / n,
                exp_mean_residual: exp_mean,
                crossover_d_tau: cross,
                far_samples: far.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::{fit_decay, SlackPolicy};
    use num_complex::Complex64;

    fn exp_samples() -> Vec<SamplePair> {
        (0..300)
            .map(|i| {
                let d = 8.0 * i as f64 / 299.0;
                SamplePair {
                    z: Complex64::new(0.0, 0.0),
                    w: Complex64::new(0.0, 0.0),
                    log_norm_kernel: -d,
                    d_phi: d,
                    d_phi_err: 0.0,
                    d_tau: d,
                    kernel_err: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn exponential_data_prefers_exponential_bound() {
        let s = exp_samples();
        let rep = fit_decay(&s, 0.25, SlackPolicy::Absolute(0.0)).unwrap();
        let table = compare_bounds(&rep, &s, &[2]).unwrap();
        let row = &table[0];
        assert!(row.exp_mean_residual < row.poly_mean_residual);
        let cross = row.crossover_d_tau.unwrap();
        assert!((2.0..3.0).contains(&cross), "{cross}");
    }

    #[test]
    fn empty_k_list() {
        let s = exp_samples();
        let rep = fit_decay(&s, 0.25, SlackPolicy::Absolute(0.0)).unwrap();
        assert!(compare_bounds(&rep, &s, &[]).unwrap().is_empty());
        assert!(compare_bounds(&rep, &s[..10], &[]).unwrap().is_empty());
    }

    #[test]
    fn too_few_far_samples() {
        let s = exp_samples();
        let rep = fit_decay(&s, 0.25, SlackPolicy::Absolute(0.0)).unwrap();
        assert!(matches!(compare_bounds(&rep, &s[..50], &[1]), Err(Error::InsufficientRange(_))));
    }
}
