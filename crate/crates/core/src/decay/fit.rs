use serde::{Deserialize, Serialize};

use super::samples::SamplePair;
use super::NEAR_DIAGONAL_ALPHA;
use crate::error::{Error, Result};

/// Far-field threshold: the envelope is fitted on `d_φ ≥ 1` only.
const FAR_FIELD: f64 = 1.0;
const MIN_FAR_SAMPLES: usize = 10;

/// Fixed slacks at which the violation count is also reported.
const SENSITIVITY_SLACKS: [f64; 6] = [0.0, 0.01, 0.03, 0.1, 0.3, 1.0];

/// Tolerance added above the fitted line before a sample counts as a violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackPolicy {
    /// The same slack for every sample, in log units.
    Absolute(f64),
    /// A multiple of each sample's propagated error bar
    /// `kernel_err + σ·d_phi_err`.
    ErrorMultiple(f64),
}

impl SlackPolicy {
    fn slack(&self, p: &SamplePair, sigma: f64) -> f64 {
        match *self {
            SlackPolicy::Absolute(s) => s,
            SlackPolicy::ErrorMultiple(m) => m * (p.kernel_err + sigma.abs() * p.d_phi_err),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub sigma_fit: f64,
    #[serde(rename = "logC_fit")]
    pub log_c_fit: f64,
    pub r2: f64,
    pub violations: usize,
    /// `(bin centre, max log_norm_kernel)` for every non-empty `d_φ` bin.
    pub annulus_max: Vec<(f64, f64)>,
    /// `(min, max)` of `N` over samples with `d_τ ≤` [`NEAR_DIAGONAL_ALPHA`].
    pub near_diag_ratio: Option<(f64, f64)>,
    /// `(absolute slack, violations)`, non-increasing in the second entry.
    pub slack_sensitivity: Vec<(f64, usize)>,
    pub fit_points: usize,
    pub bin_width: f64,
    pub slack: SlackPolicy,
}

impl DecayReport {
    /// Bound value `log C − σ d` at distance `d`.
    pub fn envelope(&self, d: f64) -> f64 {
        self.log_c_fit - self.sigma_fit * d
    }

    fn count_violations(&self, samples: &[SamplePair], slack: &SlackPolicy) -> usize {
        samples
            .iter()
            .filter(|p| p.log_norm_kernel > self.envelope(p.d_phi) + slack.slack(p, self.sigma_fit))
            .count()
    }
}

struct Bin {
    d_at_max: f64,
    max: f64,
}

fn bins(samples: &[SamplePair], width: f64) -> Vec<(usize, Bin)> {
    let mut out: std::collections::BTreeMap<usize, Bin> = Default::default();
    for p in samples {
        let k = (p.d_phi / width).floor() as usize;
        let b = out.entry(k).or_insert(Bin { d_at_max: p.d_phi, max: f64::NEG_INFINITY });
        if p.log_norm_kernel > b.max {
            b.max = p.log_norm_kernel;
            b.d_at_max = p.d_phi;
        }
    }
    out.into_iter().collect()
}

/// Least squares `y = a + b x`, with `r²` (1 when `y` is constant and fitted exactly).
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    // sums below this are rounding noise of the means
    let floor = (n * f64::EPSILON * pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max)).powi(2);
    let r2 = if ss_tot <= floor {
        if ss_res <= floor { 1.0 } else { 0.0 }
    } else {
        1.0 - ss_res / ss_tot
    };
    (icpt, slope, r2)
}

/// Fit `log N ≤ log C − σ d_φ` from the per-bin upper envelope of the samples.
///
/// The intercept is raised until no sample with `d_φ ≥ 1` lies above the line;
/// violations are then counted over all samples at the requested slack.
pub fn fit_decay(samples: &[SamplePair], bin_width: f64, slack: SlackPolicy) -> Result<DecayReport> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Config(format!("bin_width = {bin_width} must be positive")));
    }
    match slack {
        SlackPolicy::Absolute(s) | SlackPolicy::ErrorMultiple(s) if !(s >= 0.0) => {
            return Err(Error::Config(format!("slack = {s} must be nonnegative")));
        }
        _ => {}
    }
    if let Some(p) = samples.iter().find(|p| !p.log_norm_kernel.is_finite() || !(p.d_phi >= 0.0)) {
        return Err(Error::Config(format!("sample at d_phi = {} is not finite", p.d_phi)));
    }
    let far: Vec<SamplePair> = samples.iter().filter(|p| p.d_phi >= FAR_FIELD).copied().collect();
    if far.len() < MIN_FAR_SAMPLES {
        return Err(Error::InsufficientRange(format!(
            "{} samples with d_phi >= {FAR_FIELD}, need {MIN_FAR_SAMPLES}",
            far.len()
        )));
    }

    let all_bins = bins(samples, bin_width);
    let annulus_max: Vec<(f64, f64)> =
        all_bins.iter().map(|(k, b)| ((*k as f64 + 0.5) * bin_width, b.max)).collect();
    let envelope: Vec<(f64, f64)> = bins(&far, bin_width).into_iter().map(|(_, b)| (b.d_at_max, b.max)).collect();
    if envelope.len() < 2 {
        return Err(Error::InsufficientRange("far-field samples fall into a single bin".into()));
    }
    let (icpt, slope, r2) = linear_fit(&envelope);
    let sigma = -slope;
    let lifted = far.iter().map(|p| p.log_norm_kernel + sigma * p.d_phi).fold(icpt, f64::max);

    let near: Vec<f64> = samples
        .iter()
        .filter(|p| p.d_tau <= NEAR_DIAGONAL_ALPHA)
        .map(|p| p.log_norm_kernel.exp())
        .collect();
    let near_diag_ratio = (!near.is_empty()).then(|| {
        (near.iter().copied().fold(f64::INFINITY, f64::min), near.iter().copied().fold(0.0, f64::max))
    });

    let mut report = DecayReport {
        sigma_fit: sigma,
        log_c_fit: lifted,
        r2,
        violations: 0,
        annulus_max,
        near_diag_ratio,
        slack_sensitivity: Vec::new(),
        fit_points: envelope.len(),
        bin_width,
        slack,
    };
    report.violations = report.count_violations(samples, &slack);
    report.slack_sensitivity = SENSITIVITY_SLACKS
        .iter()
        .map(|&s| (s, report.count_violations(samples, &SlackPolicy::Absolute(s))))
        .collect();
    Ok(report)
}
