//! JSON run configuration. Every section is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decay::Strategy;
use crate::error::{Error, Result};
use crate::kernel::Method;
use crate::weights::{OPCheckOptions, WeightSpec};

/// A weight given inline or as the path of a JSON file holding one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecRef {
    Inline(WeightSpec),
    Path(PathBuf),
}

impl SpecRef {
    /// Parses a command line value: inline JSON if it starts with `{`, a path otherwise.
    pub fn from_arg(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            Ok(SpecRef::Inline(serde_json::from_str(s)?))
        } else {
            Ok(SpecRef::Path(PathBuf::from(s)))
        }
    }

    pub fn resolve(&self, base: &Path) -> Result<WeightSpec> {
        let spec: WeightSpec = match self {
            SpecRef::Inline(s) => s.clone(),
            SpecRef::Path(p) => {
                let p = if p.is_relative() { base.join(p) } else { p.clone() };
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read weight file {}: {e}", p.display())))?;
                serde_json::from_str(&text)?
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// Moment table size for the series route.
    pub n: usize,
    pub tol: f64,
    /// `None` picks the series route for radial weights and Gram otherwise.
    pub method: Option<Method>,
    pub gram_degree: usize,
    pub r_quad: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { n: 2000, tol: 1e-10, method: None, gram_degree: 40, r_quad: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub h: f64,
    pub r_max: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { h: 0.01, r_max: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub strategy: Strategy,
    pub count: usize,
    pub seed: u64,
    pub bin_width: f64,
    /// Multiple of each sample's propagated error bar.
    pub slack: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k_list: Vec<u32>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            strategy: Strategy::Rays,
            count: 500,
            seed: 0,
            bin_width: 0.25,
            slack: 3.0,
            alpha: 0.25,
            beta: 0.5,
            k_list: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpConfig {
    pub r_max: f64,
    pub n_samples: usize,
    pub a_grid: Vec<f64>,
    pub margin: f64,
}

impl Default for OpConfig {
    fn default() -> Self {
        let d = OPCheckOptions::default();
        OpConfig { r_max: d.r_max, n_samples: d.n_samples, a_grid: d.a_grid, margin: d.margin }
    }
}

impl From<&OpConfig> for OPCheckOptions {
    fn from(c: &OpConfig) -> Self {
        OPCheckOptions { r_max: c.r_max, n_samples: c.n_samples, a_grid: c.a_grid.clone(), margin: c.margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub spec: Option<SpecRef>,
    pub kernel: KernelConfig,
    pub metric: MetricConfig,
    pub decay: DecayConfig,
    pub op: OpConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: None,
            kernel: KernelConfig::default(),
            metric: MetricConfig::default(),
            decay: DecayConfig::default(),
            op: OpConfig::default(),
            output_dir: PathBuf::from("bergman-out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Range checks that do not need the weight.
    pub fn validate(&self) -> Result<()> {
        let k = &self.kernel;
        if k.n == 0 || !(k.tol > 0.0 && k.tol < 1.0) {
            return Err(Error::Config(format!("kernel: n = {} must be positive and tol = {} in (0, 1)", k.n, k.tol)));
        }
        if !(k.r_quad > 0.0 && k.r_quad < 1.0) {
            return Err(Error::Config(format!("kernel: r_quad = {} must lie in (0, 1)", k.r_quad)));
        }
        let m = &self.metric;
        if !(m.h > 0.0 && m.h < 1.0) || !(m.r_max > 0.0 && m.r_max < 1.0) {
            return Err(Error::Config(format!("metric: h = {} and r_max = {} must lie in (0, 1)", m.h, m.r_max)));
        }
        let d = &self.decay;
        if d.count == 0 || !(d.bin_width > 0.0) || !(d.slack >= 0.0) || !(d.beta > 0.0) {
            return Err(Error::Config("decay: count, bin_width and beta must be positive, slack nonnegative".into()));
        }
        if !(d.alpha > 0.0 && d.alpha <= crate::decay::NEAR_DIAGONAL_ALPHA) {
            return Err(Error::Config(format!("decay: alpha = {} must lie in (0, 0.5]", d.alpha)));
        }
        let o = &self.op;
        if !(o.r_max > 0.0 && o.r_max < 1.0) || o.n_samples == 0 || o.a_grid.is_empty() {
            return Err(Error::Config("op: r_max must lie in (0, 1), n_samples and a_grid be non-empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"kernal": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"metric": {"h": 0.1, "rmax": 0.5}}"#).is_err());
    }

    #[test]
    fn spec_inline_or_path() {
        let c: RunConfig = serde_json::from_str(r#"{"spec": {"A": 1, "B": 1, "alpha": 0.5}}"#).unwrap();
        assert_eq!(c.spec, Some(SpecRef::Inline(WeightSpec::exponential(1.0, 1.0, 0.5))));
        let c: RunConfig = serde_json::from_str(r#"{"spec": "w.json", "kernel": {"method": "gram"}}"#).unwrap();
        assert_eq!(c.spec, Some(SpecRef::Path("w.json".into())));
        assert_eq!(c.kernel.method, Some(Method::Gram));
    }

    #[test]
    fn range_checks() {
        let mut c = RunConfig::default();
        c.metric.h = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.decay.alpha = 0.75;
        assert!(c.validate().is_err());
    }
}
