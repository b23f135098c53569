//! Exponential-type weights on the unit disc.
//!
//! A weight is parametrised as
//!
//! ```text
//! φ(z) = ½(−A log(1−|z|²) + B (1−|z|²)^(−α)) + Re g(z),   g(z) = Σ c_k z^k
//! ```
//!
//! The harmonic part `Re g` does not contribute to the Laplacian, so the radius
//! function `τ = (Δφ)^(−1/2)` is always radial.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B", default)]
    pub b: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Coefficients `c_0..c_d` of the holomorphic `g`, as `[re, im]` pairs.
    #[serde(rename = "g", default, with = "complex_pairs")]
    pub harmonic_coeffs: Vec<Complex64>,
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl WeightSpec {
    /// Standard weight `−(A/2) log(1−|z|²)`.
    pub fn standard(a: f64) -> Self {
        WeightSpec { a, b: 0.0, alpha: 1.0, harmonic_coeffs: Vec::new() }
    }

    /// Exponential-type weight `½(−A log(1−|z|²) + B(1−|z|²)^(−α))`.
    pub fn exponential(a: f64, b: f64, alpha: f64) -> Self {
        WeightSpec { a, b, alpha, harmonic_coeffs: Vec::new() }
    }

    /// Same weight plus `Re g` with `g(z) = Σ coeffs[k] z^k`.
    pub fn with_harmonic(mut self, coeffs: Vec<Complex64>) -> Self {
        self.harmonic_coeffs = coeffs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.a.is_finite()
            && self.b.is_finite()
            && self.alpha.is_finite()
            && self.harmonic_coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite {
            return Err(Error::InvalidSpec("non-finite parameter".into()));
        }
        if self.a < 0.0 || self.b < 0.0 {
            return Err(Error::InvalidSpec(format!("A = {}, B = {} must be nonnegative", self.a, self.b)));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidSpec(format!("alpha = {} must be positive", self.alpha)));
        }
        if self.a == 0.0 && self.b == 0.0 {
            return Err(Error::InvalidSpec("A = B = 0 gives a harmonic weight with no radius function".into()));
        }
        Ok(())
    }

    /// Radial iff `g` is constant; the imaginary part of `c_0` never affects `Re g`.
    pub fn is_radial(&self) -> bool {
        self.harmonic_coeffs.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// `Re c_0`, the constant shift of a radial weight.
    pub fn constant_shift(&self) -> f64 {
        self.harmonic_coeffs.first().map_or(0.0, |c| c.re)
    }

    /// Same weight without the harmonic perturbation.
    pub fn without_harmonic(&self) -> Self {
        WeightSpec { harmonic_coeffs: Vec::new(), ..self.clone() }
    }

    /// Stable identifier derived from the parameter bit patterns.
    pub fn spec_hash(&self) -> String {
        let mut h = Sha256::new();
        for x in [self.a, self.b, self.alpha] {
            h.update(x.to_bits().to_le_bytes());
        }
        // trailing zero coefficients do not change the weight
        let mut coeffs = self.harmonic_coeffs.as_slice();
        while let Some((last, rest)) = coeffs.split_last() {
            if *last == Complex64::new(0.0, 0.0) {
                coeffs = rest;
            } else {
                break;
            }
        }
        for c in coeffs {
            h.update(c.re.to_bits().to_le_bytes());
            h.update(c.im.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    /// `g(z)` by Horner's rule.
    pub fn g(&self, z: Complex64) -> Complex64 {
        self.harmonic_coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// Radial part `½(−A log(1−t) + B(1−t)^(−α))` as a function of `t = |z|²`.
    pub fn radial_phi(&self, t: f64) -> f64 {
        let s = 1.0 - t;
        let mut v = 0.0;
        if self.a != 0.0 {
            v -= self.a * s.ln();
        }
        if self.b != 0.0 {
            v += self.b * s.powf(-self.alpha);
        }
        0.5 * v
    }

    /// Derivative of the radial part with respect to `r = |z|`.
    pub fn radial_phi_dr(&self, r: f64) -> f64 {
        let s = 1.0 - r * r;
        let mut v = 0.0;
        if self.a != 0.0 {
            v += self.a / s;
        }
        if self.b != 0.0 {
            v += self.b * self.alpha * s.powf(-self.alpha - 1.0);
        }
        r * v
    }

    /// `Δφ` as a function of `t = |z|²`.
    pub fn laplacian_t(&self, t: f64) -> f64 {
        let s = 1.0 - t;
        let mut v = 0.0;
        if self.a != 0.0 {
            v += 2.0 * self.a / (s * s);
        }
        if self.b != 0.0 {
            v += 2.0 * self.b * self.alpha * (1.0 + self.alpha * t) * s.powf(-self.alpha - 2.0);
        }
        v
    }

    /// `τ` as a function of `r = |z|`.
    pub fn tau_r(&self, r: f64) -> f64 {
        self.laplacian_t(r * r).sqrt().recip()
    }
}

fn check_point(z: Complex64) -> Result<()> {
    let r = z.norm();
    if !(r < 1.0) {
        return Err(Error::Domain(format!("|z| = {r} is not inside the unit disc")));
    }
    Ok(())
}

/// `φ(z)`.
pub fn eval_phi(spec: &WeightSpec, z: Complex64) -> Result<f64> {
    check_point(z)?;
    Ok(spec.radial_phi(z.norm_sqr()) + spec.g(z).re)
}

/// `Δφ(z) = 2A/(1−t)² + 2Bα(1+αt)/(1−t)^(α+2)`, `t = |z|²`.
pub fn eval_laplacian(spec: &WeightSpec, z: Complex64) -> Result<f64> {
    spec.validate()?;
    check_point(z)?;
    Ok(spec.laplacian_t(z.norm_sqr()))
}

/// `τ(z) = Δφ(z)^(−1/2)`.
pub fn eval_tau(spec: &WeightSpec, z: Complex64) -> Result<f64> {
    Ok(eval_laplacian(spec, z)?.sqrt().recip())
}

/// Witness pair for the third membership condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C3Witness {
    #[serde(rename = "C3")]
    pub c3: f64,
    pub a: f64,
}

/// Empirical certification of the three membership conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OPReport {
    #[serde(rename = "C1_est")]
    pub c1_est: f64,
    #[serde(rename = "C2_est")]
    pub c2_est: f64,
    #[serde(rename = "C3_found")]
    pub c3_found: Option<C3Witness>,
    pub sample_count: usize,
    pub r_max: f64,
    /// `(a, C3)` for every grid value tried, in grid order.
    pub c3_by_a: Vec<(f64, f64)>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct OPCheckOptions {
    pub r_max: f64,
    pub n_samples: usize,
    pub a_grid: Vec<f64>,
    pub margin: f64,
}

impl Default for OPCheckOptions {
    fn default() -> Self {
        OPCheckOptions {
            r_max: 0.99,
            n_samples: 2048,
            a_grid: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            margin: 0.01,
        }
    }
}

/// Stratified polar sample set: `ceil(sqrt(n))` rings clustered toward `r_max`
/// (τ varies fastest there), equally spaced angles shared by all rings.
fn stratified_samples(r_max: f64, n: usize) -> Vec<Complex64> {
    if n == 1 {
        return vec![Complex64::new(r_max, 0.0)];
    }
    let n_r = (n as f64).sqrt().ceil() as usize;
    let n_theta = n.div_ceil(n_r);
    let mut out = Vec::with_capacity(n);
    'outer: for i in 0..n_r {
        let r = r_max * (std::f64::consts::FRAC_PI_2 * (i + 1) as f64 / n_r as f64).sin();
        for j in 0..n_theta {
            if out.len() == n {
                break 'outer;
            }
            let theta = std::f64::consts::TAU * j as f64 / n_theta as f64;
            out.push(Complex64::from_polar(r, theta));
        }
    }
    out
}

/// Empirical constants for the three conditions over `{|z| ≤ r_max}`.
pub fn check_op_conditions(spec: &WeightSpec, opts: &OPCheckOptions) -> Result<OPReport> {
    spec.validate()?;
    if opts.n_samples == 0 {
        return Err(Error::Config("empty sample set".into()));
    }
    if !(opts.r_max > 0.0 && opts.r_max < 1.0) {
        return Err(Error::Config(format!("r_max = {} must lie in (0, 1)", opts.r_max)));
    }
    if opts.a_grid.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::Config("a_grid entries must be positive".into()));
    }
    let pts = stratified_samples(opts.r_max, opts.n_samples);
    let taus: Vec<f64> = pts.iter().map(|z| spec.tau_r(z.norm())).collect();
    let mut diagnostics = Vec::new();

    let c2_est = pts
        .iter()
        .zip(&taus)
        .map(|(z, t)| t / (1.0 - z.norm()))
        .fold(0.0, f64::max);

    // per z: Lipschitz quotient max, and third-condition quotient max for each a
    let n_a = opts.a_grid.len();
    let per_point: Vec<(f64, Vec<f64>, bool)> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut lip: f64 = 0.0;
            let mut c3 = vec![0.0f64; n_a];
            let mut any_pair = false;
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let d = (pts[i] - pts[j]).norm();
                if d == 0.0 {
                    continue;
                }
                any_pair = true;
                let diff = taus[j] - taus[i];
                lip = lip.max(diff.abs() / d);
                let q = diff.max(0.0) / d;
                for (k, a) in opts.a_grid.iter().enumerate() {
                    if d > a * taus[i] {
                        c3[k] = c3[k].max(q);
                    }
                }
            }
            (lip, c3, any_pair)
        })
        .collect();

    let any_pair = per_point.iter().any(|p| p.2);
    let c1_est = per_point.iter().map(|p| p.0).fold(0.0, f64::max);
    if !any_pair {
        diagnostics.push("no admissible pair of distinct points; C1 and C3 left at 0".into());
    }
    let c3_by_a: Vec<(f64, f64)> = opts
        .a_grid
        .iter()
        .enumerate()
        .map(|(k, &a)| (a, per_point.iter().map(|p| p.1[k]).fold(0.0, f64::max)))
        .collect();
    let c3_found = if any_pair {
        c3_by_a
            .iter()
            .find(|(_, c3)| *c3 < 1.0 - opts.margin)
            .map(|&(a, c3)| C3Witness { c3, a })
    } else {
        None
    };
    if any_pair && c3_found.is_none() {
        diagnostics.push(format!(
            "no grid value of a gave C3 < {}; smallest C3 = {:.4}",
            1.0 - opts.margin,
            c3_by_a.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
        ));
    }
    Ok(OPReport {
        c1_est,
        c2_est,
        c3_found,
        sample_count: pts.len(),
        r_max: opts.r_max,
        c3_by_a,
        diagnostics,
    })
}
