use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normalized_kernel, NEAR_DIAGONAL_ALPHA};
use crate::error::{Error, Result};
use crate::kernel::KernelSource;
use crate::quadrature::gauss_legendre;
use crate::weights::{eval_phi, eval_tau};

const NEAR_DIAGONAL_RADIUS: f64 = 0.9;
const MEAN_VALUE_RADIUS: f64 = 0.99;

/// Extremes of the normalised kernel close to the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearDiagonalReport {
    /// `(min, max)` of `N(z, z)`.
    pub diagonal: (f64, f64),
    /// `(min, max)` of `N(z, w)` over the near-diagonal pairs.
    pub near: (f64, f64),
    /// `(min, max)` of `|K(z, w)| / sqrt(K(z, z) K(w, w))` over the same pairs.
    pub correlation: (f64, f64),
    /// Largest relative kernel error met along the way.
    pub max_kernel_err: f64,
}

fn extend(r: &mut (f64, f64), v: f64) {
    r.0 = r.0.min(v);
    r.1 = r.1.max(v);
}

/// Samples `z` uniformly in `|z| ≤ 0.9` and `w` with
/// `|z − w| ≤ alpha·min(τ(z), τ(w))`, `|w| ≤ 0.9`.
pub fn near_diagonal_check(
    kernel: &dyn KernelSource,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<NearDiagonalReport> {
    if !(alpha > 0.0 && alpha <= NEAR_DIAGONAL_ALPHA) {
        return Err(Error::Config(format!("alpha = {alpha} must lie in (0, {NEAR_DIAGONAL_ALPHA}]")));
    }
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let spec = kernel.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rep = NearDiagonalReport { diagonal: empty, near: empty, correlation: empty, max_kernel_err: 0.0 };
    let mut done = 0;
    while done < samples {
        let z = Complex64::from_polar(NEAR_DIAGONAL_RADIUS * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        let tz = eval_tau(spec, z)?;
        let w = z + Complex64::from_polar(alpha * tz * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>());
        if w.norm() > NEAR_DIAGONAL_RADIUS || (z - w).norm() > alpha * tz.min(eval_tau(spec, w)?) {
            continue;
        }
        let kzz = kernel.eval(z, z)?;
        let kww = kernel.eval(w, w)?;
        let kzw = kernel.eval(z, w)?;
        extend(&mut rep.diagonal, normalized_kernel(spec, &kzz, z, z)?.exp());
        extend(&mut rep.near, normalized_kernel(spec, &kzw, z, w)?.exp());
        extend(&mut rep.correlation, (kzw.log_mag - 0.5 * (kzz.log_mag + kww.log_mag)).exp());
        rep.max_kernel_err = rep.max_kernel_err.max(kzz.err_rel).max(kww.err_rel).max(kzw.err_rel);
        done += 1;
    }
    Ok(rep)
}

/// `|K(w, z)|² e^{−2φ(w)}` divided by `τ(w)^{−2} ∫ |K(ζ, z)|² e^{−2φ(ζ)} dλ(ζ)`
/// over the disc `D(w, β τ(w)/2)`.
///
/// The disc integral uses `quad_n` Gauss–Legendre radii times `quad_n` equispaced
/// angles, centred at `w`. For small β the ratio tends to `4/(πβ²)`.
pub fn mean_value_check(
    kernel: &dyn KernelSource,
    z: Complex64,
    w: Complex64,
    beta: f64,
    quad_n: usize,
) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("beta = {beta} must be positive")));
    }
    if quad_n < 2 {
        return Err(Error::Config("quad_n must be at least 2".into()));
    }
    let spec = kernel.spec();
    let tw = eval_tau(spec, w)?;
    if w.norm() + beta * tw > MEAN_VALUE_RADIUS {
        return Err(Error::Domain(format!(
            "disc of radius {} around {w} leaves |z| <= {MEAN_VALUE_RADIUS}",
            beta * tw
        )));
    }
    eval_phi(spec, z)?;
    let log_at = |p: Complex64| -> Result<f64> { Ok(2.0 * kernel.eval(p, z)?.log_mag - 2.0 * eval_phi(spec, p)?) };
    // everything relative to the centre value to stay in range
    let centre = log_at(w)?;
    let radius = 0.5 * beta * tw;
    let gl = gauss_legendre(quad_n);
    let dtheta = TAU / quad_n as f64;
    let mut integral = 0.0;
    for &(x, wx) in &gl {
        let rho = 0.5 * radius * (x + 1.0);
        let wr = 0.5 * radius * wx * rho;
        for j in 0..quad_n {
            let p = w + Complex64::from_polar(rho, dtheta * j as f64);
            integral += wr * dtheta * (log_at(p)? - centre).exp();
        }
    }
    Ok(tw * tw / integral)
}
