//! Geodesic distance `d_φ` of the conformal metric `τ(z)^{-2} dz⊗dz̄`.
//!
//! Distances come from shortest paths on a polar graph whose edge lengths are
//! Simpson approximations of `∫ |dz|/τ` along straight segments. Because every
//! reported value is the τ-length of an actual piecewise linear curve, it is an
//! upper bound for `d_φ` up to the Simpson error.

mod graph;
mod paths;

pub use graph::{segment_length, GraphBuildOptions, MetricGraph};
pub use paths::{distance, distance_with_path, DistanceEstimate, DistanceField};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::weights::{eval_tau, WeightSpec};

/// `∫₀^r dt/τ(t)`, which equals `d_φ(0, r)`: τ is radial, so geodesics through
/// the origin are rays.
pub fn radial_distance_oracle(spec: &WeightSpec, r: f64) -> Result<f64> {
    spec.validate()?;
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} must lie in [0, 1)")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let v = quadrature::integrate(|t| spec.tau_r(t).recip(), &[0.0, r], 1e-13, 0.0, 2000)?;
    Ok(v.value)
}

/// Distance of the metric `|dz|/(1−|z|²)`: `arctanh |(z−w)/(1−z̄w)|`.
///
/// This is half the curvature −1 Poincaré distance; the comparison with `d_φ`
/// only holds up to such a constant anyway.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> Result<f64> {
    for p in [z, w] {
        if !(p.norm() < 1.0) {
            return Err(Error::Domain(format!("|{p}| is not inside the unit disc")));
        }
    }
    let delta = (z - w).norm() / (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    Ok(delta.atanh())
}

/// Quasi-distance `|z−w| / min(τ(z), τ(w))`.
pub fn dtau(spec: &WeightSpec, z: Complex64, w: Complex64) -> Result<f64> {
    let tz = eval_tau(spec, z)?;
    let tw = eval_tau(spec, w)?;
    Ok((z - w).norm() / tz.min(tw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn radial_oracle_examples() {
        let spec = WeightSpec::standard(0.5);
        assert_eq!(radial_distance_oracle(&spec, 0.0).unwrap(), 0.0);
        let d = radial_distance_oracle(&spec, 0.5).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-12);
        assert!((d - 0.549_306_144_334_054_8).abs() < 1e-12);
        assert!(radial_distance_oracle(&spec, 0.6).unwrap() > d);
        // general A: √(2A) arctanh r
        let d3 = radial_distance_oracle(&WeightSpec::standard(3.0), 0.7).unwrap();
        assert!((d3 - 6f64.sqrt() * 0.7f64.atanh()).abs() < 1e-11);
    }

    #[test]
    fn hyperbolic_examples() {
        assert_eq!(hyperbolic_distance(c(0.3, 0.2), c(0.3, 0.2)).unwrap(), 0.0);
        assert!((hyperbolic_distance(c(0.0, 0.0), c(0.6, 0.0)).unwrap() - 0.6f64.atanh()).abs() < 1e-15);
        let theta = 1.1;
        let rot = Complex64::from_polar(1.0, theta);
        let a = hyperbolic_distance(c(0.0, 0.0), c(0.6, 0.0)).unwrap();
        let b = hyperbolic_distance(c(0.0, 0.0) * rot, c(0.6, 0.0) * rot).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(hyperbolic_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn dtau_examples() {
        let spec = WeightSpec::standard(1.0);
        assert_eq!(dtau(&spec, c(0.2, 0.1), c(0.2, 0.1)).unwrap(), 0.0);
        let d = dtau(&spec, c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((d - 0.942_809_041_582_063_5).abs() < 1e-12);
        let (z, w) = (c(0.1, -0.6), c(0.4, 0.3));
        assert_eq!(dtau(&spec, z, w).unwrap(), dtau(&spec, w, z).unwrap());
    }
}
