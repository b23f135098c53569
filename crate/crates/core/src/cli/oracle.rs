//! Self-check against analytic values for the standard weight.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kernel::{compute_moments, kernel_closed_form, kernel_series, GramBasis, GramOptions};
use crate::metric::{distance, GraphBuildOptions, MetricGraph};
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn result(name: &str, max_rel_err: f64, tolerance: f64) -> OracleResult {
    OracleResult { name: name.into(), max_rel_err, tolerance, passed: max_rel_err <= tolerance }
}

fn disc_point(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::from_polar(r * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

/// Runs the beta-moment, closed-form kernel, radial distance and gauge
/// oracles for the standard weight with exponent `a`.
pub fn run_oracles(a: f64, h: f64, seed: u64) -> Result<Vec<OracleResult>> {
    let spec = WeightSpec::standard(a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // m_n = π B(n+1, A+1), via m_{n+1} = m_n (n+1)/(n+A+2)
    let table = compute_moments(&spec, 200, 1e-12)?;
    let mut log_m = (std::f64::consts::PI / (a + 1.0)).ln();
    let mut worst: f64 = 0.0;
    for n in 0..=200 {
        worst = worst.max((table.log_m[n] - log_m).exp_m1().abs());
        log_m += ((n as f64 + 1.0) / (n as f64 + a + 2.0)).ln();
    }
    out.push(result("beta moments n <= 200", worst, 1e-9));

    let table = compute_moments(&spec, 2000, 1e-12)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (z, w) = (disc_point(&mut rng, 0.8), disc_point(&mut rng, 0.8));
        let s = kernel_series(&table, z, w, 1e-12)?.to_complex();
        let c = kernel_closed_form(a, z, w)?.to_complex();
        worst = worst.max((s - c).norm() / c.norm());
    }
    out.push(result("series kernel vs closed form", worst, 1e-8));

    let graph = MetricGraph::build(&spec, GraphBuildOptions { r_max: 0.85, h })?;
    let mut worst: f64 = 0.0;
    for r in [0.2, 0.5, 0.8] {
        let exact = (2.0 * a).sqrt() * f64::atanh(r);
        let d = distance(&graph, &spec, Complex64::new(0.0, 0.0), Complex64::new(r, 0.0))?.distance;
        worst = worst.max((d - exact).abs() / exact);
    }
    out.push(result("radial distance", worst, 0.02));

    let c = Complex64::new(0.3, 0.2);
    let gauged = spec.clone().with_harmonic(vec![Complex64::new(0.0, 0.0), c]);
    let basis = GramBasis::build(&gauged, &GramOptions { degree: 40, ..Default::default() })?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (z, w) = (disc_point(&mut rng, 0.5), disc_point(&mut rng, 0.5));
        let got = basis.eval(z, w)?.to_complex();
        let expect = (c * z + (c * w).conj()).exp() * kernel_closed_form(a, z, w)?.to_complex();
        worst = worst.max((got - expect).norm() / expect.norm());
    }
    out.push(result("gauge identity", worst, 1e-4));
    Ok(out)
}
