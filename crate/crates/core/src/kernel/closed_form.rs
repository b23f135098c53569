use std::f64::consts::PI;

use num_complex::Complex64;

use super::{wrap_phase, KernelValue, Method};
use crate::error::{Error, Result};

/// `K(z, w) = (A+1)/π · (1 − z w̄)^{−(A+2)}` for the weight `−(A/2) log(1−|z|²)`.
///
/// Follows from `m_n = π B(n+1, A+1)` and the binomial series. The principal
/// branch is valid because `Re(1 − z w̄) > 0` whenever `|z w̄| < 1`.
pub fn kernel_closed_form(a: f64, z: Complex64, w: Complex64) -> Result<KernelValue> {
    if !(a > -1.0) {
        return Err(Error::InvalidSpec(format!("closed form needs A > -1, got {a}")));
    }
    for p in [z, w] {
        if !(p.norm() < 1.0) {
            return Err(Error::Domain(format!("|{p}| is not inside the unit disc")));
        }
    }
    let base = Complex64::new(1.0, 0.0) - z * w.conj();
    debug_assert!(base.re > 0.0);
    let log_base = base.ln();
    let e = a + 2.0;
    Ok(KernelValue {
        log_mag: ((a + 1.0) / PI).ln() - e * log_base.re,
        phase: wrap_phase(-e * log_base.im),
        method: Method::ClosedForm,
        err_rel: 8.0 * f64::EPSILON * (1.0 + e * log_base.norm()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct partial sum of `Σ ζ^n / m_n` with beta-integral moments, and the
    /// sum of the term magnitudes (its roundoff scale).
    fn beta_series(a: f64, z: Complex64, w: Complex64) -> (Complex64, f64) {
        let zeta = z * w.conj();
        let mut m = PI / (a + 1.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for n in 0..4000 {
            sum += pow / m;
            abs_sum += pow.norm() / m;
            m *= (n as f64 + 1.0) / (n as f64 + a + 2.0);
            pow *= zeta;
        }
        (sum, abs_sum)
    }

    #[test]
    fn examples() {
        let k0 = kernel_closed_form(1.0, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((k0.to_complex().re - 2.0 / PI).abs() < 1e-15);
        let k1 = kernel_closed_form(1.0, c(0.5, 0.0), c(0.5, 0.0)).unwrap();
        assert!((k1.to_complex().re - 1.509_024_645_612_045).abs() < 1e-12);
        let k2 = kernel_closed_form(1.0, c(0.5, 0.0), c(-0.5, 0.0)).unwrap();
        assert!((k2.to_complex().re - 0.325_949_323_452_201_7).abs() < 1e-12);
    }

    #[test]
    fn matches_beta_series() {
        for a in [0.0, 0.5, 1.0, 3.0, 7.25] {
            for (z, w) in [(c(0.3, 0.4), c(-0.6, 0.2)), (c(0.7, -0.1), c(0.5, 0.5)), (c(0.0, 0.8), c(0.0, -0.8))] {
                let (exact, scale) = beta_series(a, z, w);
                let got = kernel_closed_form(a, z, w).unwrap().to_complex();
                // alternating sums cancel, so the oracle is only good to ε·Σ|terms|
                let tol = 1e-12 * exact.norm() + 1e-13 * scale;
                assert!((got - exact).norm() < tol, "a={a} z={z} w={w}");
            }
        }
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(kernel_closed_form(1.0, c(1.0, 0.0), c(0.0, 0.0)), Err(Error::Domain(_))));
        assert!(kernel_closed_form(-1.0, c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }
}
