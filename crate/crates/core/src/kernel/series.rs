use num_complex::Complex64;

use super::{wrap_phase, KernelValue, Method, MomentTable};
use crate::error::{Error, Result};

/// Number of trailing moment ratios used for the tail bound.
const RATIO_WINDOW: usize = 5;
const DIVERGENCE_GUARD: f64 = 1.0 - 1e-3;

/// `K(z, w) = Σ_n (z w̄)^n / m_n`, truncated once the geometric tail bound drops
/// below `tol` relative to the partial sum.
///
/// Terms are accumulated as `exp(n log(z w̄) − log m_n − s)` with a running
/// shift `s` equal to the largest log-magnitude seen so far.
pub fn kernel_series(table: &MomentTable, z: Complex64, w: Complex64, tol: f64) -> Result<KernelValue> {
    for p in [z, w] {
        if !(p.norm() < 1.0) {
            return Err(Error::Domain(format!("|{p}| is not inside the unit disc")));
        }
    }
    let rho = z.norm() * w.norm();
    if rho == 0.0 {
        return Ok(KernelValue {
            log_mag: -table.log_m[0],
            phase: 0.0,
            method: Method::Series,
            err_rel: table.rel_err(0),
        });
    }
    let log_rho = rho.ln();
    let theta = z.arg() - w.arg();

    let mut shift = f64::NEG_INFINITY;
    let mut sum = Complex64::new(0.0, 0.0);
    // Σ|term_n| and Σ|term_n|·relerr_n, both on the current shift
    let mut abs_sum = 0.0;
    let mut quad_sum = 0.0;
    let mut ratio_max_seen = f64::INFINITY;

    for n in 0..=table.n_max() {
        let log_term = n as f64 * log_rho - table.log_m[n];
        if log_term > shift {
            let scale = (shift - log_term).exp();
            sum *= scale;
            abs_sum *= scale;
            quad_sum *= scale;
            shift = log_term;
        }
        let mag = (log_term - shift).exp();
        let (s, c) = (n as f64 * theta).sin_cos();
        sum += Complex64::new(mag * c, mag * s);
        abs_sum += mag;
        quad_sum += mag * table.rel_err(n);

        if n == 0 {
            continue;
        }
        let first = n.saturating_sub(RATIO_WINDOW);
        let q = rho * (first..n).map(|j| table.ratio(j)).fold(0.0, f64::max);
        ratio_max_seen = q;
        if q >= 1.0 {
            continue;
        }
        let total = sum.norm();
        let tail = mag * q / (1.0 - q);
        if q < DIVERGENCE_GUARD && tail <= tol * total {
            let err_rel = (tail + quad_sum + 4.0 * f64::EPSILON * (n as f64 + 1.0) * abs_sum) / total;
            return Ok(KernelValue {
                log_mag: shift + total.ln(),
                phase: wrap_phase(sum.arg()),
                method: Method::Series,
                err_rel,
            });
        }
    }

    if ratio_max_seen >= DIVERGENCE_GUARD {
        Err(Error::Divergence { ratio: ratio_max_seen })
    } else {
        let last = (table.n_max() as f64 * log_rho - table.log_m[table.n_max()] - shift).exp();
        let q = ratio_max_seen;
        Err(Error::Truncation {
            terms: table.n_max() + 1,
            tail_rel: last * q / (1.0 - q) / sum.norm(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::compute_moments;
    use crate::weights::WeightSpec;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_is_first_moment() {
        let table = compute_moments(&WeightSpec::standard(1.0), 50, 1e-12).unwrap();
        let kv = kernel_series(&table, c(0.0, 0.0), c(0.0, 0.0), 1e-12).unwrap();
        assert!((kv.log_mag.exp() - 2.0 / PI).abs() < 1e-12);
        assert_eq!(kv.phase, 0.0);
    }

    #[test]
    fn diagonal_value_for_a1() {
        let table = compute_moments(&WeightSpec::standard(1.0), 500, 1e-12).unwrap();
        let kv = kernel_series(&table, c(0.5, 0.0), c(0.5, 0.0), 1e-12).unwrap();
        let expect = 2.0 / PI / 0.75f64.powi(3);
        assert!((kv.to_complex().re / expect - 1.0).abs() < 1e-10);
        assert!((expect - 1.509_024_645_612_045).abs() < 1e-12);
    }

    #[test]
    fn hermitian_symmetry_is_exact() {
        let table = compute_moments(&WeightSpec::exponential(1.0, 1.0, 0.5), 400, 1e-10).unwrap();
        let (z, w) = (c(0.3, -0.5), c(-0.2, 0.45));
        let a = kernel_series(&table, z, w, 1e-10).unwrap();
        let b = kernel_series(&table, w, z, 1e-10).unwrap();
        assert_eq!(a.log_mag, b.log_mag);
        assert!((a.phase + b.phase).abs() < 1e-15 || (a.phase - b.phase).abs() == 2.0 * PI);
    }

    #[test]
    fn short_table_reports_truncation() {
        let table = compute_moments(&WeightSpec::standard(1.0), 10, 1e-10).unwrap();
        let err = kernel_series(&table, c(0.9, 0.0), c(0.9, 0.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. } | Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn near_boundary_hits_divergence_guard() {
        // ratio ρ·m_n/m_{n+1} stays above the guard for every tabulated n
        let table = compute_moments(&WeightSpec::standard(1.0), 30, 1e-10).unwrap();
        let err = kernel_series(&table, c(0.9999, 0.0), c(0.9999, 0.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn outside_disc_is_domain_error() {
        let table = compute_moments(&WeightSpec::standard(1.0), 10, 1e-10).unwrap();
        assert!(matches!(kernel_series(&table, c(1.0, 0.0), c(0.0, 0.0), 1e-10), Err(Error::Domain(_))));
    }
}
