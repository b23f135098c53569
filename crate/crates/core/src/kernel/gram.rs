use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{KernelValue, Method};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::weights::WeightSpec;

#[derive(Debug, Clone)]
pub struct GramOptions {
    /// Highest monomial degree `N`; the basis is `1, z, …, z^N`.
    pub degree: usize,
    /// Evaluation points must satisfy `|z|, |w| ≤ r_quad`.
    pub r_quad: f64,
    /// Per-entry quadrature tolerance, relative to `sqrt(G_mm G_nn)`.
    pub quad_tol: f64,
    /// Angular trapezoid nodes; `None` picks `max(4(N+1), 64)`.
    pub angular_nodes: Option<usize>,
    pub max_panels: usize,
    pub max_condition: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            degree: 40,
            r_quad: 0.95,
            quad_tol: 1e-12,
            angular_nodes: None,
            max_panels: 2000,
            max_condition: 1e12,
        }
    }
}

/// Factorised Gram matrix of the monomial basis, reusable across evaluations.
///
/// `G[m][n] = ∫_𝔻 z^m z̄^n e^{−2φ} dλ`. The basis is rescaled by
/// `1/sqrt(G_nn)` before the Cholesky factorisation.
#[derive(Debug, Clone)]
pub struct GramBasis {
    spec: WeightSpec,
    degree: usize,
    r_quad: f64,
    diag: Vec<f64>,
    chol_l: DMatrix<Complex64>,
    condition: f64,
    quad_err: f64,
}

impl GramBasis {
    pub fn build(spec: &WeightSpec, opts: &GramOptions) -> Result<Self> {
        spec.validate()?;
        if !(opts.r_quad > 0.0 && opts.r_quad < 1.0) {
            return Err(Error::Config(format!("r_quad = {} must lie in (0, 1)", opts.r_quad)));
        }
        let (g, quad_err) = gram_matrix(spec, opts)?;
        let dim = opts.degree + 1;
        let diag: Vec<f64> = (0..dim).map(|i| g[(i, i)].re).collect();
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Conditioning("non-positive diagonal Gram entry".into()));
        }
        let scaled = DMatrix::from_fn(dim, dim, |i, j| g[(i, j)] / (diag[i] * diag[j]).sqrt());

        let eig = scaled.clone().symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if !(lo > 0.0) {
            return Err(Error::Conditioning(format!(
                "Gram matrix is not numerically positive definite (min eigenvalue {lo:.3e}); lower N"
            )));
        }
        let condition = hi / lo;
        if condition > opts.max_condition {
            return Err(Error::Conditioning(format!(
                "condition number {condition:.3e} exceeds {:.1e}; lower N",
                opts.max_condition
            )));
        }
        let chol = scaled
            .cholesky()
            .ok_or_else(|| Error::Conditioning("Cholesky factorisation failed".into()))?;
        Ok(GramBasis {
            spec: spec.clone(),
            degree: opts.degree,
            r_quad: opts.r_quad,
            diag,
            chol_l: chol.unpack(),
            condition,
            quad_err,
        })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `L^{-1} D v(z)` with `v(z) = (1, z, …, z^N)` and `D = diag(G_nn)^{-1/2}`.
    fn whitened(&self, z: Complex64) -> DVector<Complex64> {
        let mut pow = Complex64::new(1.0, 0.0);
        let mut v = DVector::zeros(self.degree + 1);
        for n in 0..=self.degree {
            v[n] = pow / self.diag[n].sqrt();
            pow *= z;
        }
        self.chol_l
            .solve_lower_triangular(&v)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Result<KernelValue> {
        for p in [z, w] {
            if !(p.norm() <= self.r_quad) {
                return Err(Error::Domain(format!("|{p}| exceeds r_quad = {}", self.r_quad)));
            }
        }
        let a = self.whitened(z);
        let b = self.whitened(w);
        // K(z, w) = conj(v(z)^H G^{-1} v(w)) = b^H a
        let k = b.iter().zip(a.iter()).map(|(bi, ai)| bi.conj() * ai).sum::<Complex64>();

        let dim = (self.degree + 1) as f64;
        let algebra = self.condition * dim * (self.quad_err + f64::EPSILON);
        let err_rel = algebra + self.truncation_estimate(z.norm() * w.norm()) / k.norm();
        Ok(KernelValue::from_complex(k, Method::Gram, err_rel))
    }

    /// Geometric extrapolation of `Σ_{n>N} ρ^n / G_nn` from the last two diagonal entries.
    fn truncation_estimate(&self, rho: f64) -> f64 {
        let n = self.degree;
        if n == 0 || rho == 0.0 {
            return 0.0;
        }
        let q = rho * self.diag[n - 1] / self.diag[n];
        if q >= 1.0 {
            return f64::INFINITY;
        }
        (n as f64 * rho.ln() - self.diag[n].ln()).exp() * q / (1.0 - q)
    }
}

/// Radial × angular tensor quadrature for the full Hermitian Gram matrix.
/// Angular integrals use the trapezoid rule (spectrally accurate for periodic
/// integrands); the radial direction is adaptive over all entries at once.
fn gram_matrix(spec: &WeightSpec, opts: &GramOptions) -> Result<(DMatrix<Complex64>, f64)> {
    let deg = opts.degree;
    let dim = deg + 1;
    let m_ang = opts.angular_nodes.unwrap_or((4 * dim).max(64));
    if m_ang < 2 * dim {
        return Err(Error::Config(format!("{m_ang} angular nodes cannot resolve degree {deg}")));
    }
    let thetas: Vec<Complex64> = (0..m_ang)
        .map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m_ang as f64))
        .collect();
    // twiddle[j][k] = e^{i k θ_j}
    let twiddle: Vec<Vec<Complex64>> = thetas
        .iter()
        .map(|u| {
            let mut row = Vec::with_capacity(dim);
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..dim {
                row.push(p);
                p *= u;
            }
            row
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
    let diag_pos: Vec<usize> = (0..dim)
        .map(|i| pairs.iter().position(|&(a, b)| a == i && b == i).expect("diagonal pair"))
        .collect();
    let non_radial = !spec.is_radial();
    let shift = spec.constant_shift();

    let integrand = |r: f64| -> Vec<Complex64> {
        let radial = (-2.0 * (spec.radial_phi(r * r) + shift)).exp();
        // a_k(r) = ∫ e^{ikθ} e^{−2 Re g̃(re^{iθ})} dθ with g̃ = g − c_0
        let mut ak = vec![Complex64::new(0.0, 0.0); dim];
        if non_radial {
            let h = TAU / m_ang as f64;
            for (j, u) in thetas.iter().enumerate() {
                let e = (-2.0 * (spec.g(u * r).re - shift)).exp() * h;
                for (k, tw) in twiddle[j].iter().enumerate() {
                    ak[k] += tw * e;
                }
            }
        } else {
            ak[0] = Complex64::new(TAU, 0.0);
        }
        let mut pw = Vec::with_capacity(2 * dim);
        let mut p = r * radial;
        for _ in 0..2 * dim {
            pw.push(p);
            p *= r;
        }
        pairs
            .iter()
            .map(|&(i, j)| {
                // entry (i, j) with i ≤ j carries e^{i(i−j)θ}, i.e. conj(a_{j−i})
                ak[j - i].conj() * pw[i + j]
            })
            .collect()
    };
    let scale = |t: &[Complex64]| -> Vec<f64> {
        pairs
            .iter()
            .map(|&(i, j)| (t[diag_pos[i]].norm() * t[diag_pos[j]].norm()).sqrt())
            .collect()
    };
    let breaks = [0.0, 0.5, 0.75, 0.875, 0.9375, 0.968_75, 0.984_375, 1.0];
    let (vals, achieved) = quadrature::integrate_vec(integrand, &breaks, opts.quad_tol, opts.max_panels, scale)?;

    let mut g = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (&(i, j), v) in pairs.iter().zip(vals) {
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    for i in 0..dim {
        g[(i, i)].im = 0.0;
    }
    Ok((g, achieved))
}

/// One-shot truncated-basis kernel evaluation.
pub fn kernel_gram(spec: &WeightSpec, opts: &GramOptions, z: Complex64, w: Complex64) -> Result<KernelValue> {
    for p in [z, w] {
        if !(p.norm() <= opts.r_quad) {
            return Err(Error::Domain(format!("|{p}| exceeds r_quad = {}", opts.r_quad)));
        }
    }
    GramBasis::build(spec, opts)?.eval(z, w)
}
