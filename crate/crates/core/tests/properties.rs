use std::f64::consts::TAU;
use std::sync::OnceLock;

use bergman::decay::normalized_kernel;
use bergman::kernel::{
    compute_moments, kernel_closed_form, kernel_series, GramBasis, GramOptions, KernelSource, MomentTable,
};
use bergman::metric::{distance, hyperbolic_distance, GraphBuildOptions, MetricGraph};
use bergman::quadrature;
use bergman::weights::{eval_laplacian, eval_tau, WeightSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn exp_weight() -> WeightSpec {
    WeightSpec::exponential(1.0, 1.0, 0.5)
}

fn exp_table() -> &'static MomentTable {
    static T: OnceLock<MomentTable> = OnceLock::new();
    T.get_or_init(|| compute_moments(&exp_weight(), 1500, 1e-11).unwrap())
}

fn exp_graph(r_max: f64) -> &'static MetricGraph {
    static G9: OnceLock<MetricGraph> = OnceLock::new();
    static G7: OnceLock<MetricGraph> = OnceLock::new();
    let cell = if r_max == 0.9 { &G9 } else { &G7 };
    cell.get_or_init(|| MetricGraph::build(&exp_weight(), GraphBuildOptions { r_max, h: 0.03 }).unwrap())
}

fn point(max_r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..TAU).prop_map(move |(s, t)| Complex64::from_polar(max_r * s.sqrt(), t))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_kernel_is_hermitian(z in point(0.85), w in point(0.85)) {
        let a = kernel_series(exp_table(), z, w, 1e-10).unwrap().to_complex();
        let b = kernel_series(exp_table(), w, z, 1e-10).unwrap().to_complex();
        prop_assert!(rel(a, b.conj()) < 1e-13);
    }

    #[test]
    fn closed_form_is_hermitian(a in 0.1..6.0f64, z in point(0.95), w in point(0.95)) {
        let k1 = kernel_closed_form(a, z, w).unwrap().to_complex();
        let k2 = kernel_closed_form(a, w, z).unwrap().to_complex();
        prop_assert!(rel(k1, k2.conj()) < 1e-13);
    }

    #[test]
    fn radial_weight_kernel_is_rotation_invariant(z in point(0.8), w in point(0.8), theta in 0.0..TAU) {
        let rot = Complex64::from_polar(1.0, theta);
        let a = kernel_series(exp_table(), z, w, 1e-10).unwrap();
        let b = kernel_series(exp_table(), z * rot, w * rot, 1e-10).unwrap();
        prop_assert!(rel(a.to_complex(), b.to_complex()) < 1e-10);
    }

    #[test]
    fn tau_times_sqrt_laplacian_is_one(
        a in 0.0..5.0f64, b in 0.0..3.0f64, alpha in 0.1..2.0f64, z in point(0.99),
        c1 in -1.0..1.0f64, c2 in -1.0..1.0f64,
    ) {
        prop_assume!(a + b > 0.05);
        let spec = WeightSpec::exponential(a, b, alpha).with_harmonic(vec![Complex64::new(0.0, 0.0), Complex64::new(c1, c2)]);
        let t = eval_tau(&spec, z).unwrap();
        let l = eval_laplacian(&spec, z).unwrap();
        prop_assert!((t * l.sqrt() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_gram_matrices_are_psd(pts in proptest::collection::vec(point(0.9), 6)) {
        let k = DMatrix::from_fn(6, 6, |i, j| kernel_series(exp_table(), pts[i], pts[j], 1e-10).unwrap().to_complex());
        let trace: f64 = (0..6).map(|i| k[(i, i)].re).sum();
        let min_eig = k.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min_eig >= -1e-8 * trace, "{min_eig} vs trace {trace}");
    }

    #[test]
    fn cauchy_schwarz(z in point(0.9), w in point(0.9)) {
        let kzw = kernel_series(exp_table(), z, w, 1e-10).unwrap();
        let kzz = kernel_series(exp_table(), z, z, 1e-10).unwrap();
        let kww = kernel_series(exp_table(), w, w, 1e-10).unwrap();
        let err = kzw.err_rel + kzz.err_rel + kww.err_rel;
        prop_assert!(2.0 * kzw.log_mag <= kzz.log_mag + kww.log_mag + err.ln_1p());
    }

    #[test]
    fn normalized_kernel_is_symmetric(z in point(0.9), w in point(0.9)) {
        let spec = exp_weight();
        let a = normalized_kernel(&spec, &kernel_series(exp_table(), z, w, 1e-10).unwrap(), z, w).unwrap();
        let b = normalized_kernel(&spec, &kernel_series(exp_table(), w, z, 1e-10).unwrap(), w, z).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn graph_distance_triangle_inequality(x in point(0.88), y in point(0.88), z in point(0.88)) {
        let (spec, g) = (exp_weight(), exp_graph(0.9));
        let xy = distance(g, &spec, x, y).unwrap();
        let yz = distance(g, &spec, y, z).unwrap();
        let xz = distance(g, &spec, x, z).unwrap();
        // the path through y has to be rerouted through a corner of y's cell
        let slack = 2.0 * (xy.snap_error + yz.snap_error);
        prop_assert!(xz.distance <= xy.distance + yz.distance + slack);
    }

    #[test]
    fn graph_distance_is_exactly_symmetric(x in point(0.88), y in point(0.88)) {
        let (spec, g) = (exp_weight(), exp_graph(0.9));
        prop_assert_eq!(distance(g, &spec, x, y).unwrap(), distance(g, &spec, y, x).unwrap());
    }

    #[test]
    fn distance_does_not_increase_with_rmax(x in point(0.69), y in point(0.69)) {
        let spec = exp_weight();
        let small = distance(exp_graph(0.7), &spec, x, y).unwrap().distance;
        let big = distance(exp_graph(0.9), &spec, x, y).unwrap().distance;
        prop_assert!(big <= small);
    }

    #[test]
    fn distance_dominates_hyperbolic_over_c2(x in point(0.88), y in point(0.88)) {
        // τ ≤ C2 (1 − |z|) ≤ C2 (1 − |z|²), with C2 = sup τ/(1 − r) computed densely
        let spec = exp_weight();
        let c2 = (0..=10_000).map(|i| {
            let r = 0.99 * i as f64 / 10_000.0;
            spec.tau_r(r) / (1.0 - r)
        }).fold(0.0, f64::max);
        let d = distance(exp_graph(0.9), &spec, x, y).unwrap();
        prop_assert!(d.distance >= hyperbolic_distance(x, y).unwrap() / c2 - d.snap_error);
    }
}

#[test]
fn radial_distance_converges_at_least_linearly() {
    let spec = WeightSpec::standard(0.5);
    let err = |h: f64| {
        let g = MetricGraph::build(&spec, GraphBuildOptions { r_max: 0.85, h }).unwrap();
        [0.2, 0.5, 0.8]
            .iter()
            .map(|&r| {
                let d = distance(&g, &spec, Complex64::new(0.0, 0.0), Complex64::new(r, 0.0)).unwrap().distance;
                (d - f64::atanh(r)).abs() / f64::atanh(r)
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.04), err(0.02));
    assert!((e1 / e2).log2() >= 0.9, "{e1} {e2}");
}

#[test]
fn reproducing_property_for_monomials() {
    // ∫ ζ^n K(z, ζ) e^{−2φ(ζ)} dλ(ζ) = z^n for the standard weight with A = 1
    let z = Complex64::new(0.3, -0.2);
    let n_theta = 64;
    for n in [0usize, 1, 3] {
        let radial = |r: f64| -> Vec<Complex64> {
            let s: Complex64 = (0..n_theta)
                .map(|j| {
                    let zeta = Complex64::from_polar(r, TAU * j as f64 / n_theta as f64);
                    zeta.powu(n as u32) * kernel_closed_form(1.0, z, zeta).unwrap().to_complex()
                })
                .sum();
            vec![s * (TAU / n_theta as f64) * r * (1.0 - r * r)]
        };
        let (v, _) = quadrature::integrate_vec(radial, &[0.0, 0.5, 1.0], 1e-11, 400, |v| {
            v.iter().map(|c| c.norm()).collect()
        })
        .unwrap();
        assert!(rel(v[0], z.powu(n as u32)) < 1e-9, "n = {n}: {}", v[0]);
    }
}

#[test]
fn gram_and_series_agree_for_radial_weight() {
    let basis = GramBasis::build(&exp_weight(), &GramOptions::default()).unwrap();
    for (z, w) in [(0.1, 0.4), (-0.5, 0.2), (0.45, -0.3)].map(|(a, b)| (Complex64::new(a, b), Complex64::new(b, -a))) {
        let g = basis.eval(z, w).unwrap().to_complex();
        let s = kernel_series(exp_table(), z, w, 1e-12).unwrap().to_complex();
        assert!(rel(g, s) < 1e-8, "{z} {w}");
    }
}

#[test]
fn normalized_kernel_is_gauge_invariant() {
    let base = exp_weight();
    let gauged = base.clone().with_harmonic(vec![Complex64::new(0.1, 0.0), Complex64::new(0.3, 0.2)]);
    let basis = GramBasis::build(&gauged, &GramOptions::default()).unwrap();
    for (z, w) in [(Complex64::new(0.2, 0.1), Complex64::new(-0.4, 0.3)), (Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5))] {
        let n_g = normalized_kernel(&gauged, &basis.eval(z, w).unwrap(), z, w).unwrap();
        let n_0 = normalized_kernel(&base, &kernel_series(exp_table(), z, w, 1e-12).unwrap(), z, w).unwrap();
        assert!((n_g - n_0).abs() < 1e-6, "{n_g} {n_0}");
    }
}

#[test]
fn origin_diagonal_from_first_moment() {
    let k = kernel_series(exp_table(), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 1e-12).unwrap();
    assert!((k.log_mag + exp_table().log_m[0]).abs() < 1e-15);
    let basis = GramBasis::build(&exp_weight(), &GramOptions { degree: 10, ..Default::default() }).unwrap();
    let g = KernelSource::eval(&basis, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
    assert!((g.log_mag - k.log_mag).abs() < 1e-9);
}
