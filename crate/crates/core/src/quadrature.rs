//! Numerical integration: globally adaptive Gauss–Kronrod (7/15) for scalar and
//! vector-valued integrands, plus fixed Gauss–Legendre rules.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub panels: usize,
}

impl Integral {
    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            if self.abs_err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.abs_err / self.value.abs()
        }
    }
}

/// The 15 Kronrod abscissae mapped to `[a, b]`, in increasing order, with weights.
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for i in 0..7 {
        out[i] = (c - h * XGK[i], h * WGK[i]);
        out[14 - i] = (c + h * XGK[i], h * WGK[i]);
    }
    out[7] = (c, h * WGK[7]);
    out
}

/// Kronrod and embedded Gauss estimates on one panel.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod integration over the interval spanned by
/// `breakpoints` (sorted, at least two entries). Bisects the panel with the
/// largest error estimate until `err <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut err = 0.0;
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        value += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }
    loop {
        let target = abs_tol.max(rel_tol * value.abs());
        if err <= target {
            break;
        }
        if heap.len() >= max_panels {
            let achieved = if value == 0.0 { f64::INFINITY } else { err / value.abs() };
            return Err(Error::Accuracy { achieved, requested: rel_tol });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel below floating resolution; keep its contribution and stop refining it
            heap.push(Panel { err: 0.0, ..worst });
            err -= worst.err;
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        value += v1 + v2 - worst.value;
        err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, err) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.err));
    Ok(Integral { value, abs_err: err, panels: heap.len() })
}

/// Vector-valued adaptive integration for complex integrands sharing one panel
/// partition. `scale` maps the running totals to a per-component magnitude used to
/// normalise errors; the run stops when every normalised error is below `tol`.
///
/// Returns the integrals and the achieved worst normalised error.
pub fn integrate_vec<F, S>(
    f: F,
    breakpoints: &[f64],
    tol: f64,
    max_panels: usize,
    scale: S,
) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(f64) -> Vec<Complex64>,
    S: Fn(&[Complex64]) -> Vec<f64>,
{
    struct VPanel {
        a: f64,
        b: f64,
        value: Vec<Complex64>,
        err: Vec<f64>,
    }

    let panel = |a: f64, b: f64| -> VPanel {
        let nodes = kronrod_nodes(a, b);
        let h = 0.5 * (b - a);
        let mut kron: Option<Vec<Complex64>> = None;
        let mut gauss: Option<Vec<Complex64>> = None;
        for (idx, &(x, wk)) in nodes.iter().enumerate() {
            let fx = f(x);
            let k = kron.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); fx.len()]);
            for (acc, v) in k.iter_mut().zip(&fx) {
                *acc += v * wk;
            }
            // Gauss nodes sit at odd Kronrod indices 1,3,5 / 7 / 9,11,13
            let gi = match idx {
                1 => Some(0),
                3 => Some(1),
                5 => Some(2),
                7 => Some(3),
                9 => Some(2),
                11 => Some(1),
                13 => Some(0),
                _ => None,
            };
            if let Some(gi) = gi {
                let g = gauss.get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); fx.len()]);
                for (acc, v) in g.iter_mut().zip(&fx) {
                    *acc += v * (h * WG[gi]);
                }
            }
        }
        let value = kron.unwrap_or_default();
        let err = value
            .iter()
            .zip(gauss.unwrap_or_default())
            .map(|(k, g)| (k - g).norm())
            .collect();
        VPanel { a, b, value, err }
    };

    let mut panels: Vec<VPanel> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| panel(w[0], w[1]))
        .collect();
    assert!(!panels.is_empty(), "need at least one interval");
    let dim = panels[0].value.len();

    loop {
        let mut total = vec![Complex64::new(0.0, 0.0); dim];
        let mut total_err = vec![0.0; dim];
        for p in &panels {
            for i in 0..dim {
                total[i] += p.value[i];
                total_err[i] += p.err[i];
            }
        }
        let sc = scale(&total);
        let worst = total_err
            .iter()
            .zip(&sc)
            .map(|(e, s)| if *s > 0.0 { e / s } else { 0.0 })
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok((total, worst));
        }
        if panels.len() >= max_panels {
            return Err(Error::Accuracy { achieved: worst, requested: tol });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let e = p
                    .err
                    .iter()
                    .zip(&sc)
                    .map(|(e, s)| if *s > 0.0 { e / s } else { 0.0 })
                    .fold(0.0, f64::max);
                (i, e)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Accuracy { achieved: worst, requested: tol });
        }
        panels.push(panel(p.a, mid));
        panels.push(panel(mid, p.b));
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0);
    let mut out = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson rule on `[a, b]` with a single panel.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}
