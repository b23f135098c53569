use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normalized_kernel;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::kernel::KernelSource;
use crate::metric::{dtau, DistanceField, MetricGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Base points on `{0, 0.3, 0.6, 0.8} × 4 angles`, partners marched along rays.
    Rays,
    /// Independent uniform pairs in the graph disc.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePair {
    pub z: Complex64,
    pub w: Complex64,
    pub log_norm_kernel: f64,
    pub d_phi: f64,
    /// Snap-segment error bar of `d_phi`.
    pub d_phi_err: f64,
    pub d_tau: f64,
    pub kernel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub pairs: Vec<SamplePair>,
    /// Pairs dropped because the kernel evaluation failed numerically.
    pub excluded: usize,
}

const BASE_RADII: [f64; 4] = [0.0, 0.3, 0.6, 0.8];
const RAY_DIRECTIONS: usize = 8;

fn ray_candidates(graph: &MetricGraph, spec: &crate::WeightSpec, rng: &mut ChaCha8Rng, count: usize) -> Vec<(Complex64, Complex64)> {
    let cap = graph.r_max * (1.0 - 1e-9);
    let base_angle = rng.random::<f64>() * FRAC_PI_2;
    let mut bases = vec![Complex64::new(0.0, 0.0)];
    for &r in &BASE_RADII[1..] {
        if r > cap {
            continue;
        }
        for k in 0..4 {
            bases.push(Complex64::from_polar(r, base_angle + k as f64 * FRAC_PI_2));
        }
    }
    let dir_offset = rng.random::<f64>() * TAU / RAY_DIRECTIONS as f64;

    // march with steps of roughly `delta` in d_φ, refining until enough candidates exist
    let mut delta = 0.1;
    loop {
        let mut out = Vec::new();
        for &z in &bases {
            for d in 0..RAY_DIRECTIONS {
                let u = Complex64::from_polar(1.0, dir_offset + TAU * d as f64 / RAY_DIRECTIONS as f64);
                let b = (z.conj() * u).re;
                let s_max = -b + (b * b + cap * cap - z.norm_sqr()).max(0.0).sqrt();
                let mut s = 0.0;
                loop {
                    let w = z + u * s;
                    s += delta * spec.tau_r(w.norm());
                    if s > s_max {
                        break;
                    }
                    out.push((z, z + u * s));
                }
            }
        }
        if out.len() >= count || delta < 1e-4 {
            return out;
        }
        delta *= 0.5;
    }
}

/// Sample pairs spanning `d_φ` from near zero to the largest distance the graph
/// reaches, with all fields of [`SamplePair`] filled. Deterministic in `seed`.
pub fn sample_pairs(
    graph: &MetricGraph,
    kernel: &dyn KernelSource,
    strategy: Strategy,
    count: usize,
    seed: u64,
) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    let spec = kernel.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Complex64, Complex64)> = match strategy {
        Strategy::Rays => {
            let all = ray_candidates(graph, spec, &mut rng, count);
            if all.is_empty() {
                return Err(Error::Config("no ray samples fit inside the graph".into()));
            }
            let n = count.min(all.len());
            (0..n).map(|i| all[i * all.len() / n]).collect()
        }
        Strategy::Random => {
            let cap = graph.r_max * (1.0 - 1e-9);
            let draw = |rng: &mut ChaCha8Rng| {
                let r = cap * rng.random::<f64>().sqrt();
                Complex64::from_polar(r, TAU * rng.random::<f64>())
            };
            (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
        }
    };

    // one distance field per distinct source point
    let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (i, (z, _)) in pairs.iter().enumerate() {
        groups.entry((z.re.to_bits(), z.im.to_bits())).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let evaluated: Vec<Vec<(usize, Option<SamplePair>)>> = groups
        .par_iter()
        .map(|idx| -> Result<Vec<(usize, Option<SamplePair>)>> {
            let z = pairs[idx[0]].0;
            let field = DistanceField::new(graph, spec, z)?;
            idx.iter()
                .map(|&i| {
                    let w = pairs[i].1;
                    let kv = match kernel.eval(z, w) {
                        Ok(kv) => kv,
                        Err(
                            Error::Truncation { .. }
                            | Error::Divergence { .. }
                            | Error::Accuracy { .. }
                            | Error::Conditioning(_),
                        ) => return Ok((i, None)),
                        Err(e) => return Err(e),
                    };
                    let d = field.distance_to(w)?;
                    Ok((
                        i,
                        Some(SamplePair {
                            z,
                            w,
                            log_norm_kernel: normalized_kernel(spec, &kv, z, w)?,
                            d_phi: d.distance,
                            d_phi_err: d.snap_error,
                            d_tau: dtau(spec, z, w)?,
                            kernel_err: kv.err_rel,
                        }),
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut slots: Vec<Option<SamplePair>> = vec![None; pairs.len()];
    let mut excluded = 0;
    for (i, p) in evaluated.into_iter().flatten() {
        match p {
            Some(p) => slots[i] = Some(p),
            None => excluded += 1,
        }
    }
    Ok(SampleSet { pairs: slots.into_iter().flatten().collect(), excluded })
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    z_re: f64,
    z_im: f64,
    w_re: f64,
    w_im: f64,
    d_phi: f64,
    d_tau: f64,
    log_norm_kernel: f64,
    kernel_err: f64,
}

/// CSV with columns `z_re, z_im, w_re, w_im, d_phi, d_tau, log_norm_kernel, kernel_err`.
pub fn write_samples_csv(path: &Path, pairs: &[SamplePair]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for p in pairs {
        wtr.serialize(CsvRow {
            z_re: p.z.re,
            z_im: p.z.im,
            w_re: p.w.re,
            w_im: p.w.im,
            d_phi: p.d_phi,
            d_tau: p.d_tau,
            log_norm_kernel: p.log_norm_kernel,
            kernel_err: p.kernel_err,
        })?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Reads a sample CSV back; `d_phi_err` is not stored and comes back as zero.
pub fn read_samples_csv(path: &Path) -> Result<Vec<SamplePair>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize::<CsvRow>()
        .map(|row| {
            let r = row?;
            Ok(SamplePair {
                z: Complex64::new(r.z_re, r.z_im),
                w: Complex64::new(r.w_re, r.w_im),
                log_norm_kernel: r.log_norm_kernel,
                d_phi: r.d_phi,
                d_phi_err: 0.0,
                d_tau: r.d_tau,
                kernel_err: r.kernel_err,
            })
        })
        .collect()
}

/// Two whitespace-separated columns `d_phi log_norm_kernel`, one pair per line.
pub fn write_plot_data(path: &Path, pairs: &[SamplePair]) -> Result<()> {
    let mut s = String::from("# d_phi log_norm_kernel\n");
    for p in pairs {
        s.push_str(&format!("{:e} {:e}\n", p.d_phi, p.log_norm_kernel));
    }
    write_atomic(path, s.as_bytes())
}
