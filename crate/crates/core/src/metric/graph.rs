use std::f64::consts::TAU;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::weights::WeightSpec;

const CACHE_MAGIC: &[u8; 4] = b"BGMG";
const CACHE_VERSION: u32 = 2;

/// τ-length of the straight segment `[u, v]` by Simpson's rule.
pub fn segment_length(spec: &WeightSpec, u: Complex64, v: Complex64) -> f64 {
    let len = (v - u).norm();
    if len == 0.0 {
        return 0.0;
    }
    let inv = |p: Complex64| spec.tau_r(p.norm()).recip();
    len / 6.0 * (inv(u) + 4.0 * inv(0.5 * (u + v)) + inv(v))
}

/// Composite Simpson length of the chord between polar points, using radii
/// only so that every rotated copy of an edge gets bit-identical weight.
fn polar_segment_length(spec: &WeightSpec, r1: f64, r2: f64, dtheta: f64, panels: usize) -> f64 {
    let c = dtheta.cos();
    let len = (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * c).max(0.0).sqrt();
    // |(1−s) u + s v| for the chord parameter s
    let inv = |s: f64| {
        let r = ((1.0 - s) * (1.0 - s) * r1 * r1 + s * s * r2 * r2 + 2.0 * s * (1.0 - s) * r1 * r2 * c).max(0.0).sqrt();
        spec.tau_r(r).recip()
    };
    let n = panels.max(1);
    let step = 1.0 / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let s0 = i as f64 * step;
        sum += inv(s0) + 4.0 * inv(s0 + 0.5 * step) + inv(s0 + step);
    }
    len * step / 6.0 * sum
}

/// Stencil reach in cells along the shorter side of a polar cell. Directions
/// are spaced at most `atan(1/STENCIL)` apart in the metric.
const STENCIL: f64 = 3.0;
const MAX_RING_SPAN: usize = 32;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GraphBuildOptions {
    pub r_max: f64,
    /// Target Euclidean edge length.
    pub h: f64,
}

/// Polar discretisation of `{|z| ≤ r_max}` plus a hub node at the origin.
///
/// Node `(k, j)` is joined to `(k + dk, j + dj)` for coprime offsets whose
/// metric directions cover the circle in steps of about `atan(1/3)`. The metric
/// is conformal, so a cell's aspect ratio is `r Δθ / Δr` in either geometry and
/// the offset ranges are chosen per ring from it.
///
/// Ring radii follow `r_{k+1} = r_k + h τ(r_k)/τ(0)` and do not depend on
/// `r_max`, and every ring carries the same `ceil(2π/h)` angles, so the graph
/// for a smaller `r_max` is a subgraph of the one for a larger `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    pub spec_hash: String,
    pub r_max: f64,
    pub h: f64,
    /// `radii[0] = 0` is the hub; `radii[k]`, `k ≥ 1`, are the rings.
    pub(crate) radii: Vec<f64>,
    pub(crate) n_theta: usize,
    pub(crate) offsets: Vec<usize>,
    pub(crate) targets: Vec<u32>,
    pub(crate) weights: Vec<f64>,
}

impl MetricGraph {
    pub fn build(spec: &WeightSpec, opts: GraphBuildOptions) -> Result<Self> {
        spec.validate()?;
        let GraphBuildOptions { r_max, h } = opts;
        if !(r_max > 0.0 && r_max < 1.0) {
            return Err(Error::Config(format!("r_max = {r_max} must lie in (0, 1)")));
        }
        if !(h > 0.0) {
            return Err(Error::Config(format!("h = {h} must be positive")));
        }
        let n_theta = (TAU / h).ceil() as usize;
        let tau0 = spec.tau_r(0.0);
        let mut radii = vec![0.0];
        loop {
            let r = *radii.last().expect("non-empty");
            let next = r + h * spec.tau_r(r) / tau0;
            if next > r_max || next <= r {
                break;
            }
            radii.push(next);
        }
        let rings = radii.len() - 1;
        if rings < 2 || n_theta < 8 {
            return Err(Error::Config(format!(
                "h = {h} is too coarse for r_max = {r_max}: {rings} rings, {n_theta} angles"
            )));
        }
        if rings * n_theta > u32::MAX as usize {
            return Err(Error::Config("graph too large".into()));
        }

        let dtheta = TAU / n_theta as f64;
        let node = |k: usize, j: usize| -> usize { 1 + (k - 1) * n_theta + (j % n_theta) };
        let n_nodes = 1 + rings * n_theta;
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_nodes];
        let add = |a: usize, b: usize, w: f64, adj: &mut Vec<Vec<(u32, f64)>>| {
            adj[a].push((b as u32, w));
            adj[b].push((a as u32, w));
        };

        let hub = polar_segment_length(spec, 0.0, radii[1], 0.0, 1);
        for j in 0..n_theta {
            add(0, node(1, j), hub, &mut adj);
        }
        for k in 1..=rings {
            let r = radii[k];
            let dr = if k < rings { radii[k + 1] - r } else { r - radii[k - 1] };
            let aspect = r * dtheta / dr;
            let k_span = ((STENCIL * aspect.max(1.0)).ceil() as usize).min(MAX_RING_SPAN);
            let j_span = ((STENCIL / aspect.min(1.0)).ceil() as usize).min(n_theta / 4) as isize;
            for dk in 0..=k_span.min(rings - k) {
                let dj_range = if dk == 0 { 1..=1 } else { -j_span..=j_span };
                for dj in dj_range {
                    if gcd(dk, dj.unsigned_abs()) != 1 {
                        continue;
                    }
                    let panels = dk.max(dj.unsigned_abs());
                    let w = polar_segment_length(spec, r, radii[k + dk], dj as f64 * dtheta, panels);
                    for j in 0..n_theta {
                        let jj = (j as isize + dj).rem_euclid(n_theta as isize) as usize;
                        add(node(k, j), node(k + dk, jj), w, &mut adj);
                    }
                }
            }
        }

        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in adj {
            for (t, w) in list {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let g = MetricGraph { spec_hash: spec.spec_hash(), r_max, h, radii, n_theta, offsets, targets, weights };
        if !g.is_connected() || g.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config(format!("h = {h} did not produce a connected graph with finite weights")));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn ring_count(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn angle_count(&self) -> usize {
        self.n_theta
    }

    pub fn ring_radii(&self) -> &[f64] {
        &self.radii[1..]
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[a..b].iter().map(|&t| t as usize).zip(self.weights[a..b].iter().copied())
    }

    /// Node index for ring `k` and angle index `j`; ring 0 is the hub.
    pub fn node_index(&self, k: usize, j: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + (k - 1) * self.n_theta + (j % self.n_theta)
        }
    }

    /// `(ring, angle)` indices of a node; the hub is `(0, 0)`.
    pub fn ring_and_angle(&self, u: usize) -> (usize, usize) {
        if u == 0 {
            (0, 0)
        } else {
            (1 + (u - 1) / self.n_theta, (u - 1) % self.n_theta)
        }
    }

    pub fn position(&self, u: usize) -> Complex64 {
        let (k, j) = self.ring_and_angle(u);
        if k == 0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.radii[k], TAU * j as f64 / self.n_theta as f64)
    }

    /// Corners of the polar cell containing `p` (hub-adjacent cells use the hub).
    pub fn cell_corners(&self, p: Complex64) -> Vec<usize> {
        let r = p.norm();
        let k = self.radii.partition_point(|&x| x <= r).saturating_sub(1);
        let theta = p.arg().rem_euclid(TAU);
        let j = ((theta / TAU * self.n_theta as f64).floor() as usize) % self.n_theta;
        let mut out = Vec::with_capacity(4);
        for kk in [k, k + 1] {
            if kk >= self.radii.len() {
                continue;
            }
            if kk == 0 {
                out.push(0);
            } else {
                out.push(self.node_index(kk, j));
                out.push(self.node_index(kk, j + 1));
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for (v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Binary cache: magic, version, key `(spec hash, h, r_max)`, then the arrays.
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        let hash = self.spec_hash.as_bytes();
        buf.extend_from_slice(&(hash.len() as u64).to_le_bytes());
        buf.extend_from_slice(hash);
        buf.extend_from_slice(&self.h.to_le_bytes());
        buf.extend_from_slice(&self.r_max.to_le_bytes());
        buf.extend_from_slice(&(self.n_theta as u64).to_le_bytes());
        write_f64s(&mut buf, &self.radii);
        buf.extend_from_slice(&(self.offsets.len() as u64).to_le_bytes());
        for &o in &self.offsets {
            buf.extend_from_slice(&(o as u64).to_le_bytes());
        }
        buf.extend_from_slice(&(self.targets.len() as u64).to_le_bytes());
        for &t in &self.targets {
            buf.extend_from_slice(&t.to_le_bytes());
        }
        write_f64s(&mut buf, &self.weights);
        write_atomic(path, &buf)
    }

    /// Loads a cached graph, rejecting it unless the key matches.
    pub fn load_cache(path: &Path, spec: &WeightSpec, opts: GraphBuildOptions) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut rd = Reader { bytes: &bytes, pos: 0 };
        if rd.take(4)? != CACHE_MAGIC || rd.u32()? != CACHE_VERSION {
            return Err(Error::Config(format!("{} is not a graph cache", path.display())));
        }
        let hash_len = rd.u64()? as usize;
        let hash = String::from_utf8(rd.take(hash_len)?.to_vec())
            .map_err(|_| Error::Config("corrupt graph cache".into()))?;
        let h = rd.f64()?;
        let r_max = rd.f64()?;
        if hash != spec.spec_hash() || h != opts.h || r_max != opts.r_max {
            return Err(Error::Config(format!("graph cache {} has a different key", path.display())));
        }
        let n_theta = rd.u64()? as usize;
        let radii = rd.f64s()?;
        let n_off = rd.u64()? as usize;
        let offsets = (0..n_off).map(|_| rd.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        let n_t = rd.u64()? as usize;
        let targets = (0..n_t).map(|_| rd.u32()).collect::<Result<Vec<_>>>()?;
        let weights = rd.f64s()?;
        Ok(MetricGraph { spec_hash: hash, r_max, h, radii, n_theta, offsets, targets, weights })
    }
}

fn write_f64s(buf: &mut Vec<u8>, xs: &[f64]) {
    buf.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Config("truncated graph cache".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        (0..n).map(|_| self.f64()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(r_max: f64, h: f64) -> GraphBuildOptions {
        GraphBuildOptions { r_max, h }
    }

    #[test]
    fn builds_connected_finite_graph() {
        for spec in [WeightSpec::standard(1.0), WeightSpec::exponential(1.0, 1.0, 0.5)] {
            let g = MetricGraph::build(&spec, opts(0.9, 0.02)).unwrap();
            assert!(g.weights.iter().all(|w| w.is_finite() && *w > 0.0));
            assert!(g.is_connected());
            assert!(*g.ring_radii().last().unwrap() <= 0.9);
        }
    }

    #[test]
    fn node_count_scales_quadratically() {
        let spec = WeightSpec::exponential(1.0, 1.0, 0.5);
        let coarse = MetricGraph::build(&spec, opts(0.9, 0.04)).unwrap().node_count() as f64;
        let fine = MetricGraph::build(&spec, opts(0.9, 0.02)).unwrap().node_count() as f64;
        let ratio = fine / coarse;
        assert!((ratio / 4.0 - 1.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn weights_are_symmetric() {
        let g = MetricGraph::build(&WeightSpec::standard(0.5), opts(0.8, 0.05)).unwrap();
        for u in 0..g.node_count() {
            for (v, w) in g.neighbors(u) {
                let back = g.neighbors(v).find(|&(t, _)| t == u).unwrap().1;
                assert_eq!(w, back);
            }
        }
    }

    #[test]
    fn rotation_by_one_angle_step_preserves_weights() {
        let g = MetricGraph::build(&WeightSpec::exponential(0.5, 2.0, 0.3), opts(0.85, 0.03)).unwrap();
        for u in 1..g.node_count() {
            let (k, j) = g.ring_and_angle(u);
            let ru = g.node_index(k, j + 1);
            let mut a: Vec<(usize, usize, f64)> = g
                .neighbors(u)
                .map(|(v, w)| {
                    let (kv, jv) = g.ring_and_angle(v);
                    (kv, if kv == 0 { 0 } else { (jv + 1) % g.n_theta }, w)
                })
                .collect();
            let mut b: Vec<(usize, usize, f64)> = g
                .neighbors(ru)
                .map(|(v, w)| {
                    let (kv, jv) = g.ring_and_angle(v);
                    (kv, jv, w)
                })
                .collect();
            a.sort_by_key(|x| (x.0, x.1));
            b.sort_by_key(|x| (x.0, x.1));
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!((x.0, x.1), (y.0, y.1));
                assert!((x.2 - y.2).abs() <= 1e-12 * x.2);
            }
        }
    }

    #[test]
    fn smaller_rmax_is_a_subgraph() {
        let spec = WeightSpec::standard(1.0);
        let small = MetricGraph::build(&spec, opts(0.6, 0.05)).unwrap();
        let big = MetricGraph::build(&spec, opts(0.8, 0.05)).unwrap();
        assert_eq!(small.radii[..], big.radii[..small.radii.len()]);
        assert_eq!(small.n_theta, big.n_theta);
    }

    #[test]
    fn too_coarse_is_config_error() {
        let err = MetricGraph::build(&WeightSpec::standard(1.0), opts(0.5, 0.9)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(MetricGraph::build(&WeightSpec::standard(1.0), opts(1.0, 0.01)).is_err());
    }

    #[test]
    fn cache_round_trip_and_key_check() {
        let spec = WeightSpec::standard(1.0);
        let o = opts(0.7, 0.05);
        let g = MetricGraph::build(&spec, o).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.bin");
        g.save_cache(&path).unwrap();
        assert_eq!(MetricGraph::load_cache(&path, &spec, o).unwrap(), g);
        assert!(MetricGraph::load_cache(&path, &spec, opts(0.7, 0.04)).is_err());
        assert!(MetricGraph::load_cache(&path, &WeightSpec::standard(2.0), o).is_err());
    }

    #[test]
    fn segment_length_of_radial_segment() {
        // τ = 1 − r² for A = ½
        let spec = WeightSpec::standard(0.5);
        let l = segment_length(&spec, Complex64::new(0.0, 0.0), Complex64::new(0.1, 0.0));
        assert!((l - 0.1f64.atanh()).abs() < 1e-7);
    }
}
