use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::graph::{segment_length, MetricGraph};
use crate::error::{Error, Result};
use crate::weights::WeightSpec;

const NO_PRED: u32 = u32::MAX;

/// A distance value with the τ-length of the endpoint snap segments as error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub distance: f64,
    pub snap_error: f64,
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| self.node.cmp(&other.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_inside(graph: &MetricGraph, spec: &WeightSpec, p: Complex64) -> Result<()> {
    if graph.spec_hash != spec.spec_hash() {
        return Err(Error::Config("metric graph was built for a different weight".into()));
    }
    if !(p.norm() <= graph.r_max) {
        return Err(Error::Domain(format!(
            "|{p}| = {} exceeds the graph radius {}",
            p.norm(),
            graph.r_max
        )));
    }
    Ok(())
}

/// Graph distances from one source point to every node.
///
/// The source enters through the corners of its polar cell, each seeded with
/// the τ-length of the straight snap segment.
pub struct DistanceField<'g> {
    graph: &'g MetricGraph,
    spec: &'g WeightSpec,
    source: Complex64,
    dist: Vec<f64>,
    pred: Vec<u32>,
    seed_len: Vec<f64>,
}

impl<'g> DistanceField<'g> {
    pub fn new(graph: &'g MetricGraph, spec: &'g WeightSpec, source: Complex64) -> Result<Self> {
        check_inside(graph, spec, source)?;
        let n = graph.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NO_PRED; n];
        let mut seed_len = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        for a in graph.cell_corners(source) {
            let l = segment_length(spec, source, graph.position(a));
            seed_len[a] = l;
            if l < dist[a] {
                dist[a] = l;
                heap.push(State { cost: l, node: a });
            }
        }
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for (v, w) in graph.neighbors(node) {
                let next = cost + w;
                if next < dist[v] {
                    dist[v] = next;
                    pred[v] = node as u32;
                    heap.push(State { cost: next, node: v });
                }
            }
        }
        Ok(DistanceField { graph, spec, source, dist, pred, seed_len })
    }

    pub fn node_distance(&self, u: usize) -> f64 {
        self.dist[u]
    }

    /// Distance from the source to `target`, with the chosen exit corner
    /// (`None` when the direct segment wins).
    fn query(&self, target: Complex64) -> Result<(DistanceEstimate, Option<usize>)> {
        check_inside(self.graph, self.spec, target)?;
        let mut best = (f64::INFINITY, 0.0, None);
        for b in self.graph.cell_corners(target) {
            let tail = segment_length(self.spec, self.graph.position(b), target);
            let total = self.dist[b] + tail;
            if total < best.0 {
                let root = self.root_of(b);
                best = (total, tail + self.seed_len[root], Some(b));
            }
        }
        if (target - self.source).norm() <= 2.0 * self.graph.h {
            let direct = segment_length(self.spec, self.source, target);
            if direct <= best.0 {
                best = (direct, 0.0, None);
            }
        }
        Ok((DistanceEstimate { distance: best.0, snap_error: best.1 }, best.2))
    }

    pub fn distance_to(&self, target: Complex64) -> Result<DistanceEstimate> {
        Ok(self.query(target)?.0)
    }

    fn root_of(&self, mut u: usize) -> usize {
        while self.pred[u] != NO_PRED {
            u = self.pred[u] as usize;
        }
        u
    }

    /// The piecewise linear curve realising [`Self::distance_to`].
    pub fn path_to(&self, target: Complex64) -> Result<Vec<Complex64>> {
        let (_, exit) = self.query(target)?;
        let mut pts = vec![target];
        if let Some(mut u) = exit {
            pts.push(self.graph.position(u));
            while self.pred[u] != NO_PRED {
                u = self.pred[u] as usize;
                pts.push(self.graph.position(u));
            }
        }
        pts.push(self.source);
        pts.reverse();
        Ok(pts)
    }
}

/// Endpoints in a fixed order so that `distance(z, w)` and `distance(w, z)`
/// run the identical computation.
fn canonical(z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    if (z.re, z.im) <= (w.re, w.im) {
        (z, w)
    } else {
        (w, z)
    }
}

/// Approximate `d_φ(z, w)`: shortest graph path between the cell corners of
/// the endpoints plus the snap segments, or the direct segment for nearby points.
pub fn distance(graph: &MetricGraph, spec: &WeightSpec, z: Complex64, w: Complex64) -> Result<DistanceEstimate> {
    let (a, b) = canonical(z, w);
    check_inside(graph, spec, b)?;
    DistanceField::new(graph, spec, a)?.distance_to(b)
}

/// As [`distance`], also returning the realising curve from `z` to `w`.
pub fn distance_with_path(
    graph: &MetricGraph,
    spec: &WeightSpec,
    z: Complex64,
    w: Complex64,
) -> Result<(DistanceEstimate, Vec<Complex64>)> {
    let (a, b) = canonical(z, w);
    let field = DistanceField::new(graph, spec, a)?;
    let est = field.distance_to(b)?;
    let mut path = field.path_to(b)?;
    if a != z {
        path.reverse();
    }
    Ok((est, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{radial_distance_oracle, GraphBuildOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn graph(spec: &WeightSpec, r_max: f64, h: f64) -> MetricGraph {
        MetricGraph::build(spec, GraphBuildOptions { r_max, h }).unwrap()
    }

    #[test]
    fn identical_endpoints_give_zero() {
        let spec = WeightSpec::exponential(1.0, 1.0, 0.5);
        let g = graph(&spec, 0.9, 0.02);
        let d = distance(&g, &spec, c(0.31, -0.2), c(0.31, -0.2)).unwrap();
        assert_eq!(d.distance, 0.0);
    }

    #[test]
    fn radial_pair_matches_oracle() {
        let spec = WeightSpec::standard(0.5);
        let g = graph(&spec, 0.95, 0.01);
        let d = distance(&g, &spec, c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        let exact = 0.5f64.atanh();
        assert!((d.distance - exact).abs() / exact <= 0.02, "{}", d.distance);
        let oracle = radial_distance_oracle(&spec, 0.5).unwrap();
        assert!((oracle - exact).abs() < 1e-12);
    }

    #[test]
    fn off_axis_pairs_match_hyperbolic_distance() {
        // for A = ½ the metric is |dz|/(1−|z|²)
        let spec = WeightSpec::standard(0.5);
        let g = graph(&spec, 0.85, 0.01);
        for (z, w) in [(c(0.5, 0.0), c(0.0, 0.5)), (c(0.3, 0.2), c(-0.6, 0.1)), (c(0.7, 0.1), c(0.6, 0.4))] {
            let exact = crate::metric::hyperbolic_distance(z, w).unwrap();
            let d = distance(&g, &spec, z, w).unwrap().distance;
            assert!(d >= exact * (1.0 - 1e-9) && d <= exact * 1.01, "{z} {w}: {d} vs {exact}");
        }
    }

    #[test]
    fn symmetric_exactly() {
        let spec = WeightSpec::exponential(1.0, 1.0, 0.5);
        let g = graph(&spec, 0.9, 0.02);
        let (z, w) = (c(0.4, 0.3), c(-0.6, 0.1));
        assert_eq!(distance(&g, &spec, z, w).unwrap(), distance(&g, &spec, w, z).unwrap());
    }

    #[test]
    fn outside_graph_is_domain_error() {
        let spec = WeightSpec::standard(1.0);
        let g = graph(&spec, 0.8, 0.05);
        assert!(matches!(distance(&g, &spec, c(0.0, 0.0), c(0.85, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn wrong_spec_is_rejected() {
        let spec = WeightSpec::standard(1.0);
        let g = graph(&spec, 0.8, 0.05);
        assert!(matches!(
            distance(&g, &WeightSpec::standard(2.0), c(0.0, 0.0), c(0.5, 0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn path_length_reproduces_distance() {
        let spec = WeightSpec::exponential(1.0, 1.0, 0.5);
        let g = graph(&spec, 0.9, 0.02);
        let (z, w) = (c(0.7, 0.1), c(-0.2, -0.5));
        let (d, path) = distance_with_path(&g, &spec, z, w).unwrap();
        assert_eq!(path.first(), Some(&z));
        assert_eq!(path.last(), Some(&w));
        // accurate τ-length of the polygon; the graph only differs by Simpson error
        let len: f64 = path
            .windows(2)
            .map(|s| {
                let f = |t: f64| (s[1] - s[0]).norm() / spec.tau_r((s[0] + (s[1] - s[0]) * t).norm());
                crate::quadrature::integrate(f, &[0.0, 1.0], 1e-12, 0.0, 200).unwrap().value
            })
            .sum();
        assert!((len - d.distance).abs() < 1e-5 * d.distance, "{len} {}", d.distance);
    }
}
