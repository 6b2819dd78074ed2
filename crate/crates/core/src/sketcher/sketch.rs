//! Per-edge sketches and their merge rule.
//!
//! A layer keeps the vertices whose layer hash lands in bucket 0 and the
//! edges touching them. Edges are keyed by stream index. The retained edge
//! set is always the result of replaying all candidate edges in index
//! order and keeping an edge iff one of its endpoints is stored and has
//! fewer than `e_cutoff` retained edges at that point. Pruning inside a
//! partial sketch only drops edges that this global replay drops too, so
//! the merged state is the same for every merge tree.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{invalid, Result};
use crate::hashfam::KWiseHash;
use crate::multigraph::VertexId;
use crate::rng::{derive, dyadic_coin};

const HASH_LABEL: u64 = 0x4841_5348;
const COIN_LABEL: u64 = 0x434f_494e;

/// A retained edge and its position in the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StoredEdge {
    pub index: u64,
    pub src: VertexId,
    pub dst: VertexId,
}

/// State of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LayerSketch {
    /// Too many stored vertices. `trigger` is the edge count of the merge
    /// that overflowed.
    Overflow { trigger: u64 },
    Active {
        vertices: BTreeSet<VertexId>,
        /// Sorted by stream index.
        edges: Vec<StoredEdge>,
        /// Retained degree of every endpoint of a retained edge.
        degree: BTreeMap<VertexId, u64>,
    },
}

impl LayerSketch {
    pub fn empty() -> Self {
        LayerSketch::Active { vertices: BTreeSet::new(), edges: Vec::new(), degree: BTreeMap::new() }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self, LayerSketch::Overflow { .. })
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            LayerSketch::Active { vertices, .. } => vertices.len(),
            LayerSketch::Overflow { .. } => 0,
        }
    }

    pub fn edge_count(&self) -> usize {
        match self {
            LayerSketch::Active { edges, .. } => edges.len(),
            LayerSketch::Overflow { .. } => 0,
        }
    }
}

/// Edge counter plus one state per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSketch {
    pub m: u64,
    pub layers: Vec<LayerSketch>,
}

impl FullSketch {
    pub fn empty(k: usize) -> Self {
        Self { m: 0, layers: vec![LayerSketch::empty(); k] }
    }

    pub fn has_overflow(&self) -> bool {
        self.layers.iter().any(LayerSketch::is_overflow)
    }
}

/// Replays `edges` (sorted by index) starting from `(kept, degree)`.
fn replay(
    vertices: &BTreeSet<VertexId>,
    e_cutoff: u64,
    kept: &mut Vec<StoredEdge>,
    degree: &mut BTreeMap<VertexId, u64>,
    edges: impl IntoIterator<Item = StoredEdge>,
) {
    for e in edges {
        let open = |v: VertexId, degree: &BTreeMap<VertexId, u64>| {
            vertices.contains(&v) && degree.get(&v).copied().unwrap_or(0) < e_cutoff
        };
        if open(e.src, degree) || open(e.dst, degree) {
            *degree.entry(e.src).or_insert(0) += 1;
            *degree.entry(e.dst).or_insert(0) += 1;
            kept.push(e);
        }
    }
}

/// Merge of two index-sorted lists.
fn merge_sorted(a: Vec<StoredEdge>, b: Vec<StoredEdge>) -> Vec<StoredEdge> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (a.into_iter().peekable(), b.into_iter().peekable());
    loop {
        match (ia.peek(), ib.peek()) {
            (Some(x), Some(y)) => {
                if x <= y {
                    out.push(ia.next().unwrap());
                } else {
                    out.push(ib.next().unwrap());
                }
            }
            (Some(_), None) => out.extend(ia.by_ref()),
            (None, Some(_)) => out.extend(ib.by_ref()),
            (None, None) => return out,
        }
    }
}

fn combine_layer(x: LayerSketch, y: LayerSketch, m: u64, v_cutoff: u64, e_cutoff: u64) -> LayerSketch {
    let (
        LayerSketch::Active { vertices: v1, edges: e1, degree: d1 },
        LayerSketch::Active { vertices: v2, edges: e2, degree: d2 },
    ) = (x, y)
    else {
        return LayerSketch::Overflow { trigger: m };
    };
    // extend the larger vertex set
    let (mut vertices, small) = if v1.len() >= v2.len() { (v1, v2) } else { (v2, v1) };
    vertices.extend(small);
    if vertices.len() as u64 > v_cutoff {
        return LayerSketch::Overflow { trigger: m };
    }

    let before = |a: &[StoredEdge], b: &[StoredEdge]| match (a.last(), b.first()) {
        (Some(l), Some(f)) => l.index < f.index,
        _ => true,
    };
    let (edges, degree) = if before(&e1, &e2) {
        let (mut kept, mut degree) = (e1, d1);
        replay(&vertices, e_cutoff, &mut kept, &mut degree, e2);
        (kept, degree)
    } else if before(&e2, &e1) {
        let (mut kept, mut degree) = (e2, d2);
        replay(&vertices, e_cutoff, &mut kept, &mut degree, e1);
        (kept, degree)
    } else {
        let mut kept = Vec::new();
        let mut degree = BTreeMap::new();
        replay(&vertices, e_cutoff, &mut kept, &mut degree, merge_sorted(e1, e2));
        (kept, degree)
    };
    LayerSketch::Active { vertices, edges, degree }
}

/// Stored counts of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpace {
    pub a: u32,
    pub vertices: usize,
    pub edges: usize,
    pub overflow: bool,
    pub trigger: Option<u64>,
    /// Whether the stored counts respect the vertex and edge bounds.
    pub within_bounds: bool,
}

/// Hash functions and coins for one run; turns edges into sketches.
#[derive(Debug, Clone)]
pub struct Sketcher {
    params: ParamSet,
    seed: u64,
    hashes: Vec<KWiseHash>,
}

impl Sketcher {
    /// Samples one 4-wise independent hash per layer from `seed`.
    pub fn new(params: ParamSet, seed: u64) -> Result<Self> {
        let hashes = params
            .layers
            .iter()
            .map(|l| {
                let mut rng = crate::rng::stream(seed, &[HASH_LABEL, l.a as u64]);
                KWiseHash::sample(4, params.n, 1u64 << l.p_exp, &mut rng)
            })
            .collect::<Result<_>>()?;
        Ok(Self { params, seed, hashes })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hashes(&self) -> &[KWiseHash] {
        &self.hashes
    }

    pub fn empty(&self) -> FullSketch {
        FullSketch::empty(self.params.layers.len())
    }

    /// Whether vertex `v` is sampled in layer `a` (0-based).
    pub fn is_sampled(&self, a: usize, v: VertexId) -> bool {
        self.hashes[a].eval_unchecked(v as u64) == 0
    }

    /// Edge coin of layer `a` (0-based) for the edge at `index`.
    pub fn edge_coin(&self, a: usize, index: u64) -> bool {
        let l = &self.params.layers[a];
        dyadic_coin(derive(self.seed, &[COIN_LABEL, index, l.a as u64]), l.q_exp)
    }

    fn check_edge(&self, u: VertexId, v: VertexId) -> Result<()> {
        if u == v {
            return Err(invalid(format!("self-loop at vertex {u}")));
        }
        let n = self.params.n;
        if u == 0 || v == 0 || u as u64 > n || v as u64 > n {
            return Err(invalid(format!("edge ({u}, {v}) outside 1..={n}")));
        }
        Ok(())
    }

    /// Sketch of a single edge.
    pub fn sketch_edge(&self, index: u64, u: VertexId, v: VertexId) -> Result<FullSketch> {
        self.check_edge(u, v)?;
        let layers = (0..self.params.layers.len())
            .map(|a| {
                let mut vertices = BTreeSet::new();
                if self.edge_coin(a, index) {
                    vertices.extend([u, v].into_iter().filter(|&x| self.is_sampled(a, x)));
                }
                let mut edges = Vec::new();
                let mut degree = BTreeMap::new();
                if !vertices.is_empty() {
                    replay(&vertices, self.params.e_cutoff, &mut edges, &mut degree, [StoredEdge {
                        index,
                        src: u,
                        dst: v,
                    }]);
                }
                if vertices.len() as u64 > self.params.v_cutoff {
                    LayerSketch::Overflow { trigger: 1 }
                } else {
                    LayerSketch::Active { vertices, edges, degree }
                }
            })
            .collect();
        Ok(FullSketch { m: 1, layers })
    }

    /// Merges two sketches built with this sketcher.
    pub fn combine(&self, a: FullSketch, b: FullSketch) -> Result<FullSketch> {
        let k = self.params.layers.len();
        if a.layers.len() != k || b.layers.len() != k {
            return Err(invalid("sketches were built with different parameters"));
        }
        let m = a.m + b.m;
        let layers = a
            .layers
            .into_iter()
            .zip(b.layers)
            .map(|(x, y)| combine_layer(x, y, m, self.params.v_cutoff, self.params.e_cutoff))
            .collect();
        Ok(FullSketch { m, layers })
    }

    /// Adds one edge to `sketch` in place. Same result as combining with
    /// [`sketch_edge`](Self::sketch_edge).
    pub fn push_edge(&self, sketch: &mut FullSketch, index: u64, u: VertexId, v: VertexId) -> Result<()> {
        let single = self.sketch_edge(index, u, v)?;
        let current = std::mem::replace(sketch, FullSketch::empty(0));
        *sketch = self.combine(current, single)?;
        Ok(())
    }

    /// Per-layer counts, checked against `v_cutoff` and
    /// `v_cutoff * e_cutoff`.
    pub fn space_report(&self, s: &FullSketch) -> Vec<LayerSpace> {
        space_report(&self.params, s)
    }
}

pub fn space_report(params: &ParamSet, s: &FullSketch) -> Vec<LayerSpace> {
    let edge_bound = params.v_cutoff.saturating_mul(params.e_cutoff);
    s.layers
        .iter()
        .zip(&params.layers)
        .map(|(layer, lp)| {
            let (vertices, edges) = (layer.vertex_count(), layer.edge_count());
            LayerSpace {
                a: lp.a,
                vertices,
                edges,
                overflow: layer.is_overflow(),
                trigger: match layer {
                    LayerSketch::Overflow { trigger } => Some(*trigger),
                    LayerSketch::Active { .. } => None,
                },
                within_bounds: vertices as u64 <= params.v_cutoff && edges as u64 <= edge_bound,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::ThresholdVector;
    use crate::sketcher::params::ParamOverrides;

    fn params(n: u64, m_hat: f64, ov: ParamOverrides) -> ParamSet {
        let t = ThresholdVector::bias(vec![-1.0, -0.5, 0.5, 1.0]).unwrap();
        ParamSet::derive(0.5, n, m_hat, 1.0, 1.0, &t, ov).unwrap()
    }

    fn full(n: u64, m_hat: f64) -> Sketcher {
        Sketcher::new(params(n, m_hat, ParamOverrides { full_sampling: true, ..Default::default() }), 1).unwrap()
    }

    #[test]
    fn single_edge_full_sampling() {
        let s = full(4, 8.0);
        let sk = s.sketch_edge(0, 1, 2).unwrap();
        assert_eq!(sk.m, 1);
        for layer in &sk.layers {
            let LayerSketch::Active { vertices, edges, .. } = layer else { panic!() };
            assert_eq!(vertices.iter().copied().collect::<Vec<_>>(), vec![1, 2]);
            assert_eq!(edges.len(), 1);
        }
        assert!(s.sketch_edge(1, 2, 2).is_err());
        assert!(s.sketch_edge(1, 2, 5).is_err());
    }

    #[test]
    fn combine_with_empty_is_identity() {
        let s = full(6, 8.0);
        let mut sk = s.empty();
        for (i, (u, v)) in [(1, 2), (2, 3), (4, 1)].into_iter().enumerate() {
            s.push_edge(&mut sk, i as u64, u, v).unwrap();
        }
        let merged = s.combine(sk.clone(), s.empty()).unwrap();
        assert_eq!(merged, sk);
        let merged = s.combine(s.empty(), sk.clone()).unwrap();
        assert_eq!(merged, sk);
    }

    #[test]
    fn vertex_cutoff_overflows() {
        let ov = ParamOverrides { full_sampling: true, v_cutoff: Some(3), e_cutoff: None };
        let s = Sketcher::new(params(10, 8.0, ov), 1).unwrap();
        let a = s.combine(s.sketch_edge(0, 1, 2).unwrap(), s.sketch_edge(1, 3, 1).unwrap()).unwrap();
        assert!(!a.has_overflow());
        let b = s.combine(a, s.sketch_edge(2, 4, 1).unwrap()).unwrap();
        assert!(b.layers.iter().all(|l| matches!(l, LayerSketch::Overflow { trigger: 3 })));
        // overflow is absorbing
        let c = s.combine(b, s.empty()).unwrap();
        assert!(c.layers.iter().all(LayerSketch::is_overflow));
        let report = s.space_report(&c);
        assert!(report.iter().all(|r| r.overflow && r.trigger == Some(3) && r.vertices == 0));
    }

    #[test]
    fn edge_cutoff_retention() {
        // star 1 -> 2..=6 with e_cutoff 2: vertex 1 saturates after two
        // edges, but leaves keep the rest alive
        let ov = ParamOverrides { full_sampling: true, v_cutoff: None, e_cutoff: Some(2) };
        let s = Sketcher::new(params(6, 8.0, ov), 1).unwrap();
        let mut sk = s.empty();
        for v in 2..=6 {
            s.push_edge(&mut sk, v as u64, 1, v).unwrap();
        }
        let LayerSketch::Active { edges, degree, .. } = &sk.layers[0] else { panic!() };
        assert_eq!(edges.len(), 5);
        assert_eq!(degree[&1], 5);

        // a second pass of the same pairs: every leaf is now saturated too,
        // except through their own count
        for v in 2..=6 {
            s.push_edge(&mut sk, 10 + v as u64, 1, v).unwrap();
        }
        let LayerSketch::Active { edges, degree, .. } = &sk.layers[0] else { panic!() };
        assert_eq!(edges.len(), 10);
        assert!(degree.values().skip(1).all(|&d| d == 2));
        for v in 2..=6 {
            s.push_edge(&mut sk, 20 + v as u64, 1, v).unwrap();
        }
        let LayerSketch::Active { edges, .. } = &sk.layers[0] else { panic!() };
        assert_eq!(edges.len(), 10);
    }

    #[test]
    fn merge_tree_does_not_matter() {
        let ov = ParamOverrides { full_sampling: false, v_cutoff: None, e_cutoff: Some(3) };
        let s = Sketcher::new(params(30, 200.0, ov), 5).unwrap();
        let mut rng = crate::rng::stream(3, &[]);
        use rand::Rng;
        let edges: Vec<(u32, u32)> = (0..200)
            .map(|_| {
                let u = rng.gen_range(1..=30);
                let mut v = rng.gen_range(1..=29);
                if v >= u {
                    v += 1;
                }
                (u, v)
            })
            .collect();
        let singles: Vec<FullSketch> = edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| s.sketch_edge(i as u64, u, v).unwrap())
            .collect();
        let sequential = singles.iter().cloned().reduce(|a, b| s.combine(a, b).unwrap()).unwrap();
        // balanced tree
        let mut level = singles.clone();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|c| if c.len() == 2 { s.combine(c[0].clone(), c[1].clone()).unwrap() } else { c[0].clone() })
                .collect();
        }
        assert_eq!(level[0], sequential);
        // interleaved halves, merged out of order
        let odd = singles.iter().skip(1).step_by(2).cloned().reduce(|a, b| s.combine(b, a).unwrap()).unwrap();
        let even = singles.iter().step_by(2).cloned().reduce(|a, b| s.combine(a, b).unwrap()).unwrap();
        assert_eq!(s.combine(odd, even).unwrap(), sequential);
    }
}
