//! Directed multigraphs without self-loops.
//!
//! Vertices are labeled `1..=n`. Edges keep their insertion order, which is
//! also the stream order when a graph is read from an edge-stream file.
//! Weights are nonnegative reals; unit weights encode a multigraph.

mod blowup;
mod bruteforce;
mod format;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use blowup::Blowup;
pub use bruteforce::{DEFAULT_BRUTE_FORCE_CEILING, MaxDicut};
pub use format::{parse_edge_stream, read_edge_stream, write_edge_stream, EdgeStream};

/// Vertex label, 1-based.
pub type VertexId = u32;

/// A directed weighted edge `src -> dst`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: f64,
}

/// Out/in degree and bias of a single vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexStats {
    pub deg_out: f64,
    pub deg_in: f64,
    pub deg: f64,
    /// `(deg_out - deg_in) / deg`; `None` for isolated vertices.
    pub bias: Option<f64>,
}

impl VertexStats {
    fn from_degrees(deg_out: f64, deg_in: f64) -> Self {
        let deg = deg_out + deg_in;
        let bias = (deg > 0.0).then(|| (deg_out - deg_in) / deg);
        Self { deg_out, deg_in, deg, bias }
    }

    pub fn is_isolated(&self) -> bool {
        self.bias.is_none()
    }
}

/// A 0/1 assignment to the vertices. Edge `(u, v)` is satisfied iff
/// `x_u = 1` and `x_v = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cut {
    bits: Vec<bool>,
}

impl Cut {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Side of vertex `v` (1-based).
    pub fn side(&self, v: VertexId) -> bool {
        self.bits[v as usize - 1]
    }

    pub fn set(&mut self, v: VertexId, side: bool) {
        self.bits[v as usize - 1] = side;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Uniformly random assignment.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { bits: (0..n).map(|_| rng.gen()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Multigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl Multigraph {
    /// Empty graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    /// Unit-weight multigraph from an ordered list of pairs.
    pub fn from_pairs(n: usize, pairs: &[(VertexId, VertexId)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(u, v) in pairs {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.add_weighted_edge(u, v, 1.0)
    }

    pub fn add_weighted_edge(&mut self, u: VertexId, v: VertexId, weight: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(invalid(format!("self-loop at vertex {u}")));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(invalid(format!("edge weight {weight} is not a nonnegative real")));
        }
        self.edges.push(Edge { src: u, dst: v, weight });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True when every edge has weight exactly 1.
    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|e| e.weight == 1.0)
    }

    /// Total weight `m_G`.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v == 0 || v as usize > self.n {
            Err(Error::InvalidArgument(format!("vertex {v} outside 1..={}", self.n)))
        } else {
            Ok(())
        }
    }

    pub fn vertex_stats(&self, v: VertexId) -> Result<VertexStats> {
        self.check_vertex(v)?;
        let (mut out, mut inn) = (0.0, 0.0);
        for e in &self.edges {
            if e.src == v {
                out += e.weight;
            }
            if e.dst == v {
                inn += e.weight;
            }
        }
        Ok(VertexStats::from_degrees(out, inn))
    }

    /// Stats for every vertex; entry `v - 1` belongs to vertex `v`.
    pub fn all_stats(&self) -> Vec<VertexStats> {
        let mut out = vec![0.0; self.n];
        let mut inn = vec![0.0; self.n];
        for e in &self.edges {
            out[e.src as usize - 1] += e.weight;
            inn[e.dst as usize - 1] += e.weight;
        }
        out.into_iter()
            .zip(inn)
            .map(|(o, i)| VertexStats::from_degrees(o, i))
            .collect()
    }

    pub fn nonisolated_count(&self) -> usize {
        self.all_stats().iter().filter(|s| !s.is_isolated()).count()
    }

    /// Satisfied weight of `x`, not normalized.
    pub fn cut_weight(&self, x: &Cut) -> Result<f64> {
        if x.len() != self.n {
            return Err(invalid(format!("cut has length {}, graph has {} vertices", x.len(), self.n)));
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| x.side(e.src) && !x.side(e.dst))
            .map(|e| e.weight)
            .sum())
    }

    /// Fraction of edge weight satisfied by `x`.
    pub fn cut_value(&self, x: &Cut) -> Result<f64> {
        let m = self.total_weight();
        if m <= 0.0 {
            return Err(Error::UndefinedValue("cut value of a graph with no edge weight".into()));
        }
        Ok(self.cut_weight(x)? / m)
    }

    /// Keeps every edge independently with probability `p`.
    pub fn sparsify(&self, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("sparsification probability {p} outside (0, 1]")));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        let mut rng = crate::rng::stream(seed, &[0x5eed_5a12]);
        let edges = self.edges.iter().copied().filter(|_| rng.gen_bool(p)).collect();
        Ok(Self { n: self.n, edges })
    }

    /// Drops isolated vertices and relabels the rest densely in increasing
    /// order. Returns the compacted graph and, for each new label `i + 1`,
    /// the original label `map[i]`.
    pub fn strip_isolated(&self) -> (Self, Vec<VertexId>) {
        let stats = self.all_stats();
        let mut relabel = vec![0; self.n];
        let mut map = Vec::new();
        for (i, s) in stats.iter().enumerate() {
            if !s.is_isolated() {
                map.push(i as VertexId + 1);
                relabel[i] = map.len() as VertexId;
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                src: relabel[e.src as usize - 1],
                dst: relabel[e.dst as usize - 1],
                weight: e.weight,
            })
            .collect();
        (Self { n: map.len(), edges }, map)
    }
}
