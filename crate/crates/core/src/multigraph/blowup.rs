//! Weighted blowup of a graph along bias windows.
//!
//! Each vertex `v` with bias class `i` is replaced by one copy per class in
//! the radius-`w` window around `i`. The weight of an edge `u -> v` is split
//! evenly over all copy pairs in the 2D window around the pair of classes.
//! The blowup keeps the total weight, every bias and the Max-DICUT value.

use super::{Multigraph, VertexId};
use crate::error::{invalid, Result};
use crate::partition::{stats_bias_index, ThresholdVector};
use crate::smoothing::window_1d;

/// A blown-up graph and the origin of each of its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Blowup {
    pub graph: Multigraph,
    /// `copies[k]` is `(original vertex, bias class)` for vertex `k + 1`.
    pub copies: Vec<(VertexId, usize)>,
}

impl Multigraph {
    /// Builds the blowup along the bias classes of `t` with window radius
    /// `w`. The graph must have no isolated vertices.
    pub fn blowup(&self, t: &ThresholdVector, w: usize) -> Result<Blowup> {
        let l = t.len();
        let mut first = Vec::with_capacity(self.n());
        let mut class = Vec::with_capacity(self.n());
        let mut copies = Vec::new();
        for (idx, s) in self.all_stats().iter().enumerate() {
            let v = idx as VertexId + 1;
            let i = stats_bias_index(t, s)?
                .ok_or_else(|| invalid(format!("vertex {v} is isolated; strip isolated vertices first")))?;
            first.push(copies.len());
            class.push(i);
            copies.extend(window_1d(w, l, i).map(|c| (v, c)));
        }

        let mut graph = Multigraph::new(copies.len());
        for e in self.edges() {
            let (u, v) = (e.src as usize - 1, e.dst as usize - 1);
            let (wu, wv) = (window_1d(w, l, class[u]), window_1d(w, l, class[v]));
            let (su, sv) = (wu.clone().count(), wv.clone().count());
            let share = e.weight / (su * sv) as f64;
            for a in 0..su {
                for b in 0..sv {
                    let cu = (first[u] + a + 1) as VertexId;
                    let cv = (first[v] + b + 1) as VertexId;
                    graph.add_weighted_edge(cu, cv, share)?;
                }
            }
        }
        Ok(Blowup { graph, copies })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_zero_is_isomorphic() {
        let g = Multigraph::from_pairs(3, &[(1, 2), (2, 3), (3, 1), (1, 3)]).unwrap();
        let t = ThresholdVector::uniform_bias(4).unwrap();
        let b = g.blowup(&t, 0).unwrap();
        assert_eq!(b.graph, g);
        assert_eq!(b.copies.iter().map(|c| c.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn single_edge() {
        let g = Multigraph::from_pairs(2, &[(1, 2)]).unwrap();
        let t = ThresholdVector::uniform_bias(3).unwrap();
        let b = g.blowup(&t, 1).unwrap();
        // bias +1 sits in class 2, bias -1 in class 0; both windows have 2 classes
        assert_eq!(b.copies, vec![(1, 1), (1, 2), (2, 0), (2, 1)]);
        assert_eq!(b.graph.edge_count(), 4);
        assert_eq!(b.graph.total_weight(), 1.0);
        for (k, &(v, _)) in b.copies.iter().enumerate() {
            let orig = g.vertex_stats(v).unwrap().bias.unwrap();
            let got = b.graph.vertex_stats(k as VertexId + 1).unwrap().bias.unwrap();
            assert!((orig - got).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_value_is_kept() {
        let g = Multigraph::from_pairs(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let t = ThresholdVector::uniform_bias(4).unwrap();
        let b = g.blowup(&t, 1).unwrap();
        let val = b.graph.max_dicut_bruteforce().unwrap().value;
        assert!((val - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_isolated_vertices() {
        let g = Multigraph::from_pairs(3, &[(1, 2)]).unwrap();
        let t = ThresholdVector::uniform_bias(3).unwrap();
        assert!(g.blowup(&t, 1).is_err());
    }
}
