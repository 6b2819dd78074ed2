//! Exact Max-DICUT by exhaustive enumeration.
//!
//! Assignments are walked in Gray-code order. Each vertex keeps its flip
//! gain, so one step costs `O(n)` instead of `O(m)`. The top bits are split
//! into independent prefixes that run in parallel; results are reduced in
//! prefix order so the output never depends on scheduling.

use rayon::prelude::*;

use super::{Cut, Multigraph};
use crate::error::{Error, Result};

pub const DEFAULT_BRUTE_FORCE_CEILING: usize = 24;

/// Bits enumerated sequentially inside one parallel task.
const TASK_BITS: usize = 16;

/// Exact maximum cut value and the lexicographically smallest maximizer
/// (vertex 1 compared first, 0 before 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MaxDicut {
    pub value: f64,
    pub cut: Cut,
}

#[derive(Clone, Copy)]
struct Best {
    weight: f64,
    mask: u32,
}

impl Best {
    fn offer(&mut self, weight: f64, mask: u32, tol: f64) {
        if weight > self.weight + tol || ((weight - self.weight).abs() <= tol && mask < self.mask) {
            self.weight = weight;
            self.mask = mask;
        }
    }
}

impl Multigraph {
    /// Exact Max-DICUT value with the default vertex ceiling.
    pub fn max_dicut_bruteforce(&self) -> Result<MaxDicut> {
        self.max_dicut_bruteforce_with_ceiling(DEFAULT_BRUTE_FORCE_CEILING)
    }

    pub fn max_dicut_bruteforce_with_ceiling(&self, ceiling: usize) -> Result<MaxDicut> {
        let n = self.n();
        if n > ceiling || n > 31 {
            return Err(Error::ResourceLimit(format!(
                "brute force over {n} vertices exceeds the ceiling of {ceiling}"
            )));
        }
        let m = self.total_weight();
        if m <= 0.0 {
            return Err(Error::UndefinedValue("Max-DICUT of a graph with no edge weight".into()));
        }

        // Vertex v lives at bit n - v, so integer order is lexicographic order.
        let bit = |v: u32| n - v as usize;
        let mut w = vec![0.0; n * n];
        for e in self.edges() {
            w[bit(e.src) * n + bit(e.dst)] += e.weight;
        }
        let sym: Vec<f64> = (0..n * n).map(|i| w[i] + w[(i % n) * n + i / n]).collect();
        let tol = 1e-12 * m.max(1.0);

        let low = n.min(TASK_BITS);
        let prefixes = 1u32 << (n - low);
        let run = |prefix: u32| -> Best {
            let start = prefix << low;
            let side = |mask: u32, b: usize| (mask >> b) & 1 == 1;
            // gain[y]: change in satisfied weight if y moves from 0 to 1.
            let mut gain = vec![0.0; n];
            let mut value = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let wab = w[a * n + b];
                    if wab == 0.0 {
                        continue;
                    }
                    if side(start, a) && !side(start, b) {
                        value += wab;
                    }
                    if !side(start, b) {
                        gain[a] += wab;
                    }
                    if side(start, a) {
                        gain[b] -= wab;
                    }
                }
            }
            let mut best = Best { weight: value, mask: start };
            let mut mask = start;
            for step in 1u32..(1u32 << low) {
                let y = step.trailing_zeros() as usize;
                let s = if side(mask, y) { -1.0 } else { 1.0 };
                value += s * gain[y];
                mask ^= 1 << y;
                let row = &sym[y * n..y * n + n];
                for (g, &c) in gain.iter_mut().zip(row) {
                    *g -= s * c;
                }
                best.offer(value, mask, tol);
            }
            best
        };

        let results: Vec<Best> = if prefixes > 1 {
            (0..prefixes).into_par_iter().map(run).collect()
        } else {
            vec![run(0)]
        };
        let mut best = results[0];
        for r in &results[1..] {
            best.offer(r.weight, r.mask, tol);
        }

        let cut = Cut::new((1..=n as u32).map(|v| (best.mask >> bit(v)) & 1 == 1).collect());
        // Recompute from scratch; the running sum accumulates rounding.
        let value = self.cut_value(&cut)?;
        Ok(MaxDicut { value, cut })
    }
}
