//! Snapshot matrices and refined snapshot arrays.
//!
//! A snapshot records, for each ordered pair of bias classes `(i, j)`, the
//! fraction of edge weight going from class `i` to class `j`. The refined
//! snapshot splits that mass further by the degree classes `(a, b)` of the
//! endpoints. Edges with an isolated endpoint cannot occur, so no mass is
//! ever dropped.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::multigraph::Multigraph;
use crate::partition::{stats_bias_index, stats_degree_index, DegreeThresholds, ThresholdVector};

/// Dense `l x l` matrix, row-major. Serialized as nested JSON arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SnapshotMatrix {
    l: usize,
    data: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn zeros(l: usize) -> Self {
        Self { l, data: vec![0.0; l * l] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let l = rows.len();
        if rows.iter().any(|r| r.len() != l) {
            return Err(invalid("snapshot matrix must be square"));
        }
        Ok(Self { l, data: rows.into_iter().flatten().collect() })
    }

    pub(crate) fn from_data(l: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), l * l);
        Self { l, data }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.l.max(1)).take(self.l).map(<[f64]>::to_vec).collect()
    }

    /// Side length `l`.
    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.l + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.l + j] = x;
    }

    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.l + j] += x;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Entrywise 1-norm distance.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.l != other.l {
            return Err(invalid(format!("matrix sides differ: {} vs {}", self.l, other.l)));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).sum())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SnapshotMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SnapshotMatrix> for Vec<Vec<f64>> {
    fn from(m: SnapshotMatrix) -> Self {
        m.rows()
    }
}

type Nested4 = Vec<Vec<Vec<Vec<f64>>>>;

/// Dense `k x k x l x l` array indexed `(a, b, i, j)`: degree class of the
/// tail, degree class of the head, bias class of the tail, bias class of the
/// head. Serialized as four levels of nested JSON arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Nested4", into = "Nested4")]
pub struct RefinedSnapshotArray {
    k: usize,
    l: usize,
    data: Vec<f64>,
}

impl RefinedSnapshotArray {
    pub fn zeros(k: usize, l: usize) -> Self {
        Self { k, l, data: vec![0.0; k * k * l * l] }
    }

    pub(crate) fn from_data(k: usize, l: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), k * k * l * l);
        Self { k, l, data }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `[k, k, l, l]`.
    pub fn dims(&self) -> [usize; 4] {
        [self.k, self.k, self.l, self.l]
    }

    #[inline]
    pub fn offset(&self, [a, b, i, j]: [usize; 4]) -> usize {
        ((a * self.k + b) * self.l + i) * self.l + j
    }

    /// Inverse of [`offset`](Self::offset).
    pub fn index_at(&self, mut off: usize) -> [usize; 4] {
        let j = off % self.l;
        off /= self.l;
        let i = off % self.l;
        off /= self.l;
        [off / self.k, off % self.k, i, j]
    }

    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; 4], x: f64) {
        let o = self.offset(idx);
        self.data[o] = x;
    }

    pub fn add(&mut self, idx: [usize; 4], x: f64) {
        let o = self.offset(idx);
        self.data[o] += x;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn project(&self) -> SnapshotMatrix {
        project(self)
    }
}

impl TryFrom<Nested4> for RefinedSnapshotArray {
    type Error = Error;

    fn try_from(v: Nested4) -> Result<Self> {
        let k = v.len();
        let l = v.first().and_then(|x| x.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(k * k * l * l);
        for va in &v {
            if va.len() != k {
                return Err(invalid("refined snapshot array must be k x k x l x l"));
            }
            for vb in va {
                if vb.len() != l || vb.iter().any(|vi| vi.len() != l) {
                    return Err(invalid("refined snapshot array must be k x k x l x l"));
                }
                data.extend(vb.iter().flatten());
            }
        }
        Ok(Self { k, l, data })
    }
}

impl From<RefinedSnapshotArray> for Nested4 {
    fn from(a: RefinedSnapshotArray) -> Self {
        let (k, l) = (a.k, a.l);
        (0..k)
            .map(|x| {
                (0..k)
                    .map(|y| {
                        (0..l)
                            .map(|i| (0..l).map(|j| a.get([x, y, i, j])).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Sums out the two degree axes.
pub fn project(a: &RefinedSnapshotArray) -> SnapshotMatrix {
    let ll = a.l * a.l;
    let mut out = vec![0.0; ll];
    for block in a.data.chunks(ll.max(1)) {
        for (o, x) in out.iter_mut().zip(block) {
            *o += x;
        }
    }
    SnapshotMatrix::from_data(a.l, out)
}

/// Exact snapshot of `g` with bias thresholds `t`.
pub fn compute_snapshot(g: &Multigraph, t: &ThresholdVector) -> Result<SnapshotMatrix> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::UndefinedValue("snapshot of a graph with no edge weight".into()));
    }
    let class = bias_classes(g, t)?;
    let mut snap = SnapshotMatrix::zeros(t.len());
    for e in g.edges() {
        if let (Some(i), Some(j)) = (class[e.src as usize - 1], class[e.dst as usize - 1]) {
            snap.add(i, j, e.weight);
        }
    }
    snap.data.iter_mut().for_each(|x| *x /= m);
    Ok(snap)
}

/// Exact refined snapshot. Every nonisolated degree must lie in `[1, d_k]`.
pub fn compute_refined_snapshot(
    g: &Multigraph,
    d: &DegreeThresholds,
    t: &ThresholdVector,
) -> Result<RefinedSnapshotArray> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::UndefinedValue("refined snapshot of a graph with no edge weight".into()));
    }
    let stats = g.all_stats();
    let mut dclass = Vec::with_capacity(stats.len());
    for (v, s) in stats.iter().enumerate() {
        let c = stats_degree_index(d, s).map_err(|_| {
            Error::Precondition(format!(
                "vertex {} has degree {} outside [1, {}]",
                v + 1,
                s.deg,
                d.top()
            ))
        })?;
        dclass.push(c);
    }
    let bclass = bias_classes(g, t)?;
    let mut arr = RefinedSnapshotArray::zeros(d.len(), t.len());
    for e in g.edges() {
        let (u, v) = (e.src as usize - 1, e.dst as usize - 1);
        if let (Some(a), Some(b), Some(i), Some(j)) = (dclass[u], dclass[v], bclass[u], bclass[v]) {
            arr.add([a, b, i, j], e.weight);
        }
    }
    arr.scale(1.0 / m);
    Ok(arr)
}

fn bias_classes(g: &Multigraph, t: &ThresholdVector) -> Result<Vec<Option<usize>>> {
    g.all_stats().iter().map(|s| stats_bias_index(t, s)).collect()
}
