//! Threshold vectors: bias classes, degree classes and their refinement.
//!
//! Classes are 0-based here. A vector with breakpoints `t_0 < ... < t_l`
//! has `l` classes; class `i` is the half-open interval `[t_i, t_{i+1})`,
//! except that the top endpoint `t_l` belongs to the last class.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::multigraph::{Multigraph, VertexId, VertexStats};

/// Strictly increasing breakpoints. Serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector {
    breakpoints: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = Error;

    fn try_from(breakpoints: Vec<f64>) -> Result<Self> {
        Self::new(breakpoints)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Self {
        t.breakpoints
    }
}

impl ThresholdVector {
    /// General vector: at least two finite, strictly increasing breakpoints.
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(invalid("a threshold vector needs at least two breakpoints"));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(invalid("threshold breakpoints must be finite"));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!("breakpoints not strictly increasing at {} >= {}", w[0], w[1])));
        }
        Ok(Self { breakpoints })
    }

    /// Bias vector: endpoints must be exactly -1 and +1.
    pub fn bias(breakpoints: Vec<f64>) -> Result<Self> {
        let t = Self::new(breakpoints)?;
        if !t.is_bias() {
            return Err(invalid("bias thresholds must start at -1 and end at +1"));
        }
        Ok(t)
    }

    /// `l` equal-width bias classes.
    pub fn uniform_bias(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(invalid("at least one class is required"));
        }
        let mut bps: Vec<f64> = (0..=l).map(|i| -1.0 + 2.0 * i as f64 / l as f64).collect();
        bps[l] = 1.0;
        Self::bias(bps)
    }

    pub fn is_bias(&self) -> bool {
        self.lo() == -1.0 && self.hi() == 1.0
    }

    /// Number of classes `l`.
    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        self.breakpoints[self.len()]
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.windows(2).map(|w| w[1] - w[0])
    }

    /// Narrowest interval width.
    pub fn min_gap(&self) -> f64 {
        self.widths().fold(f64::INFINITY, f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.widths().fold(0.0, f64::max)
    }

    /// Class of `x`.
    pub fn index_of(&self, x: f64) -> Result<usize> {
        if !(x >= self.lo() && x <= self.hi()) {
            return Err(Error::OutOfRange { value: x, lo: self.lo(), hi: self.hi() });
        }
        // number of breakpoints <= x, among t_1..t_l
        let above = self.breakpoints[1..].partition_point(|&b| b <= x);
        Ok(above.min(self.len() - 1))
    }
}

/// Output of [`refine_partition_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub thresholds: ThresholdVector,
    /// Original class of each refined class.
    pub parent: Vec<usize>,
    /// Original classes narrower than `lambda / 2`, kept unsplit.
    pub narrow: Vec<usize>,
}

/// Splits every interval of width `W` into `ceil(W / lambda)` equal parts.
pub fn refine_partition(t: &ThresholdVector, lambda: f64) -> Result<ThresholdVector> {
    Ok(refine_partition_detailed(t, lambda)?.thresholds)
}

pub fn refine_partition_detailed(t: &ThresholdVector, lambda: f64) -> Result<Refinement> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("refinement width {lambda} must be positive")));
    }
    let mut bps = vec![t.lo()];
    let mut parent = Vec::new();
    let mut narrow = Vec::new();
    for (i, w) in t.breakpoints.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let width = hi - lo;
        if width < lambda / 2.0 {
            narrow.push(i);
        }
        let parts = (width / lambda).ceil().max(1.0) as usize;
        for j in 1..parts {
            bps.push(lo + (hi - lo) * j as f64 / parts as f64);
            parent.push(i);
        }
        bps.push(hi);
        parent.push(i);
    }
    Ok(Refinement { thresholds: ThresholdVector::new(bps)?, parent, narrow })
}

/// True iff every interval width lies in `[lambda / 2, lambda]`.
pub fn is_lambda_wide(t: &ThresholdVector, lambda: f64) -> bool {
    t.widths().all(|w| w >= lambda / 2.0 && w <= lambda)
}

/// Degree breakpoints `1, 2, 4, ..., 2^k`, giving `k` classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeThresholds {
    k: u32,
}

impl DegreeThresholds {
    pub fn new(k: u32) -> Result<Self> {
        if !(1..=62).contains(&k) {
            return Err(invalid(format!("degree class count {k} outside 1..=62")));
        }
        Ok(Self { k })
    }

    pub fn len(&self) -> usize {
        self.k as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `d_a = 2^a` for `a` in `0..=k`.
    pub fn breakpoint(&self, a: u32) -> u64 {
        1u64 << a
    }

    pub fn breakpoints(&self) -> Vec<u64> {
        (0..=self.k).map(|a| self.breakpoint(a)).collect()
    }

    /// Largest degree covered, `d_k`.
    pub fn top(&self) -> u64 {
        self.breakpoint(self.k)
    }

    /// Class of an integer degree: `min(floor(log2 deg), k - 1)`.
    pub fn index_of_int(&self, deg: u64) -> Result<usize> {
        if deg == 0 || deg > self.top() {
            return Err(Error::OutOfRange { value: deg as f64, lo: 1.0, hi: self.top() as f64 });
        }
        Ok((deg.ilog2() as usize).min(self.len() - 1))
    }

    /// Class of a real degree.
    pub fn index_of(&self, deg: f64) -> Result<usize> {
        let top = self.top() as f64;
        if !(deg >= 1.0 && deg <= top) {
            return Err(Error::OutOfRange { value: deg, lo: 1.0, hi: top });
        }
        let mut a = deg.log2().floor() as i64;
        while a > 0 && 2f64.powi(a as i32) > deg {
            a -= 1;
        }
        while 2f64.powi(a as i32 + 1) <= deg {
            a += 1;
        }
        Ok((a as usize).min(self.len() - 1))
    }
}

/// Bias class of a vertex given its stats; `None` when isolated.
pub fn stats_bias_index(t: &ThresholdVector, s: &VertexStats) -> Result<Option<usize>> {
    s.bias.map(|b| t.index_of(b.clamp(-1.0, 1.0))).transpose()
}

/// Degree class of a vertex given its stats; `None` when isolated.
pub fn stats_degree_index(d: &DegreeThresholds, s: &VertexStats) -> Result<Option<usize>> {
    if s.is_isolated() {
        Ok(None)
    } else {
        d.index_of(s.deg).map(Some)
    }
}

pub fn bias_index(g: &Multigraph, t: &ThresholdVector, v: VertexId) -> Result<Option<usize>> {
    stats_bias_index(t, &g.vertex_stats(v)?)
}

pub fn degree_index(g: &Multigraph, d: &DegreeThresholds, v: VertexId) -> Result<Option<usize>> {
    stats_degree_index(d, &g.vertex_stats(v)?)
}

/// `(degree class of u, degree class of v, bias class of u, bias class of v)`,
/// or `None` if either endpoint is isolated.
pub fn db_index(
    g: &Multigraph,
    d: &DegreeThresholds,
    t: &ThresholdVector,
    u: VertexId,
    v: VertexId,
) -> Result<Option<[usize; 4]>> {
    let (su, sv) = (g.vertex_stats(u)?, g.vertex_stats(v)?);
    let parts = (
        stats_degree_index(d, &su)?,
        stats_degree_index(d, &sv)?,
        stats_bias_index(t, &su)?,
        stats_bias_index(t, &sv)?,
    );
    Ok(match parts {
        (Some(a), Some(b), Some(i), Some(j)) => Some([a, b, i, j]),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(b: &[f64]) -> ThresholdVector {
        ThresholdVector::new(b.to_vec()).unwrap()
    }

    #[test]
    fn index_examples() {
        let t = tv(&[-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]);
        assert_eq!(t.index_of(0.0).unwrap(), 1);
        assert_eq!(t.index_of(1.0).unwrap(), 2);
        assert_eq!(t.index_of(-1.0 / 3.0).unwrap(), 1);
        assert_eq!(tv(&[-1.0, 0.0, 1.0]).index_of(-1.0).unwrap(), 0);
        assert!(matches!(t.index_of(1.5), Err(Error::OutOfRange { .. })));
        assert!(t.index_of(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ThresholdVector::new(vec![0.0]).is_err());
        assert!(ThresholdVector::new(vec![0.0, 0.0]).is_err());
        assert!(ThresholdVector::new(vec![1.0, 0.0]).is_err());
        assert!(ThresholdVector::bias(vec![-1.0, 0.5]).is_err());
    }

    #[test]
    fn json_is_a_bare_array() {
        let t = tv(&[-1.0, 0.0, 1.0]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[-1.0,0.0,1.0]");
        assert_eq!(serde_json::from_str::<ThresholdVector>(&s).unwrap(), t);
        assert!(serde_json::from_str::<ThresholdVector>("[1.0,0.0]").is_err());
    }

    #[test]
    fn refine_examples() {
        let r = refine_partition(&tv(&[-1.0, 1.0]), 0.5).unwrap();
        assert_eq!(r.breakpoints(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(is_lambda_wide(&r, 0.5));

        let r = refine_partition(&tv(&[-1.0, 0.0, 1.0]), 2.0 / 3.0).unwrap();
        assert_eq!(r.breakpoints(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);

        let t = tv(&[-1.0, 0.2, 1.0]);
        assert_eq!(refine_partition(&t, 1.2).unwrap(), t);
        assert!(refine_partition(&t, 0.0).is_err());
        assert!(refine_partition(&t, -1.0).is_err());
    }

    #[test]
    fn narrow_intervals_are_flagged() {
        let r = refine_partition_detailed(&tv(&[-1.0, -0.95, 1.0]), 0.5).unwrap();
        assert_eq!(r.narrow, vec![0]);
        assert_eq!(r.thresholds.breakpoints()[..2], [-1.0, -0.95]);
        assert_eq!(r.parent[0], 0);
        assert!(r.parent[1..].iter().all(|&p| p == 1));
    }

    #[test]
    fn lambda_wide_examples() {
        let t = tv(&[-1.0, 0.0, 1.0]);
        assert!(is_lambda_wide(&t, 1.0));
        assert!(!is_lambda_wide(&t, 0.5));
    }

    #[test]
    fn degree_classes() {
        let d = DegreeThresholds::new(5).unwrap();
        assert_eq!(d.breakpoints(), vec![1, 2, 4, 8, 16, 32]);
        let expect = [(1, 0), (2, 1), (3, 1), (4, 2), (15, 3), (16, 4), (31, 4), (32, 4)];
        for (deg, class) in expect {
            assert_eq!(d.index_of_int(deg).unwrap(), class, "deg {deg}");
            assert_eq!(d.index_of(deg as f64).unwrap(), class, "deg {deg}");
        }
        assert!(d.index_of_int(0).is_err());
        assert!(d.index_of_int(33).is_err());
        assert!(d.index_of(0.5).is_err());
        assert_eq!(d.index_of(1.5).unwrap(), 0);
    }

    #[test]
    fn graph_indices() {
        let g = Multigraph::from_pairs(3, &[(1, 2)]).unwrap();
        let t = tv(&[-1.0, 0.0, 1.0]);
        let d = DegreeThresholds::new(1).unwrap();
        assert_eq!(db_index(&g, &d, &t, 1, 2).unwrap(), Some([0, 0, 1, 0]));
        assert_eq!(bias_index(&g, &t, 3).unwrap(), None);
        assert_eq!(db_index(&g, &d, &t, 1, 3).unwrap(), None);

        let c = Multigraph::from_pairs(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        assert_eq!(bias_index(&c, &t, 2).unwrap(), Some(1));
        // the top breakpoint belongs to the last class
        assert_eq!(degree_index(&c, &d, 2).unwrap(), Some(0));
    }

    fn arb_vector() -> impl Strategy<Value = ThresholdVector> {
        prop::collection::vec(0.01f64..1.0, 1..8).prop_map(|gaps| {
            let total: f64 = gaps.iter().sum();
            let mut acc = -1.0;
            let mut bps = vec![-1.0];
            for g in &gaps[..gaps.len() - 1] {
                acc += 2.0 * g / total;
                bps.push(acc);
            }
            bps.push(1.0);
            ThresholdVector::bias(bps).unwrap()
        })
    }

    proptest! {
        #[test]
        fn index_is_monotone_and_tiles(t in arb_vector(), xs in prop::collection::vec(-1.0f64..=1.0, 2..40)) {
            let mut xs = xs;
            xs.sort_by(f64::total_cmp);
            let idx: Vec<usize> = xs.iter().map(|&x| t.index_of(x).unwrap()).collect();
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
            for (&x, &i) in xs.iter().zip(&idx) {
                let b = t.breakpoints();
                prop_assert!(b[i] <= x);
                prop_assert!(x < b[i + 1] || (i + 1 == t.len() && x == b[i + 1]));
            }
        }

        #[test]
        fn refinement_properties(t in arb_vector(), lambda in 0.02f64..2.5) {
            let r = refine_partition_detailed(&t, lambda).unwrap();
            let rb = r.thresholds.breakpoints();
            for b in t.breakpoints() {
                prop_assert!(rb.contains(b));
            }
            prop_assert!(r.thresholds.widths().all(|w| w <= lambda * (1.0 + 1e-12)));
            // the bias range has total width 2
            prop_assert!(r.thresholds.len() <= t.len() + (2.0 / lambda + 1e-9).floor() as usize);
            prop_assert_eq!(r.parent.len(), r.thresholds.len());
            if r.narrow.is_empty() {
                prop_assert!(r.thresholds.widths().all(|w| w >= lambda / 2.0 * (1.0 - 1e-12)));
            }
            for (c, &p) in r.parent.iter().enumerate() {
                prop_assert!(t.breakpoints()[p] <= rb[c] && rb[c + 1] <= t.breakpoints()[p + 1]);
            }
        }
    }
}
