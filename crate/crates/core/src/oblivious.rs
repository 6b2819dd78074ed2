//! Oblivious snapshot algorithms.
//!
//! An oblivious algorithm puts every vertex on side 1 independently with a
//! probability `r_i` that depends only on its bias class `i`. Its expected
//! cut value is the linear form `sum r_i (1 - r_j) M(i, j)` of the snapshot
//! `M`, which never exceeds the true Max-DICUT value and is 1-Lipschitz in
//! the entrywise 1-norm because every coefficient lies in `[0, 1]`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::multigraph::{Cut, Multigraph};
use crate::partition::{refine_partition_detailed, stats_bias_index, ThresholdVector};
use crate::snapshot::SnapshotMatrix;

#[derive(Deserialize)]
struct RawAlg {
    thresholds: ThresholdVector,
    probabilities: Vec<f64>,
}

/// Bias thresholds and one probability per class. The JSON form is
/// `{"thresholds": [...], "probabilities": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlg")]
pub struct ObliviousAlg {
    thresholds: ThresholdVector,
    probabilities: Vec<f64>,
}

impl TryFrom<RawAlg> for ObliviousAlg {
    type Error = Error;

    fn try_from(raw: RawAlg) -> Result<Self> {
        Self::new(raw.thresholds, raw.probabilities)
    }
}

impl Default for ObliviousAlg {
    fn default() -> Self {
        Self::stand_in()
    }
}

impl ObliviousAlg {
    pub fn new(thresholds: ThresholdVector, probabilities: Vec<f64>) -> Result<Self> {
        if !thresholds.is_bias() {
            return Err(invalid("oblivious thresholds must span [-1, 1]"));
        }
        if probabilities.len() != thresholds.len() {
            return Err(invalid(format!(
                "{} probabilities for {} bias classes",
                probabilities.len(),
                thresholds.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { thresholds, probabilities })
    }

    /// A simple monotone step rule shipped as a placeholder: vertices that
    /// mostly send go to side 1 more often. It is not a tuned table; supply
    /// one through a config file for serious use.
    pub fn stand_in() -> Self {
        let t = ThresholdVector::bias(vec![-1.0, -0.5, 0.5, 1.0]).expect("valid thresholds");
        Self::new(t, vec![0.25, 0.5, 0.75]).expect("valid probabilities")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn thresholds(&self) -> &ThresholdVector {
        &self.thresholds
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Number of bias classes.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `sum_{i,j} r_i (1 - r_j) M(i, j)`.
    pub fn evaluate(&self, m: &SnapshotMatrix) -> Result<f64> {
        let l = self.len();
        if m.len() != l {
            return Err(invalid(format!("snapshot side {} does not match {l} classes", m.len())));
        }
        let r = &self.probabilities;
        let mut total = 0.0;
        for i in 0..l {
            for j in 0..l {
                total += r[i] * (1.0 - r[j]) * m.get(i, j);
            }
        }
        Ok(total)
    }

    /// Assigns each nonisolated vertex to side 1 with its class probability.
    /// Isolated vertices go to side 0.
    pub fn sample(&self, g: &Multigraph, seed: u64) -> Result<Cut> {
        let mut rng = crate::rng::stream(seed, &[0x0b11_0000]);
        let mut bits = Vec::with_capacity(g.n());
        for s in g.all_stats() {
            let side = match stats_bias_index(&self.thresholds, &s)? {
                Some(i) => rng.gen_bool(self.probabilities[i]),
                None => false,
            };
            bits.push(side);
        }
        Ok(Cut::new(bits))
    }

    /// Same rule on the `lambda`-refined thresholds: each refined class
    /// inherits the probability of the class it was cut from.
    pub fn refine(&self, lambda: f64) -> Result<Self> {
        let r = refine_partition_detailed(&self.thresholds, lambda)?;
        let probabilities = r.parent.iter().map(|&p| self.probabilities[p]).collect();
        Self::new(r.thresholds, probabilities)
    }

    /// `|A(M) - A(N)|` together with `||M - N||_1`.
    pub fn continuity_margin(&self, m: &SnapshotMatrix, n: &SnapshotMatrix) -> Result<(f64, f64)> {
        let diff = (self.evaluate(m)? - self.evaluate(n)?).abs();
        Ok((diff, m.l1_distance(n)?))
    }

    /// Whether `|A(M) - A(N)| <= ||M - N||_1`, up to rounding.
    pub fn check_continuity(&self, m: &SnapshotMatrix, n: &SnapshotMatrix) -> Result<bool> {
        let (diff, dist) = self.continuity_margin(m, n)?;
        Ok(diff <= dist + 1e-12)
    }
}

pub fn oblivious_sample(alg: &ObliviousAlg, g: &Multigraph, seed: u64) -> Result<Cut> {
    alg.sample(g, seed)
}

pub fn refine_alg(alg: &ObliviousAlg, lambda: f64) -> Result<ObliviousAlg> {
    alg.refine(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::compute_snapshot;
    use rand::SeedableRng;

    fn t(b: &[f64]) -> ThresholdVector {
        ThresholdVector::bias(b.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let ones = ObliviousAlg::new(t(&[-1.0, 0.0, 1.0]), vec![1.0, 1.0]).unwrap();
        let mut m = SnapshotMatrix::zeros(2);
        m.set(0, 1, 0.4);
        m.set(1, 0, 0.6);
        assert_eq!(ones.evaluate(&m).unwrap(), 0.0);

        let step = ObliviousAlg::new(t(&[-1.0, 0.0, 1.0]), vec![1.0, 0.0]).unwrap();
        let mut unit = SnapshotMatrix::zeros(2);
        unit.set(0, 1, 1.0);
        assert_eq!(step.evaluate(&unit).unwrap(), 1.0);
        assert!(step.evaluate(&SnapshotMatrix::zeros(3)).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ObliviousAlg::new(t(&[-1.0, 0.0, 1.0]), vec![0.5]).is_err());
        assert!(ObliviousAlg::new(t(&[-1.0, 0.0, 1.0]), vec![0.5, 1.5]).is_err());
        let bad = r#"{"thresholds": [-1, 0, 0.5], "probabilities": [0.1, 0.2]}"#;
        assert!(ObliviousAlg::from_json(bad).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let a = ObliviousAlg::stand_in();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"thresholds\"") && s.contains("\"probabilities\""));
        assert_eq!(ObliviousAlg::from_json(&s).unwrap(), a);
    }

    #[test]
    fn sampling() {
        let g = Multigraph::from_pairs(4, &[(1, 2), (2, 3)]).unwrap();
        let ones = ObliviousAlg::new(t(&[-1.0, 1.0]), vec![1.0]).unwrap();
        assert_eq!(ones.sample(&g, 1).unwrap().bits(), &[true, true, true, false]);
        let a = ObliviousAlg::stand_in();
        assert_eq!(a.sample(&g, 9).unwrap(), a.sample(&g, 9).unwrap());
    }

    #[test]
    fn refine_inherits_probabilities() {
        let a = ObliviousAlg::new(t(&[-1.0, 1.0]), vec![0.5]).unwrap();
        let r = a.refine(0.5).unwrap();
        assert_eq!(r.thresholds().breakpoints().len(), 5);
        assert_eq!(r.probabilities(), &[0.5; 4]);
        assert_eq!(a.refine(3.0).unwrap(), a);
    }

    #[test]
    fn refine_preserves_value() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for trial in 0..30u64 {
            let n = rng.gen_range(3..15);
            let mut g = Multigraph::new(n);
            for _ in 0..rng.gen_range(2..40) {
                let (u, v) = (rng.gen_range(1..=n as u32), rng.gen_range(1..=n as u32));
                if u != v {
                    g.add_edge(u, v).unwrap();
                }
            }
            if g.edge_count() == 0 {
                continue;
            }
            let l = rng.gen_range(1..6);
            let base = ThresholdVector::uniform_bias(l).unwrap();
            let a = ObliviousAlg::new(base, (0..l).map(|_| rng.gen()).collect()).unwrap();
            let r = a.refine(0.1).unwrap();
            let before = a.evaluate(&compute_snapshot(&g, a.thresholds()).unwrap()).unwrap();
            let after = r.evaluate(&compute_snapshot(&g, r.thresholds()).unwrap()).unwrap();
            assert!((before - after).abs() < 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn continuity_single_entry() {
        let a = ObliviousAlg::stand_in();
        let mut m = SnapshotMatrix::zeros(3);
        m.set(2, 0, 1.0);
        assert_eq!(a.continuity_margin(&m, &m).unwrap(), (0.0, 0.0));
        let mut n = m.clone();
        n.add(2, 0, -0.3);
        let (diff, dist) = a.continuity_margin(&m, &n).unwrap();
        assert!(diff <= dist && (dist - 0.3).abs() < 1e-15);
        assert!(a.check_continuity(&m, &n).unwrap());
    }
}
