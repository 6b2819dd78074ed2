//! Turning a sketch into a refined-snapshot estimate and a cut value.
//!
//! In layer `a` a stored vertex gets an apparent degree (retained degree
//! scaled by `1 / q_a`, capped at `d_k`) and an apparent bias (bias among
//! retained edges). It counts towards layer `a` when its retained degree is
//! below `e_cutoff` and its apparent degree class is within `w` of `a`. An
//! edge stored in layer `c` contributes to every `(a, b)` with
//! `min(a, b) = c` where both endpoints count, with weight equal to the
//! smoothing normalizer at the apparent 4-index, spread over the bias
//! window. Dividing by `m q_c p_a p_b` makes each contribution unbiased.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::sketch::{space_report, FullSketch, LayerSketch, LayerSpace};
use crate::error::{invalid, Result};
use crate::multigraph::VertexId;
use crate::oblivious::ObliviousAlg;
use crate::partition::ThresholdVector;
use crate::smoothing::{normalizer, windowed, NormalizerKind};
use crate::snapshot::{RefinedSnapshotArray, SnapshotMatrix};

/// Apparent classes of a vertex in one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Apparent {
    degree_class: usize,
    bias_class: usize,
}

/// Result of a successful finalize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub a_hat: RefinedSnapshotArray,
    pub m_hat_matrix: SnapshotMatrix,
    /// `A(M_hat) - slack` clamped to `[0, 1]`.
    pub v_hat: f64,
    pub v_hat_unclamped: f64,
    pub slack: f64,
    /// Number of stored vertices that count in each layer.
    pub counted_vertices: Vec<usize>,
    pub space: Vec<LayerSpace>,
}

/// What finalize produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Outcome {
    Estimate(Box<EstimateReport>),
    Overflow { space: Vec<LayerSpace> },
}

impl Outcome {
    pub fn estimate(&self) -> Option<&EstimateReport> {
        match self {
            Outcome::Estimate(r) => Some(r),
            Outcome::Overflow { .. } => None,
        }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self, Outcome::Overflow { .. })
    }
}

fn apparent_classes(params: &ParamSet, a: usize, layer: &LayerSketch) -> Result<BTreeMap<VertexId, Apparent>> {
    let LayerSketch::Active { vertices, edges, degree } = layer else {
        return Ok(BTreeMap::new());
    };
    let lp = params.layer(a);
    let dth = params.degree_thresholds();
    let mut out_deg: BTreeMap<VertexId, u64> = BTreeMap::new();
    for e in edges {
        *out_deg.entry(e.src).or_insert(0) += 1;
    }
    let mut result = BTreeMap::new();
    for &v in vertices {
        let deg = degree.get(&v).copied().unwrap_or(0);
        if deg == 0 || deg >= params.e_cutoff {
            continue;
        }
        let scaled = if lp.q_exp >= 64 { u64::MAX } else { deg.saturating_mul(1u64 << lp.q_exp) };
        let d_est = scaled.min(params.d_k());
        let degree_class = dth.index_of_int(d_est)?;
        if degree_class.abs_diff(a) > params.w {
            continue;
        }
        let out = out_deg.get(&v).copied().unwrap_or(0) as f64;
        let bias = (2.0 * out - deg as f64) / deg as f64;
        let bias_class = params.thresholds.index_of(bias.clamp(-1.0, 1.0))?;
        result.insert(v, Apparent { degree_class, bias_class });
    }
    Ok(result)
}

/// The estimated refined snapshot. Returns `None` if a layer overflowed.
pub fn estimate_array(params: &ParamSet, sketch: &FullSketch) -> Result<Option<RefinedSnapshotArray>> {
    let k = params.k as usize;
    let l = params.l;
    if sketch.layers.len() != k {
        return Err(invalid("sketch and parameters disagree on the layer count"));
    }
    if sketch.has_overflow() {
        return Ok(None);
    }
    let counted: Vec<BTreeMap<VertexId, Apparent>> = sketch
        .layers
        .iter()
        .enumerate()
        .map(|(a, layer)| apparent_classes(params, a, layer))
        .collect::<Result<_>>()?;

    // Layers in which each vertex counts, in increasing order.
    let mut valid: BTreeMap<VertexId, Vec<(usize, Apparent)>> = BTreeMap::new();
    for (a, map) in counted.iter().enumerate() {
        for (&v, &app) in map {
            valid.entry(v).or_default().push((a, app));
        }
    }

    let dims = [k, k, l, l];
    let w = params.w;
    // Point masses at the apparent bias pair, before the bias-window sum.
    let mut point = RefinedSnapshotArray::zeros(k, l);
    for (c, layer) in sketch.layers.iter().enumerate() {
        let LayerSketch::Active { edges, .. } = layer else { unreachable!() };
        for e in edges {
            let (Some(us), Some(vs)) = (valid.get(&e.src), valid.get(&e.dst)) else { continue };
            for &(a, ua) in us.iter().filter(|(a, _)| *a >= c) {
                for &(b, vb) in vs.iter().filter(|(b, _)| *b >= c) {
                    if a.min(b) != c {
                        continue;
                    }
                    let idx = [ua.degree_class, vb.degree_class, ua.bias_class, vb.bias_class];
                    let nu = normalizer(NormalizerKind::Smooth, w, dims, idx);
                    point.add([a, b, ua.bias_class, vb.bias_class], nu);
                }
            }
        }
    }

    // Box sum over the two bias axes only.
    let mut a_est = Vec::with_capacity(point.data().len());
    for block in point.data().chunks(l * l) {
        a_est.extend(windowed(block, &[l, l], NormalizerKind::Smooth, 0, w));
    }
    let mut a_hat = RefinedSnapshotArray::from_data(k, l, a_est);
    if sketch.m > 0 {
        let m = sketch.m as f64;
        for a in 0..k {
            for b in 0..k {
                let denom = m * params.layer(a.min(b)).q * params.layer(a).p * params.layer(b).p;
                for i in 0..l {
                    for j in 0..l {
                        let idx = [a, b, i, j];
                        let x = a_hat.get(idx);
                        if x != 0.0 {
                            a_hat.set(idx, x / denom);
                        }
                    }
                }
            }
        }
    }
    Ok(Some(a_hat))
}

/// Runs the oblivious algorithm on the projected estimate. `alg` may be
/// given on the original thresholds; it is refined to the parameter
/// thresholds first.
pub fn finalize(params: &ParamSet, sketch: &FullSketch, alg: &ObliviousAlg, slack: f64) -> Result<Outcome> {
    let space = space_report(params, sketch);
    let Some(a_hat) = estimate_array(params, sketch)? else {
        return Ok(Outcome::Overflow { space });
    };
    let refined = refine_to(alg, &params.thresholds, params.lambda)?;
    let m_hat_matrix = a_hat.project();
    let value = refined.evaluate(&m_hat_matrix)?;
    let v_hat_unclamped = value - slack;
    let counted_vertices = sketch
        .layers
        .iter()
        .enumerate()
        .map(|(a, layer)| apparent_classes(params, a, layer).map(|m| m.len()))
        .collect::<Result<_>>()?;
    Ok(Outcome::Estimate(Box::new(EstimateReport {
        a_hat,
        m_hat_matrix,
        v_hat: v_hat_unclamped.clamp(0.0, 1.0),
        v_hat_unclamped,
        slack,
        counted_vertices,
        space,
    })))
}

/// `alg` on thresholds `t`: used as is if it already matches, otherwise
/// refined with `lambda`, which must then produce `t`.
pub fn refine_to(alg: &ObliviousAlg, t: &ThresholdVector, lambda: f64) -> Result<ObliviousAlg> {
    if alg.thresholds() == t {
        return Ok(alg.clone());
    }
    let refined = alg.refine(lambda)?;
    if refined.thresholds() != t {
        return Err(invalid("oblivious algorithm thresholds do not refine to the sketch thresholds"));
    }
    Ok(refined)
}
