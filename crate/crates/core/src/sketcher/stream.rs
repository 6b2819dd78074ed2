//! The full single-pass wrapper for an unknown edge count.
//!
//! Alongside an exact edge counter and a buffer holding the first `m_min`
//! edges, one sketch runs per guess `m_hat(t) = 1.9^t` on a geometric grid.
//! Guesses above `m_max` see an independently sparsified sub-stream so that
//! every sketch is sized for at most `m_max` edges. After the stream, short
//! streams are solved from the buffer; otherwise the unique guess with
//! `m_hat(t) <= m < m_hat(t + 1)` is finalized.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{finalize, EstimateReport, Outcome};
use super::params::{ParamOverrides, ParamSet};
use super::sketch::{FullSketch, LayerSpace, Sketcher};
use crate::error::{invalid, Result};
use crate::multigraph::{Multigraph, VertexId, DEFAULT_BRUTE_FORCE_CEILING};
use crate::oblivious::ObliviousAlg;
use crate::rng::{derive, unit_coin};
use crate::snapshot::compute_snapshot;

const GRID_BASE: f64 = 1.9;
const CANDIDATE_LABEL: u64 = 0x4341_4e44;
const SPARSIFY_LABEL: u64 = 0x5350_4152;
const SKETCH_LABEL: u64 = 0x534b_4554;
const BATCH: usize = 4096;

/// Everything besides the stream and the oblivious algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub seed: u64,
    pub scale: f64,
    /// Amount subtracted from the oblivious value; `None` means `epsilon / 4`.
    pub slack: Option<f64>,
    /// Exponent `C` of the assumed bound `m < n^C`.
    pub mbound_exp: f64,
    pub c_spar: f64,
    pub brute_force_ceiling: usize,
    pub overrides: ParamOverrides,
}

impl RunConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            seed,
            scale: 1.0,
            slack: None,
            mbound_exp: 2.0,
            c_spar: 1.0,
            brute_force_ceiling: DEFAULT_BRUTE_FORCE_CEILING,
            overrides: ParamOverrides::default(),
        }
    }

    pub fn slack(&self) -> f64 {
        self.slack.unwrap_or(self.epsilon / 4.0)
    }
}

/// How the final value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunPath {
    /// No edges at all; the value is reported as 0.
    Empty,
    /// Short stream solved exactly by enumeration.
    BufferExact,
    /// Short stream with too many vertices to enumerate: the oblivious value
    /// of the exact snapshot, a lower bound on the optimum.
    BufferOblivious,
    Sketch,
    Overflow,
}

/// Parameters and stored counts of one layer of the selected sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub a: u32,
    pub q: f64,
    pub p: f64,
    pub p_requested: f64,
    pub vertices: usize,
    pub edges: usize,
    pub counted: Option<usize>,
    pub overflow: bool,
    pub trigger: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub candidate: Option<u64>,
    pub sketch: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `None` when the selected sketch overflowed.
    pub v_hat: Option<f64>,
    pub v_hat_unclamped: Option<f64>,
    pub path: RunPath,
    pub n: u64,
    pub m: u64,
    pub selected_t: Option<i32>,
    pub selected_m_hat: Option<f64>,
    pub p_spar: Option<f64>,
    /// Edges that survived sparsification into the selected sketch.
    pub sketched_m: Option<u64>,
    pub params: Option<ParamSet>,
    pub per_layer: Vec<LayerReport>,
    pub overflow: Vec<bool>,
    pub seeds: Seeds,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub estimate: Option<EstimateReport>,
}

struct Candidate {
    t: i32,
    m_hat: f64,
    m_hat_next: f64,
    p_spar: f64,
    seed: u64,
    sketcher: Sketcher,
    sketch: FullSketch,
    live: bool,
}

impl Candidate {
    fn push_batch(&mut self, first_index: u64, batch: &[(VertexId, VertexId)]) -> Result<()> {
        for (off, &(u, v)) in batch.iter().enumerate() {
            let index = first_index + off as u64;
            if self.p_spar < 1.0 && !unit_coin(derive(self.seed, &[SPARSIFY_LABEL, index]), self.p_spar) {
                continue;
            }
            self.sketcher.push_edge(&mut self.sketch, index, u, v)?;
        }
        Ok(())
    }
}

fn grid(t: i32) -> f64 {
    GRID_BASE.powi(t)
}

/// Runs the estimator over a stream of edges on vertices `1..=n`.
pub fn run_stream<I>(n: usize, edges: I, alg: &ObliviousAlg, cfg: &RunConfig) -> Result<RunReport>
where
    I: IntoIterator<Item = Result<(VertexId, VertexId)>>,
{
    let base = ParamSet::derive(
        cfg.epsilon,
        n as u64,
        1.0,
        cfg.scale,
        cfg.c_spar,
        alg.thresholds(),
        cfg.overrides.clone(),
    )?;
    if !(cfg.mbound_exp > 0.0) {
        return Err(invalid(format!("edge bound exponent {} must be positive", cfg.mbound_exp)));
    }
    let m_min = base.m_min;
    let m_max = base.m_max as f64;
    let t_lo = ((m_min as f64).ln() / GRID_BASE.ln()).floor() as i32;
    let t_hi = (cfg.mbound_exp * (n as f64).ln() / GRID_BASE.ln()).ceil().max(t_lo as f64) as i32;

    let mut candidates = (t_lo..=t_hi)
        .map(|t| {
            let m_hat = grid(t);
            let m_hat_spar = m_max.min(m_hat);
            let seed = derive(cfg.seed, &[CANDIDATE_LABEL, t as u64]);
            let params = ParamSet::derive(
                cfg.epsilon,
                n as u64,
                m_hat_spar,
                cfg.scale,
                cfg.c_spar,
                alg.thresholds(),
                cfg.overrides.clone(),
            )?;
            let sketcher = Sketcher::new(params, derive(seed, &[SKETCH_LABEL]))?;
            let sketch = sketcher.empty();
            Ok(Candidate {
                t,
                m_hat,
                m_hat_next: grid(t + 1),
                p_spar: m_hat_spar / m_hat,
                seed,
                sketcher,
                sketch,
                live: true,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut m: u64 = 0;
    let mut buffer: Vec<(VertexId, VertexId)> = Vec::new();
    let mut batch = Vec::with_capacity(BATCH);
    let flush = |batch: &mut Vec<(VertexId, VertexId)>, m: u64, candidates: &mut Vec<Candidate>| -> Result<()> {
        let first = m - batch.len() as u64;
        candidates
            .par_iter_mut()
            .filter(|c| c.live)
            .try_for_each(|c| c.push_batch(first, batch))?;
        // a guess whose successor is already reached can never be selected;
        // the top guess is kept as the fallback for oversized streams
        for c in candidates.iter_mut() {
            if c.live && c.t < t_hi && m as f64 >= c.m_hat_next {
                c.live = false;
                c.sketch = FullSketch::empty(0);
            }
        }
        batch.clear();
        Ok(())
    };
    for edge in edges {
        let (u, v) = edge?;
        if u == v || u == 0 || v == 0 || u as usize > n || v as usize > n {
            return Err(invalid(format!("edge ({u}, {v}) is a self-loop or outside 1..={n}")));
        }
        m += 1;
        if (buffer.len() as u64) < m_min {
            buffer.push((u, v));
        }
        batch.push((u, v));
        if batch.len() == BATCH {
            flush(&mut batch, m, &mut candidates)?;
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, m, &mut candidates)?;
    }

    let mut report = RunReport {
        v_hat: Some(0.0),
        v_hat_unclamped: None,
        path: RunPath::Empty,
        n: n as u64,
        m,
        selected_t: None,
        selected_m_hat: None,
        p_spar: None,
        sketched_m: None,
        params: None,
        per_layer: Vec::new(),
        overflow: Vec::new(),
        seeds: Seeds { master: cfg.seed, candidate: None, sketch: None },
        warnings: Vec::new(),
        estimate: None,
    };

    if m == 0 {
        report.warnings.push("empty stream; value reported as 0".into());
        return Ok(report);
    }
    if m <= m_min {
        let g = Multigraph::from_pairs(n, &buffer)?;
        let (core, _) = g.strip_isolated();
        if core.n() <= cfg.brute_force_ceiling {
            let best = core.max_dicut_bruteforce_with_ceiling(cfg.brute_force_ceiling)?;
            report.v_hat = Some(best.value);
            report.path = RunPath::BufferExact;
        } else {
            let value = alg.evaluate(&compute_snapshot(&g, alg.thresholds())?)?;
            report.v_hat = Some(value);
            report.path = RunPath::BufferOblivious;
            report.warnings.push(format!(
                "{} nonisolated vertices exceed the enumeration ceiling {}; reporting the oblivious value of the exact snapshot, a lower bound",
                core.n(),
                cfg.brute_force_ceiling
            ));
        }
        return Ok(report);
    }

    let mf = m as f64;
    let pick = if mf >= grid(t_hi + 1) {
        report.warnings.push(format!(
            "stream has {m} edges, beyond the assumed bound n^{}; using the largest guess",
            cfg.mbound_exp
        ));
        candidates.iter().position(|c| c.t == t_hi)
    } else {
        candidates.iter().position(|c| c.m_hat <= mf && mf < c.m_hat_next)
    };
    let chosen = &candidates[pick.ok_or_else(|| invalid("no edge-count guess matches the stream"))?];
    let params = chosen.sketcher.params();
    let outcome = finalize(params, &chosen.sketch, alg, cfg.slack())?;

    report.selected_t = Some(chosen.t);
    report.selected_m_hat = Some(chosen.m_hat);
    report.p_spar = Some(chosen.p_spar);
    report.sketched_m = Some(chosen.sketch.m);
    report.seeds.candidate = Some(chosen.seed);
    report.seeds.sketch = Some(chosen.sketcher.seed());
    if params.e_cutoff_raised_to_d {
        report.warnings.push("edge cutoff raised to the degree bound D".into());
    }
    let (space, counted): (&[LayerSpace], Option<&[usize]>) = match &outcome {
        Outcome::Estimate(r) => (&r.space, Some(&r.counted_vertices)),
        Outcome::Overflow { space } => (space, None),
    };
    report.per_layer = space
        .iter()
        .zip(&params.layers)
        .enumerate()
        .map(|(a, (s, lp))| LayerReport {
            a: lp.a,
            q: lp.q,
            p: lp.p,
            p_requested: lp.p_requested,
            vertices: s.vertices,
            edges: s.edges,
            counted: counted.map(|c| c[a]),
            overflow: s.overflow,
            trigger: s.trigger,
        })
        .collect();
    report.overflow = space.iter().map(|s| s.overflow).collect();
    report.params = Some(params.clone());
    match outcome {
        Outcome::Estimate(est) => {
            report.path = RunPath::Sketch;
            report.v_hat = Some(est.v_hat);
            report.v_hat_unclamped = Some(est.v_hat_unclamped);
            report.estimate = Some(*est);
        }
        Outcome::Overflow { .. } => {
            report.path = RunPath::Overflow;
            report.v_hat = None;
        }
    }
    Ok(report)
}
