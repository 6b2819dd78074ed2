//! Derived constants of the estimator.
//!
//! Every constant is a closed-form function of the accuracy `epsilon`, the
//! vertex count `n`, the edge-count guess `m_hat` and a `scale` multiplier
//! on the space factor `rho`. Logarithms are base 2. Integer constants that
//! would not fit in 64 bits saturate at `u64::MAX`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::partition::{refine_partition_detailed, DegreeThresholds, ThresholdVector};

/// Largest vertex-sampling exponent: `p_a >= 2^-63`.
pub const MAX_P_EXP: u32 = 63;

/// Optional knobs for small-scale experiments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    /// Forces `q_a = p_a = 1` in every layer.
    #[serde(default)]
    pub full_sampling: bool,
    #[serde(default)]
    pub v_cutoff: Option<u64>,
    #[serde(default)]
    pub e_cutoff: Option<u64>,
}

/// Sampling parameters of one degree layer `a` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub a: u32,
    /// Upper degree breakpoint `2^a`.
    pub d: u64,
    /// Edge-sampling probability `q_a = 2^-q_exp`.
    pub q_exp: u32,
    pub q: f64,
    /// `min(p0 / q_a, 1)` before rounding.
    pub p_requested: f64,
    /// Vertex-sampling probability `p_a = 2^-p_exp <= p_requested`.
    pub p_exp: u32,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub epsilon: f64,
    pub n: u64,
    pub m_hat: f64,
    pub scale: f64,
    /// Window radius `ceil(1 / epsilon)`.
    pub w: usize,
    /// Maximum bias interval width `epsilon / w`.
    pub lambda: f64,
    /// Refined bias thresholds.
    pub thresholds: ThresholdVector,
    pub l: usize,
    /// Original bias classes narrower than `lambda / 2`.
    pub narrow_intervals: Vec<usize>,
    /// Twice the narrowest refined interval.
    pub eps_bias: f64,
    pub m_min: u64,
    pub c_spar: f64,
    pub m_max: u64,
    pub k_star: u32,
    pub big_d: u64,
    pub e_cutoff: u64,
    /// True when `e_cutoff` was raised to `big_d`.
    pub e_cutoff_raised_to_d: bool,
    pub k: u32,
    pub rho: f64,
    pub p0: f64,
    pub v_cutoff: u64,
    pub overrides: ParamOverrides,
    pub layers: Vec<LayerParams>,
}

fn ceil_u64(x: f64) -> u64 {
    // `as` saturates at the ends of the range
    x.ceil() as u64
}

fn pow2_sat(e: u32) -> u64 {
    if e >= 64 {
        u64::MAX
    } else {
        1u64 << e
    }
}

/// Smallest `r` with `2^-r <= p`, capped at [`MAX_P_EXP`].
fn p_exponent(p: f64) -> u32 {
    if p >= 1.0 {
        return 0;
    }
    let mut r = (-p.log2()).ceil().max(0.0) as u32;
    while r > 0 && 2f64.powi(-(r as i32 - 1)) <= p {
        r -= 1;
    }
    while r < MAX_P_EXP && 2f64.powi(-(r as i32)) > p {
        r += 1;
    }
    r.min(MAX_P_EXP)
}

impl ParamSet {
    /// Derives every constant. `t_orig` is refined to width `lambda`.
    pub fn derive(
        epsilon: f64,
        n: u64,
        m_hat: f64,
        scale: f64,
        c_spar: f64,
        t_orig: &ThresholdVector,
        overrides: ParamOverrides,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon {epsilon} outside (0, 1)")));
        }
        if n < 2 {
            return Err(invalid(format!("vertex count {n} below 2")));
        }
        if !(m_hat >= 1.0) || !m_hat.is_finite() {
            return Err(invalid(format!("edge-count guess {m_hat} below 1")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid(format!("scale {scale} must be positive")));
        }
        if !(c_spar > 0.0) || !c_spar.is_finite() {
            return Err(invalid(format!("sparsification constant {c_spar} must be positive")));
        }
        if !t_orig.is_bias() {
            return Err(invalid("bias thresholds must span [-1, 1]"));
        }

        let w = (1.0 / epsilon).ceil() as usize;
        let lambda = epsilon / w as f64;
        let refined = refine_partition_detailed(t_orig, lambda)?;
        let thresholds = refined.thresholds;
        let l = thresholds.len();
        let eps_bias = 2.0 * thresholds.min_gap();

        let nf = n as f64;
        let log_n = nf.log2();
        let m_min = ceil_u64(nf.sqrt());
        let m_max = ceil_u64(c_spar * nf / (epsilon * epsilon));
        let k_star = (6.0 * log_n.log2()).ceil().max(0.0) as u32;
        let big_d = pow2_sat(k_star.saturating_add(w as u32).saturating_add(2));
        let log7 = ceil_u64(log_n.powi(7));
        let (mut e_cutoff, e_cutoff_raised_to_d) = if log7 < big_d { (big_d, true) } else { (log7, false) };

        let k = ((2.0 * m_hat).log2().ceil() as u32).max(1);
        let kl = k as f64 * l as f64;
        let rho = scale * 1000.0 * (big_d as f64).sqrt() * kl.powi(3) / epsilon;
        let p0 = rho / m_hat.sqrt();
        let mut v_cutoff = ceil_u64(10.0 * rho * (2.0 * m_hat).sqrt());

        if let Some(v) = overrides.v_cutoff {
            v_cutoff = v;
        }
        if let Some(e) = overrides.e_cutoff {
            e_cutoff = e;
        }

        let layers = (1..=k)
            .map(|a| {
                let (q_exp, p_requested) = if overrides.full_sampling {
                    (0, 1.0)
                } else {
                    let q_exp = a.saturating_sub(k_star);
                    let q = 2f64.powi(-(q_exp.min(1000) as i32));
                    (q_exp, (p0 / q).min(1.0))
                };
                let p_exp = p_exponent(p_requested);
                LayerParams {
                    a,
                    d: pow2_sat(a),
                    q_exp,
                    q: 2f64.powi(-(q_exp.min(1000) as i32)),
                    p_requested,
                    p_exp,
                    p: 2f64.powi(-(p_exp as i32)),
                }
            })
            .collect();

        Ok(Self {
            epsilon,
            n,
            m_hat,
            scale,
            w,
            lambda,
            thresholds,
            l,
            narrow_intervals: refined.narrow,
            eps_bias,
            m_min,
            c_spar,
            m_max,
            k_star,
            big_d,
            e_cutoff,
            e_cutoff_raised_to_d,
            k,
            rho,
            p0,
            v_cutoff,
            overrides,
            layers,
        })
    }

    pub fn degree_thresholds(&self) -> DegreeThresholds {
        DegreeThresholds::new(self.k).expect("k is at least 1")
    }

    /// Largest tracked degree `d_k`.
    pub fn d_k(&self) -> u64 {
        pow2_sat(self.k)
    }

    /// Layer `a` with 0-based index.
    pub fn layer(&self, a: usize) -> &LayerParams {
        &self.layers[a]
    }

    /// Whether some layer samples vertices.
    pub fn subsamples_vertices(&self) -> bool {
        self.layers.iter().any(|l| l.p_exp > 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> ThresholdVector {
        ThresholdVector::bias(vec![-1.0, -0.5, 0.5, 1.0]).unwrap()
    }

    fn derive(eps: f64, n: u64, m_hat: f64, scale: f64) -> ParamSet {
        ParamSet::derive(eps, n, m_hat, scale, 1.0, &t(), ParamOverrides::default()).unwrap()
    }

    #[test]
    fn window_and_width() {
        let p = derive(0.5, 100, 100.0, 1.0);
        assert_eq!(p.w, 2);
        assert_eq!(p.lambda, 0.25);
        // widths 0.5, 1, 0.5 split into 2, 4 and 2 parts
        assert_eq!(p.l, 8);
        assert_eq!(p.eps_bias, 0.5);
        let p = derive(0.3, 100, 100.0, 1.0);
        assert_eq!(p.w, 4);
    }

    #[test]
    fn degree_breakpoints() {
        // 2 * m_hat = 32 gives k = 5
        let p = derive(0.5, 100, 16.0, 1.0);
        assert_eq!(p.k, 5);
        assert_eq!(p.degree_thresholds().breakpoints(), vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(p.layers.iter().map(|l| l.d).collect::<Vec<_>>(), vec![2, 4, 8, 16, 32]);
    }

    #[test]
    fn table_values() {
        let p = derive(0.25, 10_000, 50_000.0, 1.0);
        assert_eq!(p.m_min, 100);
        assert_eq!(p.m_max, 160_000);
        // 6 log log 10^4 = 22.39...
        assert_eq!(p.k_star, 23);
        assert_eq!(p.big_d, 1 << 29);
        assert!(p.e_cutoff_raised_to_d);
        assert_eq!(p.e_cutoff, p.big_d);
        assert_eq!(p.k, 17);
        assert_eq!(p.l, 32);
        let rho = 1000.0 * ((1u64 << 29) as f64).sqrt() * (17.0f64 * 32.0).powi(3) / 0.25;
        assert!((p.rho / rho - 1.0).abs() < 1e-12);
        assert!((p.p0 - rho / 50_000f64.sqrt()).abs() / p.p0 < 1e-12);
        // q = 1 in every layer because k* exceeds k
        assert!(p.layers.iter().all(|l| l.q_exp == 0 && l.p_exp == 0));
        assert!(!p.subsamples_vertices());
    }

    #[test]
    fn scale_turns_on_vertex_sampling() {
        let p = derive(0.25, 10_000, 50_000.0, 1e-16);
        let l = &p.layers[0];
        assert!(l.p_exp > 0);
        assert!(l.p <= l.p_requested && l.p > l.p_requested / 2.0);
    }

    #[test]
    fn large_n_subsamples_edges_in_high_layers() {
        let p = derive(0.5, 1 << 40, 1e12, 1.0);
        let k_star = p.k_star;
        assert!(p.k > k_star);
        for l in &p.layers {
            assert_eq!(l.q_exp, l.a.saturating_sub(k_star));
        }
        for w in p.layers.windows(2) {
            assert!(w[0].q >= w[1].q);
            assert!(w[0].p <= w[1].p);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let o = ParamOverrides::default;
        assert!(ParamSet::derive(0.0, 100, 10.0, 1.0, 1.0, &t(), o()).is_err());
        assert!(ParamSet::derive(1.0, 100, 10.0, 1.0, 1.0, &t(), o()).is_err());
        assert!(ParamSet::derive(0.5, 1, 10.0, 1.0, 1.0, &t(), o()).is_err());
        assert!(ParamSet::derive(0.5, 100, 0.5, 1.0, 1.0, &t(), o()).is_err());
        assert!(ParamSet::derive(0.5, 100, 10.0, 0.0, 1.0, &t(), o()).is_err());
    }

    #[test]
    fn p_exponent_rounds_down_the_probability() {
        assert_eq!(p_exponent(1.0), 0);
        assert_eq!(p_exponent(0.5), 1);
        assert_eq!(p_exponent(0.4), 2);
        assert_eq!(p_exponent(0.26), 2);
        assert_eq!(p_exponent(0.25), 2);
        assert_eq!(p_exponent(1e-30), MAX_P_EXP);
    }
}
