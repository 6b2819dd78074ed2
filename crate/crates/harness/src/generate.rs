//! Seeded graph families and stream orderings.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Result};
use dicut_core::multigraph::{Multigraph, VertexId};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Where the star's edges point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StarDirection {
    Out,
    In,
}

/// A random graph family. The textual form is `name` or `name:args`, for
/// example `planted-dicut:0.1,0.9`, `star:out`, `power-law:2.5`,
/// `k-cycle-union:3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    /// `m` uniformly random ordered pairs of distinct vertices.
    ErdosRenyiDirected,
    /// A hidden vertex set `S` of about half the vertices. Random pairs are
    /// accepted with probability `p_out` when they leave `S` (source in `S`,
    /// target outside) and with `p_in` otherwise.
    PlantedDicut { p_in: f64, p_out: f64 },
    /// Vertex 1 joined to the others in turn.
    Star(StarDirection),
    /// Chung-Lu style graph whose expected degrees follow a power law with
    /// exponent `alpha`.
    PowerLaw { alpha: f64 },
    /// Disjoint directed `k`-cycles on a random vertex order, repeated with
    /// fresh orders until `m` edges exist.
    KCycleUnion { k: usize },
}

impl Family {
    /// Edge count used when none is given, for families that have one.
    pub fn default_edges(&self, n: usize) -> Option<usize> {
        match *self {
            Family::Star(_) => Some(n.saturating_sub(1)),
            Family::KCycleUnion { k } => Some(n / k * k),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::ErdosRenyiDirected => write!(f, "erdos-renyi-directed"),
            Family::PlantedDicut { p_in, p_out } => write!(f, "planted-dicut:{p_in},{p_out}"),
            Family::Star(StarDirection::Out) => write!(f, "star:out"),
            Family::Star(StarDirection::In) => write!(f, "star:in"),
            Family::PowerLaw { alpha } => write!(f, "power-law:{alpha}"),
            Family::KCycleUnion { k } => write!(f, "k-cycle-union:{k}"),
        }
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = anyhow::Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn parse_prob(s: &str) -> Result<f64> {
    let p: f64 = s.trim().parse().map_err(|_| anyhow!("bad probability {s:?}"))?;
    ensure!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    Ok(p)
}

impl FromStr for Family {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((name, args)) => (name, Some(args)),
            None => (s, None),
        };
        let fam = match (name, args) {
            ("erdos-renyi-directed", None) => Family::ErdosRenyiDirected,
            ("planted-dicut", Some(args)) => {
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| anyhow!("planted-dicut takes p_in,p_out"))?;
                let (p_in, p_out) = (parse_prob(a)?, parse_prob(b)?);
                ensure!(p_in > 0.0 || p_out > 0.0, "planted-dicut needs a positive probability");
                Family::PlantedDicut { p_in, p_out }
            }
            ("star", Some("out")) => Family::Star(StarDirection::Out),
            ("star", Some("in")) => Family::Star(StarDirection::In),
            ("power-law", Some(a)) => {
                let alpha: f64 = a.parse().map_err(|_| anyhow!("bad power-law exponent {a:?}"))?;
                ensure!(alpha > 1.0 && alpha.is_finite(), "power-law exponent must exceed 1");
                Family::PowerLaw { alpha }
            }
            ("k-cycle-union", Some(k)) => {
                let k: usize = k.parse().map_err(|_| anyhow!("bad cycle length {k:?}"))?;
                ensure!(k >= 2, "cycles need at least 2 vertices");
                Family::KCycleUnion { k }
            }
            _ => bail!(
                "unknown graph family {s:?}; expected erdos-renyi-directed, planted-dicut:P_IN,P_OUT, \
                 star:out|in, power-law:ALPHA or k-cycle-union:K"
            ),
        };
        Ok(fam)
    }
}

/// Order in which a generated graph's edges are streamed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    #[default]
    AsGenerated,
    RandomPermutation,
    /// Sorted by `(source, target)`, so each vertex's out-edges arrive together.
    AdversarialSorted,
}

/// The planted side of a planted-dicut graph, for reference values.
pub fn planted_side(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = dicut_core::rng::stream(seed, &[PLANTED_LABEL]);
    (0..n).map(|_| rng.gen_bool(0.5)).collect()
}

const PLANTED_LABEL: u64 = 0x504c_414e;
const EDGE_LABEL: u64 = 0x4544_4745;
const ORDER_LABEL: u64 = 0x4f52_4445;

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (VertexId, VertexId) {
    let u = rng.gen_range(1..=n as VertexId);
    let mut v = rng.gen_range(1..n as VertexId);
    if v >= u {
        v += 1;
    }
    (u, v)
}

/// Generates a graph on `n` vertices. `m` defaults per family where a
/// natural size exists. Equal arguments give equal graphs.
pub fn generate(family: &Family, n: usize, m: Option<usize>, seed: u64) -> Result<Multigraph> {
    ensure!(n >= 2, "need at least 2 vertices, got {n}");
    ensure!(n <= VertexId::MAX as usize, "too many vertices: {n}");
    let m = match (m, family.default_edges(n)) {
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => bail!("family {family} needs an edge count"),
    };
    let mut rng = dicut_core::rng::stream(seed, &[EDGE_LABEL]);
    let mut g = Multigraph::new(n);
    match *family {
        Family::ErdosRenyiDirected => {
            for _ in 0..m {
                let (u, v) = random_pair(&mut rng, n);
                g.add_edge(u, v)?;
            }
        }
        Family::PlantedDicut { p_in, p_out } => {
            let side = planted_side(n, seed);
            while g.edge_count() < m {
                let (u, v) = random_pair(&mut rng, n);
                let forward = side[u as usize - 1] && !side[v as usize - 1];
                if rng.gen_bool(if forward { p_out } else { p_in }) {
                    g.add_edge(u, v)?;
                }
            }
        }
        Family::Star(dir) => {
            for i in 0..m {
                let leaf = (i % (n - 1) + 2) as VertexId;
                match dir {
                    StarDirection::Out => g.add_edge(1, leaf)?,
                    StarDirection::In => g.add_edge(leaf, 1)?,
                }
            }
        }
        Family::PowerLaw { alpha } => {
            let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-1.0 / (alpha - 1.0))).collect();
            let dist = WeightedIndex::new(&weights)?;
            while g.edge_count() < m {
                let u = dist.sample(&mut rng) as VertexId + 1;
                let v = dist.sample(&mut rng) as VertexId + 1;
                if u != v {
                    g.add_edge(u, v)?;
                }
            }
        }
        Family::KCycleUnion { k } => {
            ensure!(k <= n, "cycle length {k} exceeds vertex count {n}");
            let mut order: Vec<VertexId> = (1..=n as VertexId).collect();
            'fill: loop {
                order.shuffle(&mut rng);
                for cycle in order.chunks_exact(k) {
                    for i in 0..k {
                        if g.edge_count() == m {
                            break 'fill;
                        }
                        g.add_edge(cycle[i], cycle[(i + 1) % k])?;
                    }
                }
                if m == 0 {
                    break;
                }
            }
        }
    }
    Ok(g)
}

/// Reorders the edges of `g`.
pub fn reorder(g: &Multigraph, ordering: Ordering, seed: u64) -> Multigraph {
    let mut edges = g.edges().to_vec();
    match ordering {
        Ordering::AsGenerated => return g.clone(),
        Ordering::RandomPermutation => edges.shuffle(&mut dicut_core::rng::stream(seed, &[ORDER_LABEL])),
        Ordering::AdversarialSorted => edges.sort_by_key(|e| (e.src, e.dst)),
    }
    let mut out = Multigraph::new(g.n());
    for e in edges {
        out.add_weighted_edge(e.src, e.dst, e.weight).expect("edges of a valid graph");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_roundtrip() {
        for s in ["erdos-renyi-directed", "planted-dicut:0.1,0.9", "star:out", "star:in", "power-law:2.5", "k-cycle-union:3"]
        {
            assert_eq!(s.parse::<Family>().unwrap().to_string(), s);
        }
        for bad in ["tree", "star", "star:up", "planted-dicut:0.1", "power-law:1", "k-cycle-union:1", "planted-dicut:0,0"] {
            assert!(bad.parse::<Family>().is_err(), "{bad}");
        }
    }

    #[test]
    fn out_star_has_value_one() {
        let g = generate(&Family::Star(StarDirection::Out), 6, None, 1).unwrap();
        assert_eq!(g.edge_count(), 5);
        assert!(g.edges().iter().all(|e| e.src == 1));
        assert_eq!(g.max_dicut_bruteforce().unwrap().value, 1.0);
    }

    #[test]
    fn empty_graph() {
        let g = generate(&Family::ErdosRenyiDirected, 10, Some(0), 1).unwrap();
        assert_eq!(g.edge_count(), 0);
        let mut out = Vec::new();
        dicut_core::multigraph::write_edge_stream(&g, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().filter(|l| !l.trim().is_empty()).count(), 1);
    }

    #[test]
    fn families_are_seeded() {
        let fams: Vec<Family> = ["erdos-renyi-directed", "planted-dicut:0.2,0.8", "power-law:2.2", "k-cycle-union:4"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        for f in &fams {
            let a = generate(f, 40, Some(120), 5).unwrap();
            assert_eq!(a.edge_count(), 120);
            assert_eq!(a, generate(f, 40, Some(120), 5).unwrap());
            assert_ne!(a, generate(f, 40, Some(120), 6).unwrap());
        }
    }

    #[test]
    fn cycle_union_is_regular() {
        let g = generate(&Family::KCycleUnion { k: 3 }, 12, None, 2).unwrap();
        assert_eq!(g.edge_count(), 12);
        for s in g.all_stats() {
            assert_eq!((s.deg_out, s.deg_in), (1.0, 1.0));
        }
    }

    #[test]
    fn planted_cut_is_near_optimal() {
        let n = 12;
        for seed in 0..5 {
            let g = generate(&Family::PlantedDicut { p_in: 0.02, p_out: 1.0 }, n, Some(40), seed).unwrap();
            let side = planted_side(n, seed);
            let planted = g.cut_value(&dicut_core::Cut::new(side)).unwrap();
            let best = g.max_dicut_bruteforce().unwrap().value;
            assert!(best >= planted);
            assert!(best - planted <= 0.1, "seed {seed}: planted {planted}, best {best}");
        }
    }

    #[test]
    fn orderings_permute_edges() {
        let g = generate(&Family::ErdosRenyiDirected, 30, Some(200), 3).unwrap();
        let key = |g: &Multigraph| {
            let mut v: Vec<_> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
            v.sort();
            v
        };
        for o in [Ordering::AsGenerated, Ordering::RandomPermutation, Ordering::AdversarialSorted] {
            let h = reorder(&g, o, 9);
            assert_eq!(key(&h), key(&g));
        }
        let sorted = reorder(&g, Ordering::AdversarialSorted, 0);
        assert!(sorted.edges().windows(2).all(|w| (w[0].src, w[0].dst) <= (w[1].src, w[1].dst)));
        assert_ne!(reorder(&g, Ordering::RandomPermutation, 1), reorder(&g, Ordering::RandomPermutation, 2));
    }
}
