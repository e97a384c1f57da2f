//! Hop-by-hop forwarding over a built scheme, and stretch statistics
//! against exact distances.
//!
//! The packet header is the target's label plus the tree chosen at the
//! source. In strict mode the header carries only the label and every node
//! re-selects the tree from its own table.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Dist, EmbeddedGraph, SubgraphMask, VertexId};
use crate::scheme::{select_tree, Scheme, SchemeLabel, Selection};
use crate::sssp::{exact_sssp, SourceSpec};
use crate::tree_routing::{tree_next_hop, Hop, TreeRoutingError};

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum RouteError {
    #[error("source and target share no tree")]
    NoTree,
    #[error("vertex {at} has no table for tree {tree:016x}")]
    MissingTable { at: VertexId, tree: u64 },
    #[error("hop {from} -> {to} is not an edge")]
    NotAdjacent { from: VertexId, to: VertexId },
    #[error("hop limit exceeded")]
    HopLimit,
    #[error("tree routing: {0}")]
    Tree(String),
}

impl From<TreeRoutingError> for RouteError {
    fn from(e: TreeRoutingError) -> Self {
        RouteError::Tree(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub label: SchemeLabel,
    /// `None` in strict mode.
    pub tree: Option<u64>,
}

/// One forwarding step at `here`, using only its table and the header.
pub fn forward(scheme: &Scheme, here: VertexId, header: &Header) -> Result<(Hop, u64), RouteError> {
    let tree = match header.tree {
        Some(t) => t,
        None => match select_tree(&scheme.table(here), &header.label) {
            Selection::Delivered => return Ok((Hop::Delivered, 0)),
            Selection::Tree { id, .. } => id,
            Selection::NoTree => return Err(RouteError::NoTree),
        },
    };
    let entry = scheme.table_entry(here, tree).ok_or(RouteError::MissingTable { at: here, tree })?;
    let target = header.label.entry(tree).ok_or(RouteError::MissingTable { at: header.label.node, tree })?;
    let hop = tree_next_hop(here, &entry.table, target, |c| scheme.is_child(tree, here, c))?;
    Ok((hop, tree))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketTrace {
    pub source: VertexId,
    pub target: VertexId,
    pub tree: Option<u64>,
    pub level: Option<u32>,
    pub path: Vec<VertexId>,
    /// Ticks; `None` on failure.
    pub routed: Option<Dist>,
    pub exact: Dist,
    pub denom: u64,
    /// `routed / exact`, 1 for `s = t`, infinite on failure.
    #[serde(serialize_with = "finite_or_null")]
    pub stretch: f64,
    pub hops: usize,
    /// Strict mode only: hops where the re-selected tree differs from the
    /// source's choice.
    pub tree_switches: usize,
    pub error: Option<RouteError>,
}

fn finite_or_null<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

impl PacketTrace {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Routes from `s` to `t`. `exact` is the true distance, used for stretch.
pub fn route(scheme: &Scheme, g: &EmbeddedGraph, s: VertexId, t: VertexId, exact: Dist, strict: bool) -> PacketTrace {
    let label = scheme.label(t);
    let mut trace = PacketTrace {
        source: s,
        target: t,
        tree: None,
        level: None,
        path: vec![s],
        routed: None,
        exact,
        denom: g.denom(),
        stretch: f64::INFINITY,
        hops: 0,
        tree_switches: 0,
        error: None,
    };
    let first = match select_tree(&scheme.table(s), &label) {
        Selection::Delivered => {
            trace.routed = Some(0);
            trace.stretch = 1.0;
            return trace;
        }
        Selection::NoTree => {
            trace.error = Some(RouteError::NoTree);
            return trace;
        }
        Selection::Tree { id, .. } => id,
    };
    trace.tree = Some(first);
    trace.level = scheme.tree_level(first);
    let header = Header { label, tree: (!strict).then_some(first) };
    let limit = 2 * g.n() + 2;
    let mut here = s;
    let mut len: Dist = 0;
    loop {
        let (hop, used) = match forward(scheme, here, &header) {
            Ok(x) => x,
            Err(e) => {
                trace.error = Some(e);
                return trace;
            }
        };
        if hop == Hop::Delivered {
            break;
        }
        trace.tree_switches += usize::from(used != first);
        let next = hop.vertex().unwrap();
        match g.weight_between(here, next) {
            Some(w) => len += w,
            None => {
                trace.error = Some(RouteError::NotAdjacent { from: here, to: next });
                return trace;
            }
        }
        trace.path.push(next);
        here = next;
        if trace.path.len() > limit {
            trace.error = Some(RouteError::HopLimit);
            return trace;
        }
    }
    trace.hops = trace.path.len() - 1;
    trace.routed = Some(len);
    trace.stretch = if exact == 0 { 1.0 } else { len as f64 / exact as f64 };
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PairSampler {
    Uniform,
    /// Equal shares per distance decade `[10^k, 10^(k+1))` (real units).
    Decades,
    Explicit(Vec<(VertexId, VertexId)>),
}

/// Sampled pairs with their exact distances, deterministic under `seed`.
pub fn sample_pairs(g: &EmbeddedGraph, sampler: &PairSampler, count: usize, seed: u64) -> Vec<(VertexId, VertexId, Dist)> {
    let n = g.n();
    let full = SubgraphMask::full(n);
    let dist_from = |s: VertexId| -> Vec<Dist> {
        exact_sssp(g, &full, &SourceSpec::Single(s)).unwrap().dist.into_iter().map(|d| d.unwrap()).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(VertexId, VertexId)> = match sampler {
        PairSampler::Explicit(p) => p.clone(),
        PairSampler::Uniform => (0..count)
            .map(|_| {
                let s = rng.gen_range(0..n) as VertexId;
                let mut t = rng.gen_range(0..n) as VertexId;
                while n > 1 && t == s {
                    t = rng.gen_range(0..n) as VertexId;
                }
                (s, t)
            })
            .collect(),
        PairSampler::Decades => {
            let decade = |d: Dist| g.to_real(d).log10().floor().max(0.0) as u32;
            let ecc0 = dist_from(0).into_iter().max().unwrap_or(0);
            let decades = decade(2 * ecc0.max(1)) + 1;
            let mut out = Vec::with_capacity(count);
            let mut cache: BTreeMap<VertexId, Vec<Dist>> = BTreeMap::new();
            let mut k = 0;
            let mut misses = 0;
            while out.len() < count && n > 1 && misses < 64 * count {
                let s = rng.gen_range(0..n) as VertexId;
                let ds = cache.entry(s).or_insert_with(|| dist_from(s));
                let pool: Vec<VertexId> =
                    (0..n as VertexId).filter(|&t| t != s && decade(ds[t as usize]) == k % decades).collect();
                if pool.is_empty() {
                    misses += 1;
                    k += u32::from(misses % 8 == 0);
                    continue;
                }
                out.push((s, pool[rng.gen_range(0..pool.len())]));
                k += 1;
            }
            out
        }
    };
    let mut by_source: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for (i, &(s, _)) in pairs.iter().enumerate() {
        by_source.entry(s).or_default().push(i);
    }
    let mut out = vec![(0, 0, 0); pairs.len()];
    let pairs = &pairs;
    let rows: Vec<(usize, Dist)> = by_source
        .into_par_iter()
        .flat_map_iter(|(s, idx)| {
            let d = dist_from(s);
            idx.into_iter().map(move |i| (i, d[pairs[i].1 as usize])).collect::<Vec<_>>()
        })
        .collect();
    for (i, d) in rows {
        out[i] = (pairs[i].0, pairs[i].1, d);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DecadeStats {
    pub decade: u32,
    pub pairs: usize,
    pub failures: usize,
    pub within_bound: usize,
    pub p99: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StretchReport {
    pub eps: f64,
    pub pairs: usize,
    pub failures: usize,
    /// Successful routes with stretch at most `1 + eps`.
    pub within_bound: usize,
    /// Successful routes shorter than the exact distance; always 0.
    pub below_exact: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    /// Chosen trees by level.
    pub per_level: BTreeMap<u32, usize>,
    pub per_decade: Vec<DecadeStats>,
    pub tree_switches: usize,
    pub failure_kinds: BTreeMap<String, usize>,
}

impl StretchReport {
    pub fn within_fraction(&self) -> f64 {
        if self.pairs == 0 {
            1.0
        } else {
            self.within_bound as f64 / self.pairs as f64
        }
    }

    pub fn from_traces(traces: &[PacketTrace], eps: f64) -> Self {
        let within = |t: &PacketTrace| t.ok() && t.stretch <= 1.0 + eps + 1e-12;
        let mut r = StretchReport { eps, pairs: traces.len(), ..Default::default() };
        let mut ok: Vec<f64> = Vec::new();
        let mut decades: BTreeMap<u32, (DecadeStats, Vec<f64>)> = BTreeMap::new();
        for t in traces {
            let dec = if t.exact == 0 { 0 } else { (t.exact as f64 / t.denom as f64).log10().floor().max(0.0) as u32 };
            let e = decades.entry(dec).or_insert_with(|| (DecadeStats { decade: dec, ..Default::default() }, Vec::new()));
            e.0.pairs += 1;
            r.tree_switches += t.tree_switches;
            if let Some(l) = t.level {
                *r.per_level.entry(l).or_default() += 1;
            }
            match (&t.error, t.routed) {
                (None, Some(len)) => {
                    ok.push(t.stretch);
                    e.1.push(t.stretch);
                    r.below_exact += usize::from(len < t.exact);
                    r.within_bound += usize::from(within(t));
                    e.0.within_bound += usize::from(within(t));
                }
                (err, _) => {
                    r.failures += 1;
                    e.0.failures += 1;
                    let kind = err.as_ref().map_or("unknown".to_string(), |e| format!("{e:?}"));
                    let kind = kind.split([' ', '{', '(']).next().unwrap_or("").to_string();
                    *r.failure_kinds.entry(kind).or_default() += 1;
                }
            }
        }
        r.p50 = quantile(&mut ok, 0.5);
        r.p90 = quantile(&mut ok, 0.9);
        r.p99 = quantile(&mut ok, 0.99);
        r.max = ok.last().copied().unwrap_or(f64::NAN);
        r.per_decade = decades
            .into_values()
            .map(|(mut d, mut s)| {
                d.p99 = quantile(&mut s, 0.99);
                d
            })
            .collect();
        r
    }

    /// Per-pair CSV: s, t, exact, routed, stretch, tree.
    pub fn write_csv<W: Write>(traces: &[PacketTrace], w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "t", "exact", "routed", "stretch", "tree"])?;
        for t in traces {
            let routed = t.routed.map(|d| (d as f64 / t.denom as f64).to_string()).unwrap_or_default();
            let tree = t.tree.map(|x| format!("{x:016x}")).unwrap_or_default();
            let exact = (t.exact as f64 / t.denom as f64).to_string();
            wr.write_record([t.source.to_string(), t.target.to_string(), exact, routed, t.stretch.to_string(), tree])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Nearest-rank quantile; sorts `xs`. NaN when empty.
fn quantile(xs: &mut [f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let rank = ((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len());
    xs[rank - 1]
}

pub fn evaluate(
    scheme: &Scheme,
    g: &EmbeddedGraph,
    sampler: &PairSampler,
    count: usize,
    seed: u64,
    strict: bool,
) -> (StretchReport, Vec<PacketTrace>) {
    let pairs = sample_pairs(g, sampler, count, seed);
    let traces: Vec<PacketTrace> = pairs.par_iter().map(|&(s, t, d)| route(scheme, g, s, t, d, strict)).collect();
    (StretchReport::from_traces(&traces, scheme.config.eps), traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_path, WeightDist};
    use crate::scheme::{build_scheme, SchemeConfig};

    fn grid(side: usize, seed: u64) -> (EmbeddedGraph, Scheme) {
        let g = generate_grid(side, side, &WeightDist::Unit, 0).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(side * side, 0.5, seed)).unwrap();
        (g, s)
    }

    #[test]
    fn self_route() {
        let (g, s) = grid(3, 1);
        let t = route(&s, &g, 4, 4, 0, false);
        assert_eq!((t.path.clone(), t.stretch, t.routed), (vec![4], 1.0, Some(0)));
    }

    #[test]
    fn adjacent_on_a_path() {
        let g = generate_path(&[2, 3]).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(3, 0.5, 0)).unwrap();
        let t = route(&s, &g, 0, 1, 2, false);
        assert_eq!(t.path, vec![0, 1]);
        assert_eq!(t.stretch, 1.0);
    }

    #[test]
    fn traces_are_walks_and_never_beat_exact() {
        let (g, s) = grid(7, 4);
        let (rep, traces) = evaluate(&s, &g, &PairSampler::Uniform, 300, 9, false);
        assert_eq!(rep.failures, 0);
        assert_eq!(rep.below_exact, 0);
        for t in &traces {
            let len: Dist = t.path.windows(2).map(|w| g.weight_between(w[0], w[1]).unwrap()).sum();
            assert_eq!(Some(len), t.routed);
            let mut seen = t.path.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), t.path.len(), "vertex repeated in {:?}", t.path);
        }
        assert!(rep.within_fraction() >= 0.99, "{rep:?}");
    }

    #[test]
    fn forwarding_is_memoryless() {
        let (g, s) = grid(6, 2);
        let t = route(&s, &g, 0, 35, 10, false);
        let header = Header { label: s.label(35), tree: t.tree };
        let mid = t.path[t.path.len() / 2];
        let mut here = mid;
        let mut rest = vec![here];
        while let (Hop::Up(v) | Hop::Down(v), _) = forward(&s, here, &header).unwrap() {
            here = v;
            rest.push(v);
        }
        assert_eq!(rest, t.path[t.path.len() / 2..]);
    }

    #[test]
    fn strict_mode_delivers() {
        let (g, s) = grid(6, 3);
        let (rep, _) = evaluate(&s, &g, &PairSampler::Uniform, 200, 1, true);
        assert_eq!(rep.failures, 0, "{rep:?}");
        assert_eq!(rep.below_exact, 0);
    }

    #[test]
    fn decades_and_quantiles() {
        let g = generate_grid(12, 12, &WeightDist::Unit, 0).unwrap();
        let pairs = sample_pairs(&g, &PairSampler::Decades, 40, 5);
        assert_eq!(pairs.len(), 40);
        let small = pairs.iter().filter(|p| p.2 < 10).count();
        assert!((15..=25).contains(&small), "{small}");
        assert_eq!(pairs, sample_pairs(&g, &PairSampler::Decades, 40, 5));
        let mut xs = vec![3.0, 1.0, 2.0, 4.0];
        assert_eq!((quantile(&mut xs, 0.5), quantile(&mut xs, 0.99)), (2.0, 4.0));
    }

    #[test]
    fn no_common_tree_is_a_failure() {
        let (g, mut s) = grid(3, 0);
        s.index[8].clear();
        let t = route(&s, &g, 0, 8, 4, false);
        assert_eq!(t.error, Some(RouteError::NoTree));
        assert!(t.stretch.is_infinite());
        let r = StretchReport::from_traces(&[t], 0.5);
        assert_eq!((r.failures, r.failure_kinds["NoTree"]), (1, 1));
    }
}
