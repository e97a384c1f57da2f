//! Single- and multi-source shortest-path forests with a `(1 + eps)` contract.
//!
//! Every forest is built in two passes. The first pass is an exact Dijkstra
//! computing `D(v)`, the distance to the nearest source (sources may carry an
//! offset, i.e. a virtual edge from a super-source). The second pass visits
//! vertices in `(D, id)` order and picks each vertex's parent among already
//! visited neighbours. In exact mode the parent is the smallest-id neighbour
//! on a shortest path. In noise mode a per-vertex slack `s_v` drawn from
//! `[1, 1 + eps]` lets the vertex accept any candidate up to `s_v * D(v)`, and
//! the largest such candidate wins. Since the exact predecessor was visited
//! earlier and already satisfies the bound, every vertex ends up with
//! `D <= dist <= (1 + eps) D` and `dist(v) = dist(parent) + w` exactly.

use rayon::prelude::*;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

use crate::graph::{Dist, EmbeddedGraph, LocalGraph, Localizer, SubgraphMask, VertexId, NONE};
use crate::util::{mix, unit_f64};

pub(crate) const UNREACHED: Dist = Dist::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsspError {
    #[error("source {0} lies outside the mask")]
    SourceOutsideMask(VertexId),
    #[error("no sources given")]
    NoSources,
    #[error("eps must be nonnegative (got {0})")]
    NegativeEps(f64),
    #[error("masks {0} and {1} overlap")]
    OverlappingMasks(usize, usize),
    #[error("group list has {got} entries for {masks} masks")]
    GroupCount { masks: usize, got: usize },
}

/// Where shortest paths start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    Single(VertexId),
    Set(Vec<VertexId>),
    /// Super-source joined to each listed vertex by a virtual edge of the
    /// given length (in ticks).
    Virtual(Vec<(VertexId, Dist)>),
}

impl SourceSpec {
    fn seeds(&self) -> Vec<(VertexId, Dist)> {
        match self {
            SourceSpec::Single(v) => vec![(*v, 0)],
            SourceSpec::Set(vs) => vs.iter().map(|&v| (v, 0)).collect(),
            SourceSpec::Virtual(es) => es.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsspMode {
    Exact,
    StretchNoise { seed: u64 },
}

/// Shortest-path forest over the whole vertex range of the graph. Vertices
/// outside the mask or unreachable have `None` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SsspForest {
    pub eps: f64,
    pub dist: Vec<Option<Dist>>,
    pub parent: Vec<Option<VertexId>>,
    /// Source whose (possibly virtual) edge starts the tree path.
    pub root: Vec<Option<VertexId>>,
}

impl SsspForest {
    pub fn reached(&self, v: VertexId) -> bool {
        self.dist[v as usize].is_some()
    }

    /// Tree path from `v` up to its root, starting with `v`.
    pub fn path_to_root(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        let mut x = v;
        while let Some(p) = self.parent[x as usize] {
            out.push(p);
            x = p;
        }
        out
    }

    /// Checks that every parent edge exists and telescopes exactly.
    pub fn is_consistent(&self, g: &EmbeddedGraph) -> bool {
        (0..g.n() as VertexId).all(|v| match (self.dist[v as usize], self.parent[v as usize]) {
            (Some(d), Some(p)) => match (self.dist[p as usize], g.weight_between(v, p)) {
                (Some(dp), Some(w)) => dp + w == d && self.root[p as usize] == self.root[v as usize],
                _ => false,
            },
            (None, Some(_)) => false,
            _ => true,
        })
    }
}

/// Options of the internal engine.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineParams {
    pub eps: f64,
    /// Noise key; `None` means exact parent selection.
    pub noise: Option<u64>,
    /// Multiplier applied to every edge weight.
    pub scale: u64,
    /// Vertices whose final distance exceeds this stay unreached.
    pub bound: Option<Dist>,
}

impl EngineParams {
    pub fn exact() -> Self {
        EngineParams { eps: 0.0, noise: None, scale: 1, bound: None }
    }

    pub fn new(eps: f64, mode: SsspMode) -> Self {
        let noise = match mode {
            SsspMode::Exact => None,
            SsspMode::StretchNoise { seed } => (eps > 0.0).then_some(seed),
        };
        EngineParams { eps, noise, scale: 1, bound: None }
    }
}

/// Forest over a [`LocalGraph`], in local ids with sentinel values.
#[derive(Debug, Clone)]
pub(crate) struct LocalForest {
    pub dist: Vec<Dist>,
    pub parent: Vec<u32>,
    /// Local id of the seed starting the path.
    pub root: Vec<u32>,
    /// Reached vertices in nondecreasing `(D, id)` order; parents precede
    /// children.
    pub order: Vec<u32>,
}

/// Scratch buffers reused across engine calls on graphs of varying size.
#[derive(Default)]
pub(crate) struct Scratch {
    exact: Vec<Dist>,
    offset: Vec<Dist>,
    heap: BinaryHeap<Reverse<(Dist, u32)>>,
}

pub(crate) fn local_sssp(lg: &LocalGraph, seeds: &[(u32, Dist)], p: &EngineParams) -> LocalForest {
    local_sssp_with(lg, seeds, p, &mut Scratch::default())
}

pub(crate) fn local_sssp_with(
    lg: &LocalGraph,
    seeds: &[(u32, Dist)],
    p: &EngineParams,
    s: &mut Scratch,
) -> LocalForest {
    let n = lg.n();
    s.exact.clear();
    s.exact.resize(n, UNREACHED);
    s.offset.clear();
    s.offset.resize(n, UNREACHED);
    s.heap.clear();
    // Dijkstra bound: dist >= D, so anything with D past the bound is out.
    let limit = p.bound.unwrap_or(UNREACHED - 1);
    for &(v, off) in seeds {
        if off < s.offset[v as usize] {
            s.offset[v as usize] = off;
        }
    }
    for &(v, _) in seeds {
        let off = s.offset[v as usize];
        if off <= limit && off < s.exact[v as usize] {
            s.exact[v as usize] = off;
            s.heap.push(Reverse((off, v)));
        }
    }
    let mut order = Vec::new();
    let mut done = vec![false; n];
    while let Some(Reverse((d, v))) = s.heap.pop() {
        if done[v as usize] || d != s.exact[v as usize] {
            continue;
        }
        done[v as usize] = true;
        order.push(v);
        for i in lg.range(v) {
            let u = lg.nbr[i];
            let nd = d + lg.wt[i] * p.scale;
            if nd <= limit && nd < s.exact[u as usize] {
                s.exact[u as usize] = nd;
                s.heap.push(Reverse((nd, u)));
            }
        }
    }

    let mut dist = vec![UNREACHED; n];
    let mut parent = vec![NONE; n];
    let mut root = vec![NONE; n];
    for &v in &order {
        let dv = s.exact[v as usize];
        let budget = match p.noise {
            None => dv,
            Some(key) => {
                let u = unit_f64(mix(&[key, lg.to_global[v as usize] as u64]));
                (((1.0 + p.eps * u) * dv as f64).floor() as Dist).max(dv)
            }
        };
        // (candidate, neighbour); NONE marks the virtual edge
        let mut best: Option<(Dist, u32)> = None;
        let mut min_cand = UNREACHED;
        let mut min_from = NONE;
        let virt = s.offset[v as usize];
        if virt != UNREACHED {
            min_cand = virt;
            if virt <= budget {
                best = Some((virt, NONE));
            }
        }
        for i in lg.range(v) {
            let u = lg.nbr[i];
            let du = dist[u as usize];
            // only vertices earlier in the order have a distance yet
            if du == UNREACHED {
                continue;
            }
            let c = du + lg.wt[i] * p.scale;
            if c < min_cand || (c == min_cand && min_from != NONE && u < min_from) {
                min_cand = c;
                min_from = u;
            }
            if c <= budget {
                let better = match best {
                    None => true,
                    Some((bc, bu)) => c > bc || (c == bc && bu != NONE && u < bu),
                };
                if better {
                    best = Some((c, u));
                }
            }
        }
        let (d, from) = best.unwrap_or((min_cand, min_from));
        debug_assert!(d != UNREACHED);
        dist[v as usize] = d;
        if from == NONE {
            root[v as usize] = v;
        } else {
            parent[v as usize] = from;
            root[v as usize] = root[from as usize];
        }
    }
    // parents precede children in `order`, and dist grows along tree paths,
    // so truncation by final distance leaves a valid forest
    if let Some(b) = p.bound {
        order.retain(|&v| {
            if dist[v as usize] > b {
                dist[v as usize] = UNREACHED;
                parent[v as usize] = NONE;
                root[v as usize] = NONE;
                false
            } else {
                true
            }
        });
    }
    LocalForest { dist, parent, root, order }
}

fn validate(mask: &SubgraphMask, sources: &SourceSpec) -> Result<Vec<(VertexId, Dist)>, SsspError> {
    let seeds = sources.seeds();
    if seeds.is_empty() {
        return Err(SsspError::NoSources);
    }
    for &(v, _) in &seeds {
        if !mask.contains(v) {
            return Err(SsspError::SourceOutsideMask(v));
        }
    }
    Ok(seeds)
}

fn run(
    g: &EmbeddedGraph,
    verts: &[VertexId],
    lg: &LocalGraph,
    seeds: &[(VertexId, Dist)],
    p: &EngineParams,
) -> SsspForest {
    let local_seeds: Vec<(u32, Dist)> = seeds
        .iter()
        .map(|&(v, d)| (verts.binary_search(&v).expect("seed inside mask") as u32, d))
        .collect();
    let lf = local_sssp(lg, &local_seeds, p);
    let n = g.n();
    let mut out = SsspForest { eps: p.eps, dist: vec![None; n], parent: vec![None; n], root: vec![None; n] };
    for &l in &lf.order {
        let v = verts[l as usize] as usize;
        out.dist[v] = Some(lf.dist[l as usize]);
        let pl = lf.parent[l as usize];
        out.parent[v] = (pl != NONE).then(|| verts[pl as usize]);
        out.root[v] = Some(verts[lf.root[l as usize] as usize]);
    }
    out
}

/// Exact shortest-path forest inside the subgraph induced by `mask`.
pub fn exact_sssp(g: &EmbeddedGraph, mask: &SubgraphMask, sources: &SourceSpec) -> Result<SsspForest, SsspError> {
    approx_sssp(g, mask, sources, 0.0, SsspMode::Exact)
}

/// Forest with `d <= dist <= (1 + eps) d` for every reached vertex.
pub fn approx_sssp(
    g: &EmbeddedGraph,
    mask: &SubgraphMask,
    sources: &SourceSpec,
    eps: f64,
    mode: SsspMode,
) -> Result<SsspForest, SsspError> {
    if !(eps >= 0.0) {
        return Err(SsspError::NegativeEps(eps));
    }
    let seeds = validate(mask, sources)?;
    let verts = mask.vertices();
    let lg = Localizer::new(g.n()).view(g, &verts);
    Ok(run(g, &verts, &lg, &seeds, &EngineParams::new(eps, mode)))
}

/// Forests for several source groups in each of several disjoint masks.
/// Paths never leave their mask. Result is indexed `[mask][group]`.
pub fn multi_source_groups(
    g: &EmbeddedGraph,
    masks: &[SubgraphMask],
    groups: &[Vec<SourceSpec>],
    eps: f64,
    mode: SsspMode,
) -> Result<Vec<Vec<SsspForest>>, SsspError> {
    if !(eps >= 0.0) {
        return Err(SsspError::NegativeEps(eps));
    }
    if groups.len() != masks.len() {
        return Err(SsspError::GroupCount { masks: masks.len(), got: groups.len() });
    }
    let mut owner = vec![usize::MAX; g.n()];
    for (i, m) in masks.iter().enumerate() {
        for v in m.vertices() {
            if owner[v as usize] != usize::MAX {
                return Err(SsspError::OverlappingMasks(owner[v as usize], i));
            }
            owner[v as usize] = i;
        }
    }
    let mut all_seeds = Vec::with_capacity(masks.len());
    for (m, gs) in masks.iter().zip(groups) {
        all_seeds.push(gs.iter().map(|s| validate(m, s)).collect::<Result<Vec<_>, _>>()?);
    }
    let params = EngineParams::new(eps, mode);
    Ok(masks
        .par_iter()
        .zip(all_seeds.par_iter())
        .map(|(m, seeds)| {
            let verts = m.vertices();
            let lg = Localizer::new(g.n()).view(g, &verts);
            seeds.iter().map(|s| run(g, &verts, &lg, s, &params)).collect()
        })
        .collect())
}
