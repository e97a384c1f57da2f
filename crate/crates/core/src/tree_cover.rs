//! Additive tree covers.
//!
//! Every vertex starts uncharted. Each recursion step decomposes the
//! uncharted subgraph into partitions of diameter `O(c_pd * Delta)`, finds a
//! separator path in every partition, marks portals along both separator
//! arms, grows a truncated approximate SSSP tree from every portal inside its
//! partition, and finally removes the separator vertices. The loop ends when
//! nothing is left uncharted.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::decompose_local;
use crate::graph::{Dist, EmbeddedGraph, LocalGraph, Localizer, SubgraphMask, VertexId, NONE};
use crate::separator::{separate_local, SeparatorError, SeparatorMethod};
use crate::sssp::{local_sssp, EngineParams, SsspMode};
use crate::util::{ceil_log2, mix};

/// How the SSSP oracle behaves inside the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OracleMode {
    /// Exact trees regardless of the configured approximation.
    Exact,
    /// Stretch-noise trees; each call's eps is capped at `cap`.
    Noise { cap: f64 },
}

impl OracleMode {
    fn params(&self, eps: f64, key: u64) -> EngineParams {
        match *self {
            OracleMode::Exact => EngineParams::exact(),
            OracleMode::Noise { cap } => EngineParams::new(eps.min(cap), SsspMode::StretchNoise { seed: key }),
        }
    }

    fn sssp_mode(&self, key: u64) -> SsspMode {
        match self {
            OracleMode::Exact => SsspMode::Exact,
            OracleMode::Noise { .. } => SsspMode::StretchNoise { seed: key },
        }
    }

    fn cap(&self, eps: f64) -> f64 {
        match *self {
            OracleMode::Exact => 0.0,
            OracleMode::Noise { cap } => eps.min(cap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverParams {
    /// Distance scale in ticks.
    pub delta: Dist,
    pub eps: f64,
    pub c_pd: f64,
    pub eps_pd: f64,
    pub eps_s: f64,
    pub eps_p: f64,
    pub eps_t: f64,
    pub max_recursions: usize,
    pub repetitions: usize,
    pub oracle: OracleMode,
    /// Mixed into tree ids so covers of different scales never collide.
    pub tag: u32,
}

/// `min(6400 L^2, 8 L)` with `L = ceil(log2 n)`, at least 1.
pub fn default_c_pd(n: usize) -> f64 {
    let l = ceil_log2(n) as f64;
    (6400.0 * l * l).min(8.0 * l).max(1.0)
}

impl CoverParams {
    pub fn new(n: usize, delta: Dist, eps: f64) -> Self {
        let c_pd = default_c_pd(n);
        let l = ceil_log2(n) as usize;
        CoverParams {
            delta,
            eps,
            c_pd,
            eps_pd: 1.0 / c_pd,
            eps_s: eps / c_pd,
            eps_p: eps / 6.0,
            eps_t: eps / 6.0,
            max_recursions: (6 * l).max(1),
            repetitions: (2 * l).max(1),
            oracle: OracleMode::Exact,
            tag: 0,
        }
    }

    pub fn with_oracle(mut self, oracle: OracleMode) -> Self {
        self.oracle = oracle;
        self
    }

    /// `ceil(c_pd * delta)`, the partition scale.
    pub fn relaxed_delta(&self) -> Dist {
        (self.c_pd * self.delta as f64).ceil() as Dist
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("delta must be positive")]
    ZeroDelta,
    #[error("eps must be positive (got {0})")]
    BadEps(f64),
    #[error("{remaining} vertices still uncharted after {levels} recursions")]
    RecursionCap { levels: usize, remaining: usize },
    #[error("component of {before} vertices left a piece of {after} (more than 5/6) in a single-partition step")]
    ShrinkViolated { before: usize, after: usize },
    #[error("tree id collision between two trees")]
    IdCollision,
    #[error(transparent)]
    Separator(#[from] SeparatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Portal {
    /// Index of the arm (0 or 1) the portal was placed on.
    pub path: usize,
    pub vertex: VertexId,
    /// Distance class `i` with along-path distance in `((i-1) s, i s]`.
    pub class: u64,
}

/// One portal per distance class along `arm`, whose first vertex is the
/// arm's root endpoint. `dist[k]` is the along-path distance of `arm[k]`.
pub fn make_portals_from(arm: &[VertexId], dist: &[Dist], spacing: f64, path: usize) -> Vec<Portal> {
    let mut out = Vec::new();
    let mut last = 0;
    for (&v, &d) in arm.iter().zip(dist) {
        let class = ((d as f64 / spacing).ceil() as u64).max(1);
        if out.is_empty() || class > last {
            out.push(Portal { path, vertex: v, class });
            last = class;
        }
    }
    out
}

/// Portals on a path of graph vertices, spaced `eps_p * delta` ticks.
pub fn make_portals(g: &EmbeddedGraph, arm: &[VertexId], eps_p: f64, delta: Dist) -> Vec<Portal> {
    let mut dist = Vec::with_capacity(arm.len());
    let mut acc = 0;
    for (k, &v) in arm.iter().enumerate() {
        if k > 0 {
            acc += g.weight_between(arm[k - 1], v).expect("arm is a path of the graph");
        }
        dist.push(acc);
    }
    make_portals_from(arm, &dist, eps_p * delta as f64, 0)
}

pub const NO_PARENT: u32 = u32::MAX;

/// Truncated SSSP tree grown from one portal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverTree {
    pub id: u64,
    pub repetition: u32,
    pub recursion: u32,
    /// Center of the partition the tree lives in.
    pub partition: VertexId,
    pub root: VertexId,
    /// Members with parents before children; `members[0]` is the root.
    pub members: Vec<VertexId>,
    /// Index into `members`, [`NO_PARENT`] for the root.
    pub parent: Vec<u32>,
    /// Tree distance to the root in ticks.
    pub dist: Vec<Dist>,
}

impl CoverTree {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn parent_of(&self, i: usize) -> Option<usize> {
        let p = self.parent[i];
        (p != NO_PARENT).then_some(p as usize)
    }

    /// Tree distance between members `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Dist {
        let (mut a, mut b) = (i, j);
        // parents precede children, so the larger index is never an ancestor
        while a != b {
            if a > b {
                a = self.parent[a] as usize;
            } else {
                b = self.parent[b] as usize;
            }
        }
        self.dist[i] + self.dist[j] - 2 * self.dist[a]
    }
}

/// Per-cover construction statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CoverStats {
    pub recursion_depth: usize,
    pub partitions_per_level: Vec<usize>,
    pub separators: usize,
    pub outerplanar_separators: usize,
    pub face_pair_separators: usize,
    pub degenerate_separators: usize,
    /// Separators leaving a component above `ceil(2/3 * region)`.
    pub unbalanced_separators: usize,
    /// Largest residual component over region size across all separators.
    pub worst_balance: f64,
    /// Components of multi-partition steps that kept more than 5/6.
    pub multi_partition_shrink_misses: usize,
    pub covering_violations: usize,
    pub portals: usize,
    pub trees: usize,
    pub max_trees_per_vertex: usize,
    /// Per recursion level: the most trees any vertex joined at that level.
    pub max_trees_per_vertex_per_level: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeCover {
    pub params: CoverParams,
    pub repetition: u32,
    pub trees: Vec<CoverTree>,
    /// Per vertex: `(tree index, member index)` of every containing tree.
    pub index: Vec<Vec<(u32, u32)>>,
    pub stats: CoverStats,
}

impl TreeCover {
    fn rebuild_index(&mut self, n: usize) {
        let mut index = vec![Vec::new(); n];
        for (t, tree) in self.trees.iter().enumerate() {
            for (i, &v) in tree.members.iter().enumerate() {
                index[v as usize].push((t as u32, i as u32));
            }
        }
        let levels = self.stats.recursion_depth;
        let mut per_level = vec![0; levels];
        for entries in &index {
            let mut counts = vec![0usize; levels];
            for &(t, _) in entries {
                counts[self.trees[t as usize].recursion as usize] += 1;
            }
            for (m, c) in per_level.iter_mut().zip(counts) {
                *m = (*m).max(c);
            }
        }
        self.stats.max_trees_per_vertex = index.iter().map(Vec::len).max().unwrap_or(0);
        self.stats.max_trees_per_vertex_per_level = per_level;
        self.stats.trees = self.trees.len();
        self.index = index;
    }

    /// Smallest tree distance between `v` and `w` over trees holding both.
    pub fn best_distance(&self, v: VertexId, w: VertexId) -> Option<Dist> {
        let (a, b) = (&self.index[v as usize], &self.index[w as usize]);
        let mut best = None;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let d = self.trees[a[i].0 as usize].distance(a[i].1 as usize, b[j].1 as usize);
                    best = Some(best.map_or(d, |b: Dist| b.min(d)));
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    /// Diagnostic dump: one line `vertex tree_id dist parent` per membership.
    pub fn dump(&self) -> String {
        let mut lines = Vec::new();
        for t in &self.trees {
            for (i, &v) in t.members.iter().enumerate() {
                let parent = t.parent_of(i).map_or("-".to_string(), |p| t.members[p].to_string());
                lines.push(format!("{v} {:016x} {} {parent}", t.id, t.dist[i]));
            }
        }
        lines.sort();
        let mut s = String::new();
        for l in lines {
            let _ = writeln!(s, "{l}");
        }
        s
    }
}

pub(crate) fn tree_id(tag: u32, repetition: u32, recursion: u32, partition: VertexId, portal: VertexId) -> u64 {
    mix(&[tag as u64, repetition as u64, recursion as u64, partition as u64, portal as u64])
}

struct PartitionOutput {
    separator: Vec<VertexId>,
    trees: Vec<CoverTree>,
    method: SeparatorMethod,
    region: usize,
    max_component: usize,
    portals: usize,
}

fn grow_partition(
    g: &EmbeddedGraph,
    members: &[VertexId],
    center: VertexId,
    params: &CoverParams,
    repetition: u32,
    recursion: u32,
    seed: u64,
) -> Result<PartitionOutput, SeparatorError> {
    let sub = Localizer::new(g.n()).view(g, members);
    let key = mix(&[seed, recursion as u64, center as u64]);
    let tree = local_sssp(&sub, &[(0, 0)], &params.oracle.params(params.eps_s, key));
    let sep = separate_local(&sub, &tree.parent, &vec![1.0; sub.n()])?;
    // arms run from the root endpoint (the LCA) outwards
    let mut arms = vec![sep.path[..=sep.lca_index].to_vec(), sep.path[sep.lca_index..].to_vec()];
    arms[0].reverse();
    let spacing = params.eps_p * params.delta as f64;
    let mut portals: Vec<u32> = Vec::new();
    for (k, arm) in arms.iter().enumerate() {
        let base = tree.dist[arm[0] as usize];
        let dist: Vec<Dist> = arm.iter().map(|&v| tree.dist[v as usize] - base).collect();
        for p in make_portals_from(arm, &dist, spacing, k) {
            if !portals.contains(&p.vertex) {
                portals.push(p.vertex);
            }
        }
    }
    let bound = 2 * params.delta;
    let mut trees = Vec::new();
    for &p in &portals {
        let portal = sub.to_global[p as usize];
        let id = tree_id(params.tag, repetition, recursion, center, portal);
        let mut ep = params.oracle.params(params.eps_t, mix(&[seed, id]));
        ep.bound = Some(bound);
        let f = local_sssp(&sub, &[(p, 0)], &ep);
        if f.order.len() < 2 {
            continue;
        }
        trees.push(compact_tree(&sub, &f.order, &f.parent, &f.dist, id, repetition, recursion, center, portal));
    }
    Ok(PartitionOutput {
        separator: sep.path.iter().map(|&l| sub.to_global[l as usize]).collect(),
        trees,
        method: sep.method,
        region: members.len(),
        max_component: sep.max_component_weight.round() as usize,
        portals: portals.len(),
    })
}

#[allow(clippy::too_many_arguments)]
fn compact_tree(
    sub: &LocalGraph,
    order: &[u32],
    parent: &[u32],
    dist: &[Dist],
    id: u64,
    repetition: u32,
    recursion: u32,
    partition: VertexId,
    root: VertexId,
) -> CoverTree {
    let mut slot: HashMap<u32, u32> = HashMap::with_capacity(order.len());
    let mut members = Vec::with_capacity(order.len());
    let mut par = Vec::with_capacity(order.len());
    let mut d = Vec::with_capacity(order.len());
    for (i, &l) in order.iter().enumerate() {
        slot.insert(l, i as u32);
        members.push(sub.to_global[l as usize]);
        let p = parent[l as usize];
        par.push(if p == NONE { NO_PARENT } else { slot[&p] });
        d.push(dist[l as usize]);
    }
    CoverTree { id, repetition, recursion, partition, root, members, parent: par, dist: d }
}

/// One additive tree cover for repetition 0.
pub fn build_cover(g: &EmbeddedGraph, params: &CoverParams, seed: u64) -> Result<TreeCover, CoverError> {
    build_cover_rep(g, params, 0, seed)
}

fn build_cover_rep(
    g: &EmbeddedGraph,
    params: &CoverParams,
    repetition: u32,
    seed: u64,
) -> Result<TreeCover, CoverError> {
    if params.delta == 0 {
        return Err(CoverError::ZeroDelta);
    }
    if !(params.eps > 0.0) {
        return Err(CoverError::BadEps(params.eps));
    }
    let n = g.n();
    let mut uncharted = SubgraphMask::full(n);
    let mut comp_of = vec![0u32; n];
    let mut comp_size = vec![n];
    let mut stats = CoverStats { worst_balance: 0.0, ..Default::default() };
    let mut trees = Vec::new();
    let mut localizer = Localizer::new(n);
    let relaxed = params.relaxed_delta();
    let mut level = 0usize;
    while !uncharted.is_empty() {
        if level == params.max_recursions {
            return Err(CoverError::RecursionCap { levels: level, remaining: uncharted.count() });
        }
        let verts = uncharted.vertices();
        let lg = localizer.view(g, &verts);
        let centers: Vec<u32> = (0..verts.len() as u32).collect();
        let level_seed = mix(&[seed, level as u64]);
        let lp = decompose_local(
            &lg,
            &centers,
            verts.len(),
            relaxed,
            params.oracle.cap(params.eps_pd),
            level_seed,
            params.oracle.sssp_mode(level_seed),
        );
        stats.covering_violations += lp.violations.len();
        let mut groups: HashMap<u32, Vec<VertexId>> = HashMap::new();
        for (l, &c) in lp.center.iter().enumerate() {
            groups.entry(c).or_default().push(verts[l]);
        }
        let mut parts: Vec<(VertexId, Vec<VertexId>)> =
            groups.into_iter().map(|(c, m)| (verts[c as usize], m)).collect();
        parts.sort_unstable_by_key(|p| p.0);
        stats.partitions_per_level.push(parts.len());
        let mut parts_in_comp = vec![0usize; comp_size.len()];
        for (_, m) in &parts {
            parts_in_comp[comp_of[m[0] as usize] as usize] += 1;
        }

        let outputs: Vec<PartitionOutput> = parts
            .par_iter()
            .map(|(c, m)| grow_partition(g, m, *c, params, repetition, level as u32, seed))
            .collect::<Result<_, _>>()?;
        for out in outputs {
            stats.separators += 1;
            match out.method {
                SeparatorMethod::Outerplanar => stats.outerplanar_separators += 1,
                SeparatorMethod::FacePair => stats.face_pair_separators += 1,
                SeparatorMethod::Degenerate => stats.degenerate_separators += 1,
            }
            if out.max_component > (2 * out.region).div_ceil(3) {
                stats.unbalanced_separators += 1;
            }
            stats.worst_balance = stats.worst_balance.max(out.max_component as f64 / out.region as f64);
            stats.portals += out.portals;
            for v in out.separator {
                uncharted.remove(v);
            }
            trees.extend(out.trees);
        }

        let comps = g.components(&uncharted);
        let mut next_size = Vec::with_capacity(comps.len());
        for (i, c) in comps.iter().enumerate() {
            let parent = comp_of[c[0] as usize] as usize;
            let before = comp_size[parent];
            debug_assert!(c.len() < before);
            if 6 * c.len() > 5 * before {
                if parts_in_comp[parent] == 1 {
                    return Err(CoverError::ShrinkViolated { before, after: c.len() });
                }
                stats.multi_partition_shrink_misses += 1;
            }
            for &v in c {
                comp_of[v as usize] = i as u32;
            }
            next_size.push(c.len());
        }
        comp_size = next_size;
        level += 1;
    }
    stats.recursion_depth = level;
    let mut ids: Vec<u64> = trees.iter().map(|t: &CoverTree| t.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(CoverError::IdCollision);
    }
    let mut cover = TreeCover { params: params.clone(), repetition, trees, index: Vec::new(), stats };
    cover.rebuild_index(n);
    Ok(cover)
}

/// Drops memberships farther than `2 delta` from the root and rebuilds the
/// per-vertex index.
pub fn prune_far_roots(mut cover: TreeCover, delta: Dist) -> TreeCover {
    let n = cover.index.len();
    for t in &mut cover.trees {
        if t.dist.iter().all(|&d| d <= 2 * delta) {
            continue;
        }
        // distances grow along tree paths, so whole subtrees are cut
        let mut remap = vec![NO_PARENT; t.len()];
        let mut kept = 0u32;
        let (mut members, mut parent, mut dist) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..t.len() {
            if t.dist[i] > 2 * delta {
                continue;
            }
            remap[i] = kept;
            kept += 1;
            members.push(t.members[i]);
            parent.push(t.parent_of(i).map_or(NO_PARENT, |p| remap[p]));
            dist.push(t.dist[i]);
        }
        t.members = members;
        t.parent = parent;
        t.dist = dist;
    }
    cover.trees.retain(|t| t.len() >= 2);
    cover.rebuild_index(n);
    cover
}

/// `l` independent covers; repetition `k` uses a seed derived from
/// `(seed, k)`.
pub fn repeat_covers(g: &EmbeddedGraph, params: &CoverParams, l: usize, seed: u64) -> Result<Vec<TreeCover>, CoverError> {
    (0..l.max(1) as u32)
        .into_par_iter()
        .map(|k| build_cover_rep(g, params, k, mix(&[seed, k as u64, 0xc0e7])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_path, WeightDist};
    use crate::sssp::{exact_sssp, SourceSpec};

    #[test]
    fn portal_classes_on_unit_path() {
        let g = generate_path(&[1; 10]).unwrap();
        let arm: Vec<VertexId> = (0..11).collect();
        let ps = make_portals(&g, &arm, 0.25, 8);
        assert_eq!(ps.iter().map(|p| p.class).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(ps.iter().map(|p| p.vertex).collect::<Vec<_>>(), vec![0, 3, 5, 7, 9]);
        let short = make_portals(&g, &arm[..2], 0.5, 8);
        assert_eq!(short.len(), 1);
    }

    #[test]
    fn defaults_follow_the_formulas() {
        let p = CoverParams::new(256, 8, 0.5);
        assert_eq!(p.c_pd, 64.0);
        assert_eq!(p.eps_p, 0.5 / 6.0);
        assert_eq!(p.eps_t, p.eps_p);
        assert_eq!(p.eps_s, 0.5 / 64.0);
        assert_eq!((p.max_recursions, p.repetitions), (48, 16));
        assert_eq!(default_c_pd(1), 1.0);
    }

    #[test]
    fn single_vertex_has_no_trees() {
        let g = generate_grid(1, 1, &WeightDist::Unit, 0).unwrap();
        let c = build_cover(&g, &CoverParams::new(1, 1, 0.5), 0).unwrap();
        assert!(c.trees.is_empty());
        assert_eq!(c.stats.recursion_depth, 1);
    }

    #[test]
    fn path_cover_is_additive() {
        let g = generate_path(&[1; 19]).unwrap();
        let params = CoverParams::new(20, 8, 0.5);
        let c = build_cover(&g, &params, 7).unwrap();
        for v in 0..20u32 {
            for w in 0..20u32 {
                let d = v.abs_diff(w) as Dist;
                if d < 16 {
                    let t = c.best_distance(v, w).unwrap_or(Dist::MAX);
                    assert!(t as f64 <= 1.5 * d as f64 + 4.0, "{v} {w}");
                }
            }
        }
    }

    #[test]
    fn grid_depth_and_tree_invariants() {
        let g = generate_grid(16, 16, &WeightDist::Unit, 0).unwrap();
        let params = CoverParams::new(256, 8, 0.5);
        let c = build_cover(&g, &params, 1).unwrap();
        assert!(c.stats.recursion_depth <= 31);
        assert_eq!(c.stats.unbalanced_separators, 0);
        let full = SubgraphMask::full(256);
        for t in &c.trees {
            let ex = exact_sssp(&g, &full, &SourceSpec::Single(t.root)).unwrap();
            for (i, &v) in t.members.iter().enumerate() {
                assert!(t.dist[i] <= 16);
                assert!(t.dist[i] >= ex.dist[v as usize].unwrap());
                if let Some(p) = t.parent_of(i) {
                    assert_eq!(t.dist[p] + g.weight_between(v, t.members[p]).unwrap(), t.dist[i]);
                }
            }
        }
    }

    #[test]
    fn pruning_cuts_far_members() {
        let g = generate_path(&[1; 9]).unwrap();
        let c = build_cover(&g, &CoverParams::new(10, 4, 0.5), 0).unwrap();
        let before: usize = c.trees.iter().map(CoverTree::len).sum();
        let same = prune_far_roots(c.clone(), 4);
        assert_eq!(same, c);
        let cut = prune_far_roots(c, 1);
        assert!(cut.trees.iter().all(|t| t.dist.iter().all(|&d| d <= 2)));
        assert!(cut.trees.iter().map(CoverTree::len).sum::<usize>() < before);
    }

    #[test]
    fn repetitions_are_deterministic() {
        let g = generate_grid(6, 6, &WeightDist::Unit, 0).unwrap();
        let p = CoverParams::new(36, 2, 0.5);
        let a = repeat_covers(&g, &p, 2, 9).unwrap();
        let b = repeat_covers(&g, &p, 2, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].trees, a[1].trees);
        assert!(a[0].dump().lines().all(|l| l.split(' ').count() == 4));
    }
}
