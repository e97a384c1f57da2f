//! Shortest-path separators built from an SSSP tree of a region.
//!
//! The tree is unfolded into its Euler tour: every vertex of tree degree `d`
//! becomes `d` corners (the sectors between consecutive tree edges in its
//! rotation), each of weight `w(v) / d`. A non-tree edge leaves each endpoint
//! inside one sector and becomes a chord between the two corners. The chord
//! hides the tour stretch strictly between its corners on its lighter side
//! (measured clockwise from the smaller-id endpoint, flipped when that side
//! weighs more than half). Corners hidden by no chord are external; two of
//! them are chosen by weight sweeps and the tree path between their vertices
//! is the separator.
//!
//! The result is checked against the 2/3 balance bound. If the sweep misses,
//! all pairs of vertices sharing a face are tried in order of how evenly
//! their chord splits the tour.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{EmbeddedGraph, LocalGraph, Localizer, SubgraphMask, VertexId, NONE};
use crate::sssp::{approx_sssp, SourceSpec, SsspError, SsspForest, SsspMode};

const BALANCE: f64 = 2.0 / 3.0;
const TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparatorError {
    #[error("empty region")]
    EmptyRegion,
    #[error("tree does not span the region (vertex {0} not reached)")]
    TreeNotSpanning(VertexId),
    #[error("tree has {0} roots inside the region")]
    RootCount(usize),
    #[error("tree edge {0}-{1} is not an edge of the region")]
    ForeignTreeEdge(VertexId, VertexId),
    #[error("vertex weights must be finite and nonnegative")]
    BadWeights,
    #[error("regions {0} and {1} overlap")]
    OverlappingRegions(usize, usize),
    #[error(transparent)]
    Sssp(#[from] SsspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeparatorMethod {
    /// The two-corner sweep over the external corners.
    Outerplanar,
    /// Best balanced pair among vertices sharing a face.
    FacePair,
    /// Region of at most two vertices; all of it is the separator.
    Degenerate,
}

/// Cyclic Euler tour of a spanning tree: one entry per corner.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerTour {
    pub vertices: Vec<VertexId>,
    pub weights: Vec<f64>,
}

impl EulerTour {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatorPath {
    pub x: VertexId,
    pub y: VertexId,
    pub lca: VertexId,
    /// Tree path from `x` through `lca` to `y`.
    pub path: Vec<VertexId>,
    pub lca_index: usize,
    pub method: SeparatorMethod,
    pub balanced: bool,
    pub total_weight: f64,
    pub max_component_weight: f64,
    /// Connected components of the region minus the path, each sorted.
    pub components: Vec<Vec<VertexId>>,
}

impl SeparatorPath {
    /// The two root paths `x -> lca` and `lca -> y`.
    pub fn arms(&self) -> (&[VertexId], &[VertexId]) {
        (&self.path[..=self.lca_index], &self.path[self.lca_index..])
    }

    pub fn component_masks(&self, n: usize) -> Vec<SubgraphMask> {
        self.components.iter().map(|c| SubgraphMask::from_vertices(n, c.iter().copied())).collect()
    }
}

/// Separator in local ids of a [`LocalGraph`].
#[derive(Debug, Clone)]
pub(crate) struct LocalSeparator {
    pub path: Vec<u32>,
    pub lca_index: usize,
    pub method: SeparatorMethod,
    pub balanced: bool,
    pub total_weight: f64,
    pub max_component_weight: f64,
}

struct Tour {
    owner: Vec<u32>,
    rev: Vec<u32>,
    /// Per adjacency entry: sector index at its owner.
    sector: Vec<u32>,
    /// Per vertex: offset of its corners.
    cbase: Vec<u32>,
    /// Corner -> adjacency entry of the tree edge that opens the sector.
    tlist: Vec<u32>,
    /// Corner -> tour position.
    cpos: Vec<u32>,
    /// Tour position -> vertex.
    pos_vertex: Vec<u32>,
    prefix: Vec<f64>,
    depth: Vec<u32>,
}

impl Tour {
    fn len(&self) -> usize {
        self.pos_vertex.len()
    }

    fn total(&self) -> f64 {
        self.prefix[self.len()]
    }

    /// Weight strictly between positions `a` and `b`, walking forward from `a`.
    fn between(&self, a: usize, b: usize) -> f64 {
        let l = self.len();
        if a < b {
            self.prefix[b] - self.prefix[a + 1]
        } else {
            (self.prefix[l] - self.prefix[(a + 1).min(l)]) + self.prefix[b]
        }
    }

    fn corner_of_entry(&self, lg: &LocalGraph, i: usize) -> usize {
        // the sector holding the angle just before entry `i`
        let v = self.owner[i];
        let r = lg.range(v);
        let pred = if i == r.start { r.end - 1 } else { i - 1 };
        self.cpos[(self.cbase[v as usize] + self.sector[pred]) as usize] as usize
    }
}

fn pair_entries(lg: &LocalGraph) -> (Vec<u32>, Vec<u32>) {
    let len = lg.nbr.len();
    let mut owner = vec![0u32; len];
    for v in 0..lg.n() as u32 {
        for i in lg.range(v) {
            owner[i] = v;
        }
    }
    let mut by_edge: Vec<(u32, u32)> = (0..len as u32).map(|i| (lg.eid[i as usize], i)).collect();
    by_edge.sort_unstable();
    let mut rev = vec![NONE; len];
    for p in by_edge.chunks(2) {
        rev[p[0].1 as usize] = p[1].1;
        rev[p[1].1 as usize] = p[0].1;
    }
    (owner, rev)
}

fn build_tour(lg: &LocalGraph, parent: &[u32], weights: &[f64]) -> Result<Tour, SeparatorError> {
    let n = lg.n();
    let (owner, rev) = pair_entries(lg);
    let roots: Vec<u32> = (0..n as u32).filter(|&v| parent[v as usize] == NONE).collect();
    if roots.len() != 1 {
        return Err(SeparatorError::RootCount(roots.len()));
    }
    let root = roots[0];
    let is_tree = |i: usize| {
        let (v, u) = (owner[i], lg.nbr[i]);
        parent[v as usize] == u || parent[u as usize] == v
    };
    let mut cbase = vec![0u32; n + 1];
    for v in 0..n {
        cbase[v + 1] = cbase[v] + lg.range(v as u32).filter(|&i| is_tree(i)).count() as u32;
    }
    // every parent pointer must be a region edge
    if cbase[n] as usize != 2 * (n - 1) {
        for v in 0..n as u32 {
            let p = parent[v as usize];
            if p != NONE && !lg.range(v).any(|i| lg.nbr[i] == p) {
                return Err(SeparatorError::ForeignTreeEdge(lg.to_global[v as usize], lg.to_global[p as usize]));
            }
        }
    }
    let mut depth = vec![u32::MAX; n];
    depth[root as usize] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for i in lg.range(v) {
            let u = lg.nbr[i];
            if parent[u as usize] == v && depth[u as usize] == u32::MAX {
                depth[u as usize] = depth[v as usize] + 1;
                queue.push_back(u);
            }
        }
    }
    if let Some(v) = depth.iter().position(|&d| d == u32::MAX) {
        return Err(SeparatorError::TreeNotSpanning(lg.to_global[v]));
    }

    let mut sector = vec![0u32; lg.nbr.len()];
    let mut tlist = vec![0u32; cbase[n] as usize];
    for v in 0..n as u32 {
        let d = cbase[v as usize + 1] - cbase[v as usize];
        let mut k: Option<u32> = None;
        for i in lg.range(v) {
            if is_tree(i) {
                let next = k.map_or(0, |k| k + 1);
                k = Some(next);
                tlist[(cbase[v as usize] + next) as usize] = i as u32;
            }
            sector[i] = k.unwrap_or(d.saturating_sub(1));
        }
        // entries before the first tree edge belong to the last sector
        if let Some(first) = lg.range(v).find(|&i| is_tree(i)) {
            for i in lg.range(v).take_while(|&i| i < first) {
                sector[i] = d - 1;
            }
        }
    }

    let len = 2 * (n - 1);
    let mut cpos = vec![NONE; len];
    let mut pos_vertex = Vec::with_capacity(len);
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    let deg = |v: u32| cbase[v as usize + 1] - cbase[v as usize];
    let (mut v, mut k) = (root, deg(root).wrapping_sub(1));
    for p in 0..len {
        cpos[(cbase[v as usize] + k) as usize] = p as u32;
        pos_vertex.push(v);
        prefix.push(prefix[p] + weights[v as usize] / deg(v) as f64);
        let out = tlist[(cbase[v as usize] + (k + 1) % deg(v)) as usize] as usize;
        let back = rev[out] as usize;
        v = lg.nbr[out];
        k = sector[back];
    }
    Ok(Tour { owner, rev, sector, cbase, tlist, cpos, pos_vertex, prefix, depth })
}

fn tree_path(parent: &[u32], depth: &[u32], x: u32, y: u32) -> (Vec<u32>, usize) {
    let (mut a, mut b) = (x, y);
    let mut left = vec![a];
    let mut right = vec![b];
    while depth[a as usize] > depth[b as usize] {
        a = parent[a as usize];
        left.push(a);
    }
    while depth[b as usize] > depth[a as usize] {
        b = parent[b as usize];
        right.push(b);
    }
    while a != b {
        a = parent[a as usize];
        b = parent[b as usize];
        left.push(a);
        right.push(b);
    }
    right.pop();
    let lca_index = left.len() - 1;
    left.extend(right.into_iter().rev());
    (left, lca_index)
}

/// Heaviest component weight of the region minus `removed`.
struct Evaluator {
    removed: Vec<bool>,
    seen: Vec<bool>,
    stack: Vec<u32>,
}

impl Evaluator {
    fn new(n: usize) -> Self {
        Evaluator { removed: vec![false; n], seen: vec![false; n], stack: Vec::new() }
    }

    fn max_component(&mut self, lg: &LocalGraph, path: &[u32], weights: &[f64]) -> f64 {
        self.seen.iter_mut().for_each(|s| *s = false);
        for &v in path {
            self.removed[v as usize] = true;
        }
        let mut best: f64 = 0.0;
        for s in 0..lg.n() as u32 {
            if self.removed[s as usize] || self.seen[s as usize] {
                continue;
            }
            self.seen[s as usize] = true;
            self.stack.push(s);
            let mut w = 0.0;
            while let Some(v) = self.stack.pop() {
                w += weights[v as usize];
                for i in lg.range(v) {
                    let u = lg.nbr[i] as usize;
                    if !self.removed[u] && !self.seen[u] {
                        self.seen[u] = true;
                        self.stack.push(u as u32);
                    }
                }
            }
            best = best.max(w);
        }
        for &v in path {
            self.removed[v as usize] = false;
        }
        best
    }
}

fn sweep(lg: &LocalGraph, t: &Tour) -> Option<(u32, u32)> {
    let len = t.len();
    let total = t.total();
    let mut cover = vec![0i32; len + 1];
    let mut hide = |a: usize, b: usize| {
        // strictly inside the forward arc a -> b
        if a < b {
            cover[a + 1] += 1;
            cover[b] -= 1;
        } else {
            cover[a + 1] += 1;
            cover[len] -= 1;
            cover[0] += 1;
            cover[b] -= 1;
        }
    };
    for i in 0..lg.nbr.len() {
        let (u, v) = (t.owner[i], lg.nbr[i]);
        let is_tree = t.tlist[t.cbase[u as usize] as usize + t.sector[i] as usize] == i as u32;
        if u > v || is_tree {
            continue;
        }
        let a = t.cpos[(t.cbase[u as usize] + t.sector[i]) as usize] as usize;
        let j = t.rev[i] as usize;
        let b = t.cpos[(t.cbase[v as usize] + t.sector[j]) as usize] as usize;
        if t.between(a, b) > total / 2.0 {
            hide(b, a);
        } else {
            hide(a, b);
        }
    }
    let mut external = Vec::new();
    let mut c = 0;
    for p in 0..len {
        c += cover[p];
        if c == 0 {
            external.push(p);
        }
    }
    let z0 = *external.first()?;
    let mut yi = 0;
    for (k, &q) in external.iter().enumerate().skip(1) {
        if t.between(z0, q) <= 2.0 * total / 3.0 + TOL {
            yi = k;
        }
    }
    let y = external[yi];
    let x = match external.get(yi + 1) {
        Some(&z1) if t.between(y, z1) > total / 3.0 => z1,
        _ => z0,
    };
    Some((t.pos_vertex[x], t.pos_vertex[y]))
}

fn face_pairs(lg: &LocalGraph, t: &Tour) -> Vec<(f64, u32, u32)> {
    let total = t.total();
    let mut visited = vec![false; lg.nbr.len()];
    let mut best: HashMap<(u32, u32), f64> = HashMap::new();
    for s in 0..lg.nbr.len() {
        if visited[s] {
            continue;
        }
        let mut face = Vec::new();
        let mut i = s;
        while !visited[i] {
            visited[i] = true;
            face.push((t.owner[i], t.corner_of_entry(lg, i)));
            let j = t.rev[i] as usize;
            let r = lg.range(lg.nbr[i]);
            i = if j + 1 == r.end { r.start } else { j + 1 };
        }
        for a in 0..face.len() {
            for b in a + 1..face.len() {
                let ((u, cu), (v, cv)) = (face[a], face[b]);
                if u == v {
                    continue;
                }
                let key = t.between(cu, cv).max(t.between(cv, cu));
                let e = best.entry((u.min(v), u.max(v))).or_insert(f64::INFINITY);
                *e = e.min(key);
            }
        }
    }
    let _ = total;
    let mut out: Vec<(f64, u32, u32)> = best.into_iter().map(|((u, v), k)| (k, u, v)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    out
}

/// Separator of a connected region given a spanning tree (local parents).
pub(crate) fn separate_local(
    lg: &LocalGraph,
    parent: &[u32],
    weights: &[f64],
) -> Result<LocalSeparator, SeparatorError> {
    let n = lg.n();
    if n == 0 {
        return Err(SeparatorError::EmptyRegion);
    }
    let total: f64 = weights.iter().sum();
    if n <= 2 {
        let path: Vec<u32> = (0..n as u32).collect();
        let lca_index = usize::from(n == 2 && parent[0] == 1);
        return Ok(LocalSeparator {
            path,
            lca_index,
            method: SeparatorMethod::Degenerate,
            balanced: true,
            total_weight: total,
            max_component_weight: 0.0,
        });
    }
    let t = build_tour(lg, parent, weights)?;
    let mut eval = Evaluator::new(n);
    let limit = BALANCE * total + TOL;
    let mut best: Option<LocalSeparator> = None;
    let mut consider = |x: u32, y: u32, method, eval: &mut Evaluator| -> bool {
        let (path, lca_index) = tree_path(parent, &t.depth, x, y);
        let m = eval.max_component(lg, &path, weights);
        let balanced = m <= limit;
        if best.as_ref().map_or(true, |b| m < b.max_component_weight) {
            best = Some(LocalSeparator {
                path,
                lca_index,
                method,
                balanced,
                total_weight: total,
                max_component_weight: m,
            });
        }
        balanced
    };
    if let Some((x, y)) = sweep(lg, &t) {
        if consider(x, y, SeparatorMethod::Outerplanar, &mut eval) {
            return Ok(best.unwrap());
        }
    }
    for (_, x, y) in face_pairs(lg, &t) {
        if consider(x, y, SeparatorMethod::FacePair, &mut eval) {
            break;
        }
    }
    Ok(best.expect("region with an edge has a face pair"))
}

fn local_parents(
    g: &EmbeddedGraph,
    verts: &[VertexId],
    tree: &SsspForest,
) -> Result<Vec<u32>, SeparatorError> {
    let mut parent = vec![NONE; verts.len()];
    for (l, &v) in verts.iter().enumerate() {
        if !tree.reached(v) {
            return Err(SeparatorError::TreeNotSpanning(v));
        }
        if let Some(p) = tree.parent[v as usize] {
            let pl = verts.binary_search(&p).map_err(|_| SeparatorError::ForeignTreeEdge(v, p))?;
            if g.weight_between(v, p).is_none() {
                return Err(SeparatorError::ForeignTreeEdge(v, p));
            }
            parent[l] = pl as u32;
        }
    }
    Ok(parent)
}

/// Euler tour of the spanning tree `tree` of the region, starting at the root.
pub fn euler_tour(g: &EmbeddedGraph, mask: &SubgraphMask, tree: &SsspForest) -> Result<EulerTour, SeparatorError> {
    let verts = mask.vertices();
    if verts.is_empty() {
        return Err(SeparatorError::EmptyRegion);
    }
    let parent = local_parents(g, &verts, tree)?;
    let lg = Localizer::new(g.n()).view(g, &verts);
    if verts.len() == 1 {
        return Ok(EulerTour { vertices: Vec::new(), weights: Vec::new() });
    }
    let t = build_tour(&lg, &parent, &vec![1.0; verts.len()])?;
    let weights = (0..t.len()).map(|p| t.prefix[p + 1] - t.prefix[p]).collect();
    Ok(EulerTour { vertices: t.pos_vertex.iter().map(|&l| verts[l as usize]).collect(), weights })
}

pub fn find_separator(g: &EmbeddedGraph, mask: &SubgraphMask, tree: &SsspForest) -> Result<SeparatorPath, SeparatorError> {
    find_separator_weighted(g, mask, tree, &vec![1.0; g.n()])
}

/// As [`find_separator`] with per-vertex weights (indexed by global id).
pub fn find_separator_weighted(
    g: &EmbeddedGraph,
    mask: &SubgraphMask,
    tree: &SsspForest,
    weights: &[f64],
) -> Result<SeparatorPath, SeparatorError> {
    if weights.len() != g.n() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(SeparatorError::BadWeights);
    }
    let verts = mask.vertices();
    if verts.is_empty() {
        return Err(SeparatorError::EmptyRegion);
    }
    let parent = local_parents(g, &verts, tree)?;
    let lg = Localizer::new(g.n()).view(g, &verts);
    let lw: Vec<f64> = verts.iter().map(|&v| weights[v as usize]).collect();
    let ls = separate_local(&lg, &parent, &lw)?;
    let path: Vec<VertexId> = ls.path.iter().map(|&l| verts[l as usize]).collect();
    let mut rest = mask.clone();
    for &v in &path {
        rest.remove(v);
    }
    Ok(SeparatorPath {
        x: path[0],
        y: *path.last().unwrap(),
        lca: path[ls.lca_index],
        lca_index: ls.lca_index,
        method: ls.method,
        balanced: ls.balanced,
        total_weight: ls.total_weight,
        max_component_weight: ls.max_component_weight,
        components: g.components(&rest),
        path,
    })
}

/// Separators of disjoint regions, each from an SSSP tree rooted at the
/// region's smallest vertex.
pub fn separate_all(
    g: &EmbeddedGraph,
    regions: &[SubgraphMask],
    eps: f64,
    mode: SsspMode,
) -> Result<Vec<SeparatorPath>, SeparatorError> {
    let mut owner = vec![usize::MAX; g.n()];
    for (i, m) in regions.iter().enumerate() {
        for v in m.vertices() {
            if owner[v as usize] != usize::MAX {
                return Err(SeparatorError::OverlappingRegions(owner[v as usize], i));
            }
            owner[v as usize] = i;
        }
    }
    regions
        .par_iter()
        .map(|m| {
            let root = *m.vertices().first().ok_or(SeparatorError::EmptyRegion)?;
            let tree = approx_sssp(g, m, &SourceSpec::Single(root), eps, mode)?;
            find_separator(g, m, &tree)
        })
        .collect()
}
