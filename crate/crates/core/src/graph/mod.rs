//! Weighted undirected planar graphs with a combinatorial embedding.
//!
//! Edge weights are stored as integer numerators over a per-graph
//! denominator, so every path length is an exact integer number of "ticks"
//! (`1 / denom` units). All distance arithmetic in the crate happens in ticks.

mod faces;
mod generate;
mod io;

pub use faces::{faces, DirectedSlot};
pub use generate::{
    generate_grid, generate_path, generate_star, generate_triangulated_grid, random_tree,
    WeightDist,
};
pub use io::{format_graph, parse_graph, read_graph, write_graph, GraphIoError};

use std::collections::VecDeque;

use thiserror::Error;

pub type VertexId = u32;
pub type EdgeId = u32;
/// Path length in ticks (weight numerators).
pub type Dist = u64;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    /// Weight numerator; the real weight is `w / denom`.
    pub w: u64,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("grid dimensions must be positive (got {rows}x{cols})")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("triangulated grid needs at least 2x2 (got {rows}x{cols})")]
    TooSmall { rows: usize, cols: usize },
    #[error("edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: EdgeId, vertex: u64 },
    #[error("edge {0} is a self-loop")]
    SelfLoop(EdgeId),
    #[error("edges {0} and {1} are parallel")]
    ParallelEdge(EdgeId, EdgeId),
    #[error("edge {edge} has weight {w}/{denom} outside [1, {max}]")]
    WeightOutOfRange { edge: EdgeId, w: u64, denom: u64, max: String },
    #[error("rotation incomplete at {0}")]
    RotationIncomplete(VertexId),
    #[error("rotation at {vertex} lists edge {edge} which is not incident")]
    RotationForeignEdge { vertex: VertexId, edge: EdgeId },
    #[error("rotation at {vertex} lists edge {edge} more than once")]
    RotationDuplicate { vertex: VertexId, edge: EdgeId },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("{m} edges exceed the planar bound 3n-6 for n={n}")]
    EulerBound { n: usize, m: usize },
    #[error("coordinate table has {got} entries for {n} vertices")]
    CoordCount { n: usize, got: usize },
    #[error("invalid weight distribution: {0}")]
    BadWeightDist(String),
}

/// Bounds applied when validating a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphLimits {
    /// Largest weight allowed is `max(n, 2)^weight_exponent`.
    pub weight_exponent: u32,
}

impl Default for GraphLimits {
    fn default() -> Self {
        GraphLimits { weight_exponent: 4 }
    }
}

impl GraphLimits {
    pub fn max_weight(&self, n: usize) -> u128 {
        (n.max(2) as u128).saturating_pow(self.weight_exponent)
    }
}

/// One slot of a rotation: the neighbor reached along `edge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dart {
    pub to: VertexId,
    pub w: u64,
    pub edge: EdgeId,
}

#[derive(Debug, Clone)]
pub struct EmbeddedGraph {
    n: usize,
    denom: u64,
    edges: Vec<Edge>,
    rotation: Vec<Vec<EdgeId>>,
    coords: Option<Vec<(f64, f64)>>,
    offsets: Vec<usize>,
    darts: Vec<Dart>,
}

impl PartialEq for EmbeddedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.denom == other.denom
            && self.edges == other.edges
            && self.rotation == other.rotation
            && self.coords == other.coords
    }
}

impl EmbeddedGraph {
    /// Builds and validates a graph with the default [`GraphLimits`].
    pub fn new(
        n: usize,
        denom: u64,
        edges: Vec<Edge>,
        rotation: Vec<Vec<EdgeId>>,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, GraphError> {
        Self::with_limits(n, denom, edges, rotation, coords, GraphLimits::default())
    }

    pub fn with_limits(
        n: usize,
        denom: u64,
        edges: Vec<Edge>,
        rotation: Vec<Vec<EdgeId>>,
        coords: Option<Vec<(f64, f64)>>,
        limits: GraphLimits,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if let Some(c) = &coords {
            if c.len() != n {
                return Err(GraphError::CoordCount { n, got: c.len() });
            }
        }
        if rotation.len() != n {
            return Err(GraphError::RotationIncomplete(rotation.len().min(n) as VertexId));
        }
        let denom = denom.max(1);
        let max_w = limits.max_weight(n);
        let mut seen_pairs = std::collections::HashMap::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            let id = id as EdgeId;
            for x in [e.u, e.v] {
                if x as usize >= n {
                    return Err(GraphError::UnknownVertex { edge: id, vertex: x as u64 });
                }
            }
            if e.u == e.v {
                return Err(GraphError::SelfLoop(id));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if let Some(prev) = seen_pairs.insert(key, id) {
                return Err(GraphError::ParallelEdge(prev, id));
            }
            if e.w < denom || e.w as u128 > max_w.saturating_mul(denom as u128) {
                return Err(GraphError::WeightOutOfRange {
                    edge: id,
                    w: e.w,
                    denom,
                    max: max_w.to_string(),
                });
            }
        }
        if n >= 3 && edges.len() > 3 * n - 6 {
            return Err(GraphError::EulerBound { n, m: edges.len() });
        }
        let mut deg = vec![0usize; n];
        for e in &edges {
            deg[e.u as usize] += 1;
            deg[e.v as usize] += 1;
        }
        let mut mark = vec![u32::MAX; edges.len()];
        for (v, rot) in rotation.iter().enumerate() {
            for &eid in rot {
                let e = edges
                    .get(eid as usize)
                    .ok_or(GraphError::RotationForeignEdge { vertex: v as VertexId, edge: eid })?;
                if e.u as usize != v && e.v as usize != v {
                    return Err(GraphError::RotationForeignEdge { vertex: v as VertexId, edge: eid });
                }
                if mark[eid as usize] == v as u32 {
                    return Err(GraphError::RotationDuplicate { vertex: v as VertexId, edge: eid });
                }
                mark[eid as usize] = v as u32;
            }
            if rot.len() != deg[v] {
                return Err(GraphError::RotationIncomplete(v as VertexId));
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut darts = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for (v, rot) in rotation.iter().enumerate() {
            for &eid in rot {
                let e = edges[eid as usize];
                darts.push(Dart { to: e.other(v as VertexId), w: e.w, edge: eid });
            }
            offsets.push(darts.len());
        }
        let g = EmbeddedGraph { n, denom, edges, rotation, coords, offsets, darts };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id as usize]
    }

    pub fn rotation(&self, v: VertexId) -> &[EdgeId] {
        &self.rotation[v as usize]
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    /// Incident darts of `v` in rotation (clockwise) order.
    pub fn darts(&self, v: VertexId) -> &[Dart] {
        &self.darts[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    /// Weight numerator of the edge between `u` and `v`, if adjacent.
    pub fn weight_between(&self, u: VertexId, v: VertexId) -> Option<u64> {
        self.darts(u).iter().find(|d| d.to == v).map(|d| d.w)
    }

    pub fn max_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.w).max().unwrap_or(self.denom)
    }

    /// Converts a real length into ticks, rounding up.
    pub fn ticks(&self, real: f64) -> Dist {
        (real * self.denom as f64).ceil() as Dist
    }

    pub fn to_real(&self, d: Dist) -> f64 {
        d as f64 / self.denom as f64
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for d in self.darts(v) {
                if !seen[d.to as usize] {
                    seen[d.to as usize] = true;
                    count += 1;
                    queue.push_back(d.to);
                }
            }
        }
        count == self.n
    }

    /// Returns a relabeled copy: vertex `v` becomes `perm[v]`. Rotations keep
    /// their cyclic order, so the embedding is preserved.
    pub fn relabeled(&self, perm: &[VertexId]) -> EmbeddedGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { u: perm[e.u as usize], v: perm[e.v as usize], w: e.w })
            .collect();
        let mut rotation = vec![Vec::new(); self.n];
        for v in 0..self.n {
            rotation[perm[v] as usize] = self.rotation[v].clone();
        }
        let coords = self.coords.as_ref().map(|c| {
            let mut out = vec![(0.0, 0.0); self.n];
            for v in 0..self.n {
                out[perm[v] as usize] = c[v];
            }
            out
        });
        EmbeddedGraph::with_limits(
            self.n,
            self.denom,
            edges,
            rotation,
            coords,
            GraphLimits { weight_exponent: 64 },
        )
        .expect("relabeling preserves validity")
    }

    /// Connected components of the subgraph induced by `mask`, each sorted.
    pub fn components(&self, mask: &SubgraphMask) -> Vec<Vec<VertexId>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n as VertexId {
            if !mask.contains(s) || seen[s as usize] {
                continue;
            }
            seen[s as usize] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for d in self.darts(v) {
                    if mask.contains(d.to) && !seen[d.to as usize] {
                        seen[d.to as usize] = true;
                        comp.push(d.to);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Membership bitmap selecting an induced subgraph. The induced embedding is
/// obtained by deleting non-member entries from each rotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgraphMask {
    member: Vec<bool>,
}

impl SubgraphMask {
    pub fn full(n: usize) -> Self {
        SubgraphMask { member: vec![true; n] }
    }

    pub fn empty(n: usize) -> Self {
        SubgraphMask { member: vec![false; n] }
    }

    pub fn from_vertices(n: usize, vertices: impl IntoIterator<Item = VertexId>) -> Self {
        let mut m = Self::empty(n);
        for v in vertices {
            m.member[v as usize] = true;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.member.get(v as usize).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, v: VertexId) {
        self.member[v as usize] = true;
    }

    pub fn remove(&mut self, v: VertexId) {
        self.member[v as usize] = false;
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    /// Member vertices in ascending order.
    pub fn vertices(&self) -> Vec<VertexId> {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(v, _)| v as VertexId)
            .collect()
    }

    pub fn intersects(&self, other: &SubgraphMask) -> bool {
        self.member.iter().zip(&other.member).any(|(a, b)| *a && *b)
    }
}

/// Induced subgraph on a sorted vertex list, with compact local ids.
/// Local id order matches global id order, so id-based tie-breaks agree.
#[derive(Debug, Clone)]
pub(crate) struct LocalGraph {
    pub to_global: Vec<VertexId>,
    pub offsets: Vec<u32>,
    pub nbr: Vec<u32>,
    pub wt: Vec<u64>,
    pub eid: Vec<EdgeId>,
}

impl LocalGraph {
    #[inline]
    pub fn n(&self) -> usize {
        self.to_global.len()
    }

    #[inline]
    pub fn range(&self, v: u32) -> std::ops::Range<usize> {
        self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize
    }
}

/// Reusable global-to-local index used when extracting [`LocalGraph`]s.
pub(crate) struct Localizer {
    map: Vec<u32>,
}

impl Localizer {
    pub fn new(n: usize) -> Self {
        Localizer { map: vec![NONE; n] }
    }

    /// `vertices` must be sorted ascending and duplicate free.
    pub fn view(&mut self, g: &EmbeddedGraph, vertices: &[VertexId]) -> LocalGraph {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        for (i, &v) in vertices.iter().enumerate() {
            self.map[v as usize] = i as u32;
        }
        let mut offsets = Vec::with_capacity(vertices.len() + 1);
        let mut nbr = Vec::new();
        let mut wt = Vec::new();
        let mut eid = Vec::new();
        offsets.push(0);
        for &v in vertices {
            for d in g.darts(v) {
                let l = self.map[d.to as usize];
                if l != NONE {
                    nbr.push(l);
                    wt.push(d.w);
                    eid.push(d.edge);
                }
            }
            offsets.push(nbr.len() as u32);
        }
        for &v in vertices {
            self.map[v as usize] = NONE;
        }
        LocalGraph { to_global: vertices.to_vec(), offsets, nbr, wt, eid }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> EmbeddedGraph {
        let edges = vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }, Edge { u: 2, v: 0, w: 1 }];
        EmbeddedGraph::new(3, 1, edges, vec![vec![0, 2], vec![1, 0], vec![2, 1]], None).unwrap()
    }

    #[test]
    fn rejects_structural_defects() {
        let e = |u, v| Edge { u, v, w: 1 };
        assert_eq!(
            EmbeddedGraph::new(2, 1, vec![e(0, 0)], vec![vec![0], vec![]], None).unwrap_err(),
            GraphError::SelfLoop(0)
        );
        assert_eq!(
            EmbeddedGraph::new(2, 1, vec![e(0, 2)], vec![vec![0], vec![]], None).unwrap_err(),
            GraphError::UnknownVertex { edge: 0, vertex: 2 }
        );
        assert_eq!(
            EmbeddedGraph::new(2, 1, vec![e(0, 1)], vec![vec![0], vec![]], None).unwrap_err(),
            GraphError::RotationIncomplete(1)
        );
        assert_eq!(
            EmbeddedGraph::new(3, 1, vec![e(0, 1)], vec![vec![0], vec![0], vec![]], None).unwrap_err(),
            GraphError::Disconnected
        );
        assert!(matches!(
            EmbeddedGraph::new(2, 2, vec![Edge { u: 0, v: 1, w: 1 }], vec![vec![0], vec![0]], None),
            Err(GraphError::WeightOutOfRange { .. })
        ));
    }

    #[test]
    fn euler_bound_is_enforced() {
        let mut edges = Vec::new();
        let mut rotation = vec![Vec::new(); 5];
        for u in 0..5u32 {
            for v in u + 1..5 {
                rotation[u as usize].push(edges.len() as EdgeId);
                rotation[v as usize].push(edges.len() as EdgeId);
                edges.push(Edge { u, v, w: 1 });
            }
        }
        assert_eq!(
            EmbeddedGraph::new(5, 1, edges, rotation, None).unwrap_err(),
            GraphError::EulerBound { n: 5, m: 10 }
        );
        assert_eq!(triangle().m(), 3);
    }

    #[test]
    fn local_view_keeps_rotation_order() {
        let g = generate_triangulated_grid(3, 3, &WeightDist::Unit, 0).unwrap();
        let mut loc = Localizer::new(g.n());
        let verts = vec![0, 1, 3, 4];
        let lg = loc.view(&g, &verts);
        assert_eq!(lg.n(), 4);
        // vertex 4 (center) sees N=1, W=3, NW=0 in clockwise order N, .., W, NW
        let nb: Vec<_> = lg.range(3).map(|i| lg.to_global[lg.nbr[i] as usize]).collect();
        assert_eq!(nb, vec![1, 3, 0]);
    }

    #[test]
    fn mask_components() {
        let g = generate_grid(3, 3, &WeightDist::Unit, 0).unwrap();
        let mut mask = SubgraphMask::full(9);
        for v in [1, 4, 7] {
            mask.remove(v);
        }
        let comps = g.components(&mask);
        assert_eq!(comps, vec![vec![0, 3, 6], vec![2, 5, 8]]);
    }
}
