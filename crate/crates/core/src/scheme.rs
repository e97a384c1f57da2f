//! The hierarchical routing scheme: tree covers at scales `2^i`, per-node
//! routing tables and labels, tree selection, and serialization.
//!
//! Trees are kept compactly (members in DFS preorder with parent, distance,
//! interval end and heavy child) and every node keeps a list of its trees
//! sorted by id. Tables and labels are materialized from these on demand;
//! the serialized form stores them explicitly.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dist, EmbeddedGraph, SubgraphMask, VertexId};
use crate::sssp::{exact_sssp, SourceSpec};
use crate::tree_cover::{repeat_covers, CoverError, CoverParams, CoverTree, OracleMode, NO_PARENT};
use crate::tree_routing::{layout, TreeLabel, TreeTable};
use crate::util::{ceil_log2, mix};

pub const MAGIC: &[u8; 5] = b"PRTS1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("eps must be positive (got {0})")]
    BadEps(f64),
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("duplicate tree id {0:016x}")]
    IdCollision(u64),
    #[error("malformed scheme file: {0}")]
    Decode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub eps: f64,
    /// Independent covers per scale.
    pub reps: usize,
    pub seed: u64,
    pub oracle: OracleMode,
}

impl SchemeConfig {
    /// `reps = ceil(2 log2 n)` with the exact oracle.
    pub fn new(n: usize, eps: f64, seed: u64) -> Self {
        SchemeConfig { eps, reps: (2 * ceil_log2(n) as usize).max(1), seed, oracle: OracleMode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    /// `ceil(log2(n W))`.
    pub d_star: u32,
    /// Levels actually built: `1..=levels`.
    pub levels: u32,
    /// Distance scale `2^i` of each built level, in ticks.
    pub delta_ticks: Vec<Dist>,
    pub cover_eps: f64,
    pub reps: usize,
    /// Twice the eccentricity of vertex 0, in ticks.
    pub diameter_bound: Dist,
}

impl HierarchyParams {
    pub fn for_graph(g: &EmbeddedGraph, eps: f64, reps: usize) -> Self {
        let n = g.n();
        let w_real = g.max_weight().div_ceil(g.denom()).max(1);
        let d_star = ceil_log2((n as u128 * w_real as u128).min(usize::MAX as u128) as usize);
        let ecc = exact_sssp(g, &SubgraphMask::full(n), &SourceSpec::Single(0))
            .expect("vertex 0 exists")
            .dist
            .iter()
            .map(|d| d.unwrap_or(0))
            .max()
            .unwrap_or(0);
        let diameter_bound = 2 * ecc;
        // a pair at real distance d uses level floor(log2 d) + 1
        let mut levels = 0u32;
        while levels < d_star && (1u64 << levels) * g.denom() <= diameter_bound {
            levels += 1;
        }
        HierarchyParams {
            d_star,
            levels,
            delta_ticks: (1..=levels).map(|i| (1u64 << i) * g.denom()).collect(),
            cover_eps: eps / 3.0,
            reps,
            diameter_bound,
        }
    }
}

/// A tree in DFS preorder: `a` is the position.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StoredTree {
    pub id: u64,
    pub level: u32,
    pub rep: u32,
    pub members: Vec<VertexId>,
    pub parent: Vec<u32>,
    pub dist: Vec<Dist>,
    pub b: Vec<u32>,
    pub heavy: Vec<u32>,
}

impl StoredTree {
    fn from_cover(t: &CoverTree, level: u32) -> Self {
        let lay = layout(&t.members, &t.parent).expect("cover trees are rooted trees");
        let pos = &lay.a;
        let at = |i: u32| if i == NO_PARENT { NO_PARENT } else { pos[i as usize] };
        StoredTree {
            id: t.id,
            level,
            rep: t.repetition,
            members: lay.order.iter().map(|&i| t.members[i as usize]).collect(),
            parent: lay.order.iter().map(|&i| at(t.parent[i as usize])).collect(),
            dist: lay.order.iter().map(|&i| t.dist[i as usize]).collect(),
            b: lay.order.iter().map(|&i| lay.b[i as usize]).collect(),
            heavy: lay.order.iter().map(|&i| at(lay.heavy[i as usize])).collect(),
        }
    }

    fn vertex(&self, i: u32) -> Option<VertexId> {
        (i != NO_PARENT).then(|| self.members[i as usize])
    }

    pub fn table(&self, i: usize) -> TreeTable {
        TreeTable {
            r: self.members[0],
            d: self.dist[i],
            p: self.vertex(self.parent[i]),
            a: i as u32,
            b: self.b[i],
            h: self.vertex(self.heavy[i]),
        }
    }

    pub fn label(&self, i: usize) -> TreeLabel {
        let mut light = Vec::new();
        let mut x = i as u32;
        while self.parent[x as usize] != NO_PARENT {
            let p = self.parent[x as usize];
            if self.heavy[p as usize] != x {
                light.push(self.members[x as usize]);
            }
            x = p;
        }
        light.reverse();
        TreeLabel { r: self.members[0], a: i as u32, light, d: self.dist[i] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub(crate) struct IndexEntry {
    pub id: u64,
    pub tree: u32,
    pub pos: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub tree: u64,
    pub level: u32,
    pub rep: u32,
    pub table: TreeTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeTable {
    pub node: VertexId,
    /// Sorted by tree id.
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelEntry {
    pub tree: u64,
    pub label: TreeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeLabel {
    pub node: VertexId,
    /// Sorted by tree id.
    pub entries: Vec<LabelEntry>,
}

impl SchemeLabel {
    pub fn entry(&self, tree: u64) -> Option<&TreeLabel> {
        self.entries.binary_search_by_key(&tree, |e| e.tree).ok().map(|i| &self.entries[i].label)
    }

    pub fn bits(&self) -> usize {
        8 * self.entries.iter().map(|e| LABEL_FIXED + 4 * e.label.light.len()).sum::<usize>()
    }
}

impl SchemeTable {
    pub fn entry(&self, tree: u64) -> Option<&TableEntry> {
        self.entries.binary_search_by_key(&tree, |e| e.tree).ok().map(|i| &self.entries[i])
    }

    pub fn bits(&self) -> usize {
        8 * TABLE_RECORD * self.entries.len()
    }
}

/// Bytes of one serialized table entry: id, level, rep, r, d, p, a, b, h.
const TABLE_RECORD: usize = 8 + 4 + 4 + 4 + 8 + 4 + 4 + 4 + 4;
/// Bytes of a label entry without its light list: id, r, a, d, count.
const LABEL_FIXED: usize = 8 + 4 + 4 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Source and target coincide.
    Delivered,
    Tree { id: u64, bound: Dist },
    NoTree,
}

/// Common tree minimizing `d(s, root) + d(root, t)`, ties to the smaller id.
pub fn select_tree(s_table: &SchemeTable, t_label: &SchemeLabel) -> Selection {
    if s_table.node == t_label.node {
        return Selection::Delivered;
    }
    let (a, b) = (&s_table.entries, &t_label.entries);
    let mut best: Option<(Dist, u64)> = None;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].tree.cmp(&b[j].tree) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let cand = (a[i].table.d + b[j].label.d, a[i].tree);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
                i += 1;
                j += 1;
            }
        }
    }
    best.map_or(Selection::NoTree, |(bound, id)| Selection::Tree { id, bound })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub level: u32,
    pub delta_ticks: Dist,
    pub trees: usize,
    pub max_recursion_depth: usize,
    pub separators: usize,
    pub outerplanar_separators: usize,
    pub face_pair_separators: usize,
    pub degenerate_separators: usize,
    pub unbalanced_separators: usize,
    pub worst_balance: f64,
    pub multi_partition_shrink_misses: usize,
    pub covering_violations: usize,
    pub max_trees_per_vertex: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub levels: Vec<LevelDiagnostics>,
    pub trees: usize,
    /// `histogram[k]` = number of nodes in exactly `k` trees.
    pub trees_per_node_histogram: Vec<usize>,
    pub max_label_bits: usize,
    pub mean_label_bits: f64,
    pub max_table_bits: usize,
    pub build_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub n: usize,
    pub config: SchemeConfig,
    pub hierarchy: HierarchyParams,
    pub diagnostics: Diagnostics,
    pub(crate) trees: Vec<StoredTree>,
    pub(crate) index: Vec<Vec<IndexEntry>>,
}

impl Scheme {
    fn from_trees(n: usize, config: SchemeConfig, hierarchy: HierarchyParams, mut trees: Vec<StoredTree>) -> Result<Self, SchemeError> {
        trees.sort_unstable_by_key(|t| t.id);
        if let Some(w) = trees.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(SchemeError::IdCollision(w[0].id));
        }
        let mut index = vec![Vec::new(); n];
        for (ti, t) in trees.iter().enumerate() {
            for (pos, &v) in t.members.iter().enumerate() {
                index[v as usize].push(IndexEntry { id: t.id, tree: ti as u32, pos: pos as u32 });
            }
        }
        Ok(Scheme { n, config, hierarchy, diagnostics: Diagnostics::default(), trees, index })
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn trees_of(&self, v: VertexId) -> usize {
        self.index[v as usize].len()
    }

    pub fn table(&self, v: VertexId) -> SchemeTable {
        let entries = self.index[v as usize]
            .iter()
            .map(|e| {
                let t = &self.trees[e.tree as usize];
                TableEntry { tree: e.id, level: t.level, rep: t.rep, table: t.table(e.pos as usize) }
            })
            .collect();
        SchemeTable { node: v, entries }
    }

    pub fn label(&self, v: VertexId) -> SchemeLabel {
        let entries = self.index[v as usize]
            .iter()
            .map(|e| LabelEntry { tree: e.id, label: self.trees[e.tree as usize].label(e.pos as usize) })
            .collect();
        SchemeLabel { node: v, entries }
    }

    /// Table of `v` for one tree, if `v` belongs to it.
    pub fn table_entry(&self, v: VertexId, tree: u64) -> Option<TableEntry> {
        let idx = &self.index[v as usize];
        let k = idx.binary_search_by_key(&tree, |e| e.id).ok()?;
        let e = idx[k];
        let t = &self.trees[e.tree as usize];
        Some(TableEntry { tree, level: t.level, rep: t.rep, table: t.table(e.pos as usize) })
    }

    /// Whether `c` is a tree child of `v` in `tree`.
    pub fn is_child(&self, tree: u64, v: VertexId, c: VertexId) -> bool {
        self.table_entry(c, tree).is_some_and(|e| e.table.p == Some(v))
    }

    pub fn tree_level(&self, tree: u64) -> Option<u32> {
        self.trees.binary_search_by_key(&tree, |t| t.id).ok().map(|i| self.trees[i].level)
    }

    fn label_bits_of(&self, v: VertexId) -> usize {
        self.index[v as usize]
            .iter()
            .map(|e| {
                let t = &self.trees[e.tree as usize];
                let mut light = 0;
                let mut x = e.pos;
                while t.parent[x as usize] != NO_PARENT {
                    let p = t.parent[x as usize];
                    light += usize::from(t.heavy[p as usize] != x);
                    x = p;
                }
                8 * (LABEL_FIXED + 4 * light)
            })
            .sum()
    }

    fn fill_size_diagnostics(&mut self) {
        let r = measure_sizes(self);
        let maxt = r.per_node.iter().map(|s| s.trees).max().unwrap_or(0);
        let mut hist = vec![0; maxt + 1];
        for s in &r.per_node {
            hist[s.trees] += 1;
        }
        self.diagnostics.trees = self.trees.len();
        self.diagnostics.trees_per_node_histogram = hist;
        self.diagnostics.max_label_bits = r.max_label_bits;
        self.diagnostics.mean_label_bits = r.mean_label_bits;
        self.diagnostics.max_table_bits = r.max_table_bits;
    }

    /// Binary form: magic, config JSON, then one record per node.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let header = serde_json::json!({
            "tool": "prts",
            "version": TOOL_VERSION,
            "config": self.config,
            "hierarchy": self.hierarchy,
            "seed": self.config.seed,
        });
        let h = serde_json::to_vec(&header).expect("header serializes");
        out.extend_from_slice(&(h.len() as u32).to_le_bytes());
        out.extend_from_slice(&h);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for v in 0..self.n as VertexId {
            out.extend_from_slice(&v.to_le_bytes());
            let idx = &self.index[v as usize];
            out.extend_from_slice(&(idx.len() as u32).to_le_bytes());
            for e in idx {
                let t = &self.trees[e.tree as usize];
                let tab = t.table(e.pos as usize);
                out.extend_from_slice(&e.id.to_le_bytes());
                out.extend_from_slice(&t.level.to_le_bytes());
                out.extend_from_slice(&t.rep.to_le_bytes());
                out.extend_from_slice(&tab.r.to_le_bytes());
                out.extend_from_slice(&tab.d.to_le_bytes());
                out.extend_from_slice(&tab.p.unwrap_or(NO_PARENT).to_le_bytes());
                out.extend_from_slice(&tab.a.to_le_bytes());
                out.extend_from_slice(&tab.b.to_le_bytes());
                out.extend_from_slice(&tab.h.unwrap_or(NO_PARENT).to_le_bytes());
            }
            out.extend_from_slice(&(idx.len() as u32).to_le_bytes());
            for e in idx {
                let lab = self.trees[e.tree as usize].label(e.pos as usize);
                out.extend_from_slice(&e.id.to_le_bytes());
                out.extend_from_slice(&lab.r.to_le_bytes());
                out.extend_from_slice(&lab.a.to_le_bytes());
                out.extend_from_slice(&lab.d.to_le_bytes());
                out.extend_from_slice(&(lab.light.len() as u32).to_le_bytes());
                for x in lab.light {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Scheme, SchemeError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(5)? != MAGIC {
            return Err(SchemeError::Decode("bad magic".into()));
        }
        let hlen = r.u32()? as usize;
        let header: serde_json::Value =
            serde_json::from_slice(r.take(hlen)?).map_err(|e| SchemeError::Decode(e.to_string()))?;
        let config: SchemeConfig = serde_json::from_value(header["config"].clone())
            .map_err(|e| SchemeError::Decode(format!("config: {e}")))?;
        let hierarchy: HierarchyParams = serde_json::from_value(header["hierarchy"].clone())
            .map_err(|e| SchemeError::Decode(format!("hierarchy: {e}")))?;
        let n = r.u32()? as usize;
        // per tree: (level, rep, rows of (a, vertex, d, p, b, h))
        let mut rows: std::collections::BTreeMap<u64, (u32, u32, Vec<(u32, VertexId, Dist, u32, u32, u32)>)> =
            Default::default();
        for expect in 0..n as u32 {
            if r.u32()? != expect {
                return Err(SchemeError::Decode(format!("node record {expect} out of order")));
            }
            let k = r.u32()?;
            for _ in 0..k {
                let id = r.u64()?;
                let (level, rep, _root, d, p, a, b, h) =
                    (r.u32()?, r.u32()?, r.u32()?, r.u64()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?);
                rows.entry(id).or_insert((level, rep, Vec::new())).2.push((a, expect, d, p, b, h));
            }
            let k = r.u32()?;
            for _ in 0..k {
                let _id = r.u64()?;
                let (_r, _a, _d) = (r.u32()?, r.u32()?, r.u64()?);
                let c = r.u32()? as usize;
                r.take(4 * c)?;
            }
        }
        if r.pos != bytes.len() {
            return Err(SchemeError::Decode("trailing bytes".into()));
        }
        let mut trees = Vec::with_capacity(rows.len());
        for (id, (level, rep, mut rs)) in rows {
            rs.sort_unstable_by_key(|x| x.0);
            if rs.iter().enumerate().any(|(i, x)| x.0 as usize != i) {
                return Err(SchemeError::Decode(format!("tree {id:016x} has gaps in its preorder")));
            }
            let members: Vec<VertexId> = rs.iter().map(|x| x.1).collect();
            let pos_of = |v: u32| -> Result<u32, SchemeError> {
                if v == NO_PARENT {
                    return Ok(NO_PARENT);
                }
                rs.iter()
                    .position(|x| x.1 == v)
                    .map(|p| p as u32)
                    .ok_or_else(|| SchemeError::Decode(format!("tree {id:016x} references non-member {v}")))
            };
            let mut parent = Vec::with_capacity(rs.len());
            let mut heavy = Vec::with_capacity(rs.len());
            for x in &rs {
                parent.push(pos_of(x.3)?);
                heavy.push(pos_of(x.5)?);
            }
            trees.push(StoredTree {
                id,
                level,
                rep,
                members,
                parent,
                dist: rs.iter().map(|x| x.2).collect(),
                b: rs.iter().map(|x| x.4).collect(),
                heavy,
            });
        }
        let mut s = Scheme::from_trees(n, config, hierarchy, trees)?;
        s.fill_size_diagnostics();
        Ok(s)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), SchemeError> {
        w.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Scheme, SchemeError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Scheme::decode(&buf)
    }

    /// JSON sidecar with parameters and diagnostics.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "tool": "prts",
            "version": TOOL_VERSION,
            "config": self.config,
            "seed": self.config.seed,
            "n": self.n,
            "hierarchy": self.hierarchy,
            "diagnostics": self.diagnostics,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], SchemeError> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| SchemeError::Decode("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, SchemeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SchemeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn build_scheme(g: &EmbeddedGraph, config: &SchemeConfig) -> Result<Scheme, SchemeError> {
    if !(config.eps > 0.0) {
        return Err(SchemeError::BadEps(config.eps));
    }
    if config.reps == 0 {
        return Err(SchemeError::NoRepetitions);
    }
    let start = Instant::now();
    let n = g.n();
    let hierarchy = HierarchyParams::for_graph(g, config.eps, config.reps);
    let mut trees = Vec::new();
    let mut level_diag = Vec::new();
    for (k, &delta) in hierarchy.delta_ticks.iter().enumerate() {
        let level = k as u32 + 1;
        let mut params = CoverParams::new(n, delta, hierarchy.cover_eps).with_oracle(config.oracle);
        params.tag = level;
        params.repetitions = config.reps;
        let covers = repeat_covers(g, &params, config.reps, mix(&[config.seed, level as u64]))?;
        let mut d = LevelDiagnostics { level, delta_ticks: delta, ..Default::default() };
        for c in &covers {
            let s = &c.stats;
            d.trees += c.trees.len();
            d.max_recursion_depth = d.max_recursion_depth.max(s.recursion_depth);
            d.separators += s.separators;
            d.outerplanar_separators += s.outerplanar_separators;
            d.face_pair_separators += s.face_pair_separators;
            d.degenerate_separators += s.degenerate_separators;
            d.unbalanced_separators += s.unbalanced_separators;
            d.worst_balance = d.worst_balance.max(s.worst_balance);
            d.multi_partition_shrink_misses += s.multi_partition_shrink_misses;
            d.covering_violations += s.covering_violations;
            d.max_trees_per_vertex = d.max_trees_per_vertex.max(s.max_trees_per_vertex);
        }
        level_diag.push(d);
        for c in covers {
            trees.extend(c.trees.iter().map(|t| StoredTree::from_cover(t, level)));
        }
    }
    let mut s = Scheme::from_trees(n, config.clone(), hierarchy, trees)?;
    s.diagnostics.levels = level_diag;
    s.fill_size_diagnostics();
    s.diagnostics.build_ms = start.elapsed().as_millis();
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeSize {
    pub trees: usize,
    pub label_bits: usize,
    pub table_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub per_node: Vec<NodeSize>,
    pub max_trees: usize,
    pub mean_trees: f64,
    pub max_label_bits: usize,
    pub mean_label_bits: f64,
    pub max_table_bits: usize,
    pub mean_table_bits: f64,
}

pub fn measure_sizes(s: &Scheme) -> SizeReport {
    let per_node: Vec<NodeSize> = (0..s.n as VertexId)
        .map(|v| NodeSize {
            trees: s.trees_of(v),
            label_bits: s.label_bits_of(v),
            table_bits: 8 * TABLE_RECORD * s.trees_of(v),
        })
        .collect();
    let nf = s.n.max(1) as f64;
    let mean = |f: fn(&NodeSize) -> usize| per_node.iter().map(f).sum::<usize>() as f64 / nf;
    SizeReport {
        max_trees: per_node.iter().map(|x| x.trees).max().unwrap_or(0),
        mean_trees: mean(|x| x.trees),
        max_label_bits: per_node.iter().map(|x| x.label_bits).max().unwrap_or(0),
        mean_label_bits: mean(|x| x.label_bits),
        max_table_bits: per_node.iter().map(|x| x.table_bits).max().unwrap_or(0),
        mean_table_bits: mean(|x| x.table_bits),
        per_node,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_path, WeightDist};

    #[test]
    fn single_vertex_scheme_is_empty() {
        let g = generate_grid(1, 1, &WeightDist::Unit, 0).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(1, 0.5, 0)).unwrap();
        assert_eq!(s.tree_count(), 0);
        assert!(s.label(0).entries.is_empty());
        let r = measure_sizes(&s);
        assert_eq!((r.max_trees, r.max_label_bits, r.max_table_bits), (0, 0, 0));
    }

    #[test]
    fn single_edge_shares_a_tree() {
        let g = generate_path(&[5]).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(2, 0.5, 3)).unwrap();
        match select_tree(&s.table(0), &s.label(1)) {
            Selection::Tree { bound, .. } => assert!(bound >= 5),
            other => panic!("{other:?}"),
        }
        assert_eq!(select_tree(&s.table(1), &s.label(1)), Selection::Delivered);
    }

    #[test]
    fn hierarchy_levels() {
        let g = generate_grid(4, 4, &WeightDist::Unit, 0).unwrap();
        let h = HierarchyParams::for_graph(&g, 0.5, 3);
        // n W = 16, eccentricity of 0 is 6, bound 12: levels 2^1..2^4
        assert_eq!((h.d_star, h.levels), (4, 4));
        assert_eq!(h.delta_ticks, vec![2, 4, 8, 16]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = generate_grid(5, 5, &WeightDist::Uniform { lo: 1, hi: 3, denom: 2 }, 1).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(25, 0.5, 11)).unwrap();
        let bytes = s.encode();
        let back = Scheme::decode(&bytes).unwrap();
        assert_eq!(back.trees, s.trees);
        assert_eq!(back.index, s.index);
        assert_eq!(back.encode(), bytes);
        for v in 0..25 {
            assert_eq!(back.table(v), s.table(v));
            assert_eq!(back.label(v), s.label(v));
            assert_eq!(s.label(v).bits(), measure_sizes(&s).per_node[v as usize].label_bits);
        }
        assert!(Scheme::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn selection_bound_is_a_real_path() {
        let g = generate_grid(6, 6, &WeightDist::Uniform { lo: 1, hi: 4, denom: 1 }, 2).unwrap();
        let s = build_scheme(&g, &SchemeConfig::new(36, 0.5, 5)).unwrap();
        let full = SubgraphMask::full(36);
        for a in 0..36u32 {
            let ex = exact_sssp(&g, &full, &SourceSpec::Single(a)).unwrap();
            let tab = s.table(a);
            for b in 0..36u32 {
                if let Selection::Tree { bound, .. } = select_tree(&tab, &s.label(b)) {
                    assert!(bound >= ex.dist[b as usize].unwrap());
                }
            }
        }
    }
}
