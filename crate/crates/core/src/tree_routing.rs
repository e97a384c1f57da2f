//! Exact routing on one rooted tree with DFS intervals and heavy children.
//!
//! Children are visited in ascending `(subtree size, id)` order, `a` is the
//! preorder index and `b` the largest preorder index in the subtree. The
//! label of `t` lists the light vertices on the root path of `t` (those that
//! are not the heavy child of their parent). A node forwards up when the
//! target's `a` falls outside its interval, to a child named in the label if
//! one matches, and to its heavy child otherwise.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Dist, VertexId};
use crate::tree_cover::{CoverTree, NO_PARENT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeRoutingError {
    #[error("parent links contain a cycle or do not reach the root")]
    Cycle,
    #[error("target is not in the tree rooted at {0}")]
    NotInTree(VertexId),
    #[error("vertex {0} is not a member of the tree")]
    NotMember(VertexId),
    #[error("table of {0} has no heavy child but the target lies below it")]
    Inconsistent(VertexId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeTable {
    pub r: VertexId,
    pub d: Dist,
    pub p: Option<VertexId>,
    pub a: u32,
    pub b: u32,
    pub h: Option<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeLabel {
    pub r: VertexId,
    pub a: u32,
    /// Light vertices on the root path, root to leaf.
    pub light: Vec<VertexId>,
    pub d: Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Delivered,
    Up(VertexId),
    Down(VertexId),
}

impl Hop {
    pub fn vertex(self) -> Option<VertexId> {
        match self {
            Hop::Delivered => None,
            Hop::Up(v) | Hop::Down(v) => Some(v),
        }
    }
}

/// DFS layout over member indices of a [`CoverTree`].
pub(crate) struct Layout {
    /// Member indices in preorder.
    pub order: Vec<u32>,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    /// Heavy child as a member index, or [`NO_PARENT`].
    pub heavy: Vec<u32>,
}

pub(crate) fn layout(members: &[VertexId], parent: &[u32]) -> Result<Layout, TreeRoutingError> {
    let n = members.len();
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut root = None;
    for i in 0..n {
        match parent[i] {
            NO_PARENT if root.is_none() => root = Some(i as u32),
            NO_PARENT => return Err(TreeRoutingError::Cycle),
            p if (p as usize) < n => children[p as usize].push(i as u32),
            _ => return Err(TreeRoutingError::Cycle),
        }
    }
    let root = root.ok_or(TreeRoutingError::Cycle)?;
    // postorder by explicit stack to get subtree sizes
    let mut size = vec![1u32; n];
    let mut visit = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        visit.push(v);
        stack.extend(&children[v as usize]);
    }
    if visit.len() != n {
        return Err(TreeRoutingError::Cycle);
    }
    for &v in visit.iter().rev() {
        let p = parent[v as usize];
        if p != NO_PARENT {
            size[p as usize] += size[v as usize];
        }
    }
    let mut heavy = vec![NO_PARENT; n];
    for (v, ch) in children.iter_mut().enumerate() {
        ch.sort_unstable_by_key(|&c| (size[c as usize], members[c as usize]));
        heavy[v] = ch
            .iter()
            .copied()
            .max_by_key(|&c| (size[c as usize], std::cmp::Reverse(members[c as usize])))
            .unwrap_or(NO_PARENT);
    }
    let mut a = vec![0u32; n];
    let mut b = vec![0u32; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        a[v as usize] = order.len() as u32;
        b[v as usize] = a[v as usize] + size[v as usize] - 1;
        order.push(v);
        stack.extend(children[v as usize].iter().rev());
    }
    Ok(Layout { order, a, b, heavy })
}

/// Tables and labels of every member, aligned with `tree.members`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeTables {
    pub members: Vec<VertexId>,
    pub tables: Vec<TreeTable>,
    pub labels: Vec<TreeLabel>,
}

impl TreeTables {
    pub fn position(&self, v: VertexId) -> Option<usize> {
        self.members.iter().position(|&m| m == v)
    }

    pub fn table(&self, v: VertexId) -> Option<&TreeTable> {
        self.position(v).map(|i| &self.tables[i])
    }

    pub fn label(&self, v: VertexId) -> Option<&TreeLabel> {
        self.position(v).map(|i| &self.labels[i])
    }
}

pub fn build_tree_tables(tree: &CoverTree) -> Result<TreeTables, TreeRoutingError> {
    let lay = layout(&tree.members, &tree.parent)?;
    let m = &tree.members;
    let root = m[lay.order[0] as usize];
    let opt = |i: u32| (i != NO_PARENT).then(|| m[i as usize]);
    let tables = (0..m.len())
        .map(|i| TreeTable {
            r: root,
            d: tree.dist[i],
            p: opt(tree.parent[i]),
            a: lay.a[i],
            b: lay.b[i],
            h: opt(lay.heavy[i]),
        })
        .collect();
    let mut light: Vec<Vec<VertexId>> = vec![Vec::new(); m.len()];
    for &v in &lay.order {
        let p = tree.parent[v as usize];
        if p != NO_PARENT {
            let mut l = light[p as usize].clone();
            if lay.heavy[p as usize] != v {
                l.push(m[v as usize]);
            }
            light[v as usize] = l;
        }
    }
    let labels = light
        .into_iter()
        .enumerate()
        .map(|(i, light)| TreeLabel { r: root, a: lay.a[i], light, d: tree.dist[i] })
        .collect();
    Ok(TreeTables { members: m.clone(), tables, labels })
}

/// One forwarding decision at `here`. `is_child(c)` tells whether `c` is a
/// tree child of `here`.
pub fn tree_next_hop(
    here: VertexId,
    table: &TreeTable,
    target: &TreeLabel,
    is_child: impl Fn(VertexId) -> bool,
) -> Result<Hop, TreeRoutingError> {
    if target.r != table.r {
        return Err(TreeRoutingError::NotInTree(table.r));
    }
    if target.a == table.a {
        return Ok(Hop::Delivered);
    }
    if target.a < table.a || target.a > table.b {
        return table.p.map(Hop::Up).ok_or(TreeRoutingError::NotInTree(table.r));
    }
    if let Some(&c) = target.light.iter().find(|&&c| is_child(c)) {
        return Ok(Hop::Down(c));
    }
    table.h.map(Hop::Down).ok_or(TreeRoutingError::Inconsistent(here))
}

/// Full route from `s` to the vertex labelled `target`.
pub fn tree_route(tables: &TreeTables, s: VertexId, target: &TreeLabel) -> Result<Vec<VertexId>, TreeRoutingError> {
    let pos: std::collections::HashMap<VertexId, usize> =
        tables.members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut here = s;
    let mut path = vec![s];
    loop {
        let i = *pos.get(&here).ok_or(TreeRoutingError::NotMember(here))?;
        let is_child = |c: VertexId| pos.get(&c).is_some_and(|&j| tables.tables[j].p == Some(here));
        match tree_next_hop(here, &tables.tables[i], target, is_child)? {
            Hop::Delivered => return Ok(path),
            hop => {
                here = hop.vertex().unwrap();
                path.push(here);
                if path.len() > tables.members.len() {
                    return Err(TreeRoutingError::Cycle);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(parent: &[u32]) -> CoverTree {
        let n = parent.len();
        let mut dist = vec![0; n];
        for i in 0..n {
            if parent[i] != NO_PARENT {
                dist[i] = dist[parent[i] as usize] + 1 + (i as u64 % 3);
            }
        }
        CoverTree {
            id: 1,
            repetition: 0,
            recursion: 0,
            partition: 0,
            root: 0,
            members: (0..n as u32).map(|i| i * 10).collect(),
            parent: parent.to_vec(),
            dist,
        }
    }

    #[test]
    fn single_node() {
        let t = build_tree_tables(&tree(&[NO_PARENT])).unwrap();
        assert_eq!((t.tables[0].a, t.tables[0].b, t.tables[0].p), (0, 0, None));
        assert!(t.labels[0].light.is_empty());
        assert_eq!(tree_route(&t, 0, &t.labels[0]).unwrap(), vec![0]);
    }

    #[test]
    fn heavy_tie_goes_to_smaller_id() {
        let t = build_tree_tables(&tree(&[NO_PARENT, 0, 0])).unwrap();
        assert_eq!(t.tables[0].h, Some(10));
        assert!(t.labels[1].light.is_empty());
        assert_eq!(t.labels[2].light, vec![20]);
    }

    #[test]
    fn rejects_cycles() {
        assert_eq!(build_tree_tables(&tree(&[NO_PARENT, 2, 1])).unwrap_err(), TreeRoutingError::Cycle);
        assert_eq!(build_tree_tables(&tree(&[1, 0])).unwrap_err(), TreeRoutingError::Cycle);
    }

    #[test]
    fn routes_follow_tree_paths() {
        // 0 - 1 - 2 - 3 and 1 - 4, 0 - 5
        let t = build_tree_tables(&tree(&[NO_PARENT, 0, 1, 2, 1, 0])).unwrap();
        for tab in &t.tables {
            assert!(tab.a <= tab.b);
        }
        let route = tree_route(&t, 30, &t.labels[5]).unwrap();
        assert_eq!(route, vec![30, 20, 10, 0, 50]);
        let route = tree_route(&t, 0, &t.labels[4]).unwrap();
        assert_eq!(route, vec![0, 10, 40]);
    }

    #[test]
    fn foreign_target_is_reported() {
        let t = build_tree_tables(&tree(&[NO_PARENT, 0])).unwrap();
        let mut lab = t.labels[1].clone();
        lab.a = 7;
        assert_eq!(tree_route(&t, 10, &lab).unwrap_err(), TreeRoutingError::NotInTree(0));
    }
}
