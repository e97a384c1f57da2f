use super::{EdgeId, EmbeddedGraph, VertexId};

/// A directed edge slot: `edge` traversed away from `vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedSlot {
    pub vertex: VertexId,
    pub edge: EdgeId,
}

/// Face boundaries of the embedding, each as the cyclic sequence of directed
/// slots met while walking it. After arriving at `v` along `e`, the walk
/// leaves along the successor of `e` in `v`'s rotation.
///
/// An edgeless graph has a single empty face.
pub fn faces(g: &EmbeddedGraph) -> Vec<Vec<DirectedSlot>> {
    if g.m() == 0 {
        return vec![Vec::new()];
    }
    // position of each edge inside each endpoint's rotation
    let mut pos_at = vec![[usize::MAX; 2]; g.m()];
    for v in 0..g.n() as VertexId {
        for (i, &e) in g.rotation(v).iter().enumerate() {
            let side = usize::from(g.edge(e).u != v);
            pos_at[e as usize][side] = i;
        }
    }
    let slot_index = |v: VertexId, e: EdgeId| 2 * e as usize + usize::from(g.edge(e).u != v);
    let mut visited = vec![false; 2 * g.m()];
    let mut out = Vec::new();
    for v in 0..g.n() as VertexId {
        for &e in g.rotation(v) {
            if visited[slot_index(v, e)] {
                continue;
            }
            let mut face = Vec::new();
            let (mut cv, mut ce) = (v, e);
            while !visited[slot_index(cv, ce)] {
                visited[slot_index(cv, ce)] = true;
                face.push(DirectedSlot { vertex: cv, edge: ce });
                let edge = g.edge(ce);
                let next_v = edge.other(cv);
                let side = usize::from(edge.u != next_v);
                let rot = g.rotation(next_v);
                let p = pos_at[ce as usize][side];
                ce = rot[(p + 1) % rot.len()];
                cv = next_v;
            }
            out.push(face);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_triangulated_grid, Edge, WeightDist};

    fn euler_holds(g: &EmbeddedGraph) -> bool {
        let f = faces(g).len() as i64;
        g.n() as i64 - g.m() as i64 + f == 2
    }

    #[test]
    fn triangle_has_two_faces() {
        let edges = vec![Edge { u: 0, v: 1, w: 1 }, Edge { u: 1, v: 2, w: 1 }, Edge { u: 2, v: 0, w: 1 }];
        let g = EmbeddedGraph::new(3, 1, edges, vec![vec![0, 2], vec![1, 0], vec![2, 1]], None).unwrap();
        let fs = faces(&g);
        assert_eq!(fs.len(), 2);
        assert!(fs.iter().all(|f| f.len() == 3));
    }

    #[test]
    fn small_grids() {
        let g = generate_grid(2, 2, &WeightDist::Unit, 0).unwrap();
        assert_eq!(faces(&g).len(), 2);
        let g = generate_triangulated_grid(3, 3, &WeightDist::Unit, 0).unwrap();
        // Euler: f = 2 - 9 + 16
        assert_eq!(faces(&g).len(), 9);
    }

    #[test]
    fn every_slot_on_exactly_one_face() {
        for (r, c) in [(1, 5), (3, 4), (6, 6)] {
            let g = generate_grid(r, c, &WeightDist::Unit, 1).unwrap();
            let fs = faces(&g);
            let total: usize = fs.iter().map(|f| f.len()).sum();
            assert_eq!(total, 2 * g.m());
            let mut all: Vec<_> = fs.into_iter().flatten().collect();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), 2 * g.m());
            assert!(euler_holds(&g));
        }
    }

    #[test]
    fn single_vertex_has_one_face() {
        let g = generate_grid(1, 1, &WeightDist::Unit, 0).unwrap();
        assert_eq!(faces(&g).len(), 1);
        assert!(euler_holds(&g));
    }
}
