use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Edge, EdgeId, EmbeddedGraph, GraphError, VertexId};

/// Distribution of edge weights used by the generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightDist {
    Unit,
    /// Real weights uniform on the grid `{lo, lo + 1/denom, ..., hi}`.
    Uniform { lo: u64, hi: u64, denom: u64 },
}

impl WeightDist {
    pub fn denom(&self) -> u64 {
        match self {
            WeightDist::Unit => 1,
            WeightDist::Uniform { denom, .. } => (*denom).max(1),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, max_w: u128) -> u64 {
        match *self {
            WeightDist::Unit => 1,
            WeightDist::Uniform { lo, hi, denom } => {
                let denom = denom.max(1);
                let lo_n = lo.max(1) * denom;
                let hi_n = (hi.max(lo.max(1)) * denom).min(max_w.min(u64::MAX as u128) as u64);
                rng.gen_range(lo_n..=hi_n.max(lo_n))
            }
        }
    }
}

impl FromStr for WeightDist {
    type Err = GraphError;

    /// Accepts `unit`, `uniform:LO:HI` and `uniform:LO:HI:DENOM`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadWeightDist(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["unit"] => Ok(WeightDist::Unit),
            ["uniform", lo, hi] | ["uniform", lo, hi, _] => {
                let lo: u64 = lo.parse().map_err(|_| bad())?;
                let hi: u64 = hi.parse().map_err(|_| bad())?;
                let denom: u64 = match parts.get(3) {
                    Some(d) => d.parse().map_err(|_| bad())?,
                    None => 1,
                };
                if lo == 0 || hi < lo || denom == 0 {
                    return Err(bad());
                }
                Ok(WeightDist::Uniform { lo, hi, denom })
            }
            _ => Err(bad()),
        }
    }
}

struct Builder {
    edges: Vec<Edge>,
    rotation: Vec<Vec<EdgeId>>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Builder { edges: Vec::new(), rotation: vec![Vec::new(); n] }
    }

    fn add(&mut self, u: VertexId, v: VertexId) -> EdgeId {
        self.edges.push(Edge { u, v, w: 1 });
        (self.edges.len() - 1) as EdgeId
    }

    fn finish(
        mut self,
        n: usize,
        dist: &WeightDist,
        seed: u64,
        coords: Option<Vec<(f64, f64)>>,
    ) -> Result<EmbeddedGraph, GraphError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_w = super::GraphLimits::default().max_weight(n) * dist.denom() as u128;
        for e in &mut self.edges {
            e.w = dist.sample(&mut rng, max_w);
        }
        EmbeddedGraph::new(n, dist.denom(), self.edges, self.rotation, coords)
    }
}

fn grid_edges(rows: usize, cols: usize, diagonals: bool) -> Builder {
    let id = |r: usize, c: usize| (r * cols + c) as VertexId;
    let mut b = Builder::new(rows * cols);
    // edge ids per vertex: east, south, south-east
    let mut east = vec![None; rows * cols];
    let mut south = vec![None; rows * cols];
    let mut diag = vec![None; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                east[v] = Some(b.add(id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                south[v] = Some(b.add(id(r, c), id(r + 1, c)));
            }
            if diagonals && r + 1 < rows && c + 1 < cols {
                diag[v] = Some(b.add(id(r, c), id(r + 1, c + 1)));
            }
        }
    }
    // clockwise (screen coordinates, rows grow downward): N, E, SE, S, W, NW
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            let mut rot = Vec::with_capacity(6);
            if r > 0 {
                rot.extend(south[v - cols]);
            }
            rot.extend(east[v]);
            rot.extend(diag[v]);
            rot.extend(south[v]);
            if c > 0 {
                rot.extend(east[v - 1]);
            }
            if r > 0 && c > 0 {
                rot.extend(diag[v - cols - 1]);
            }
            b.rotation[v] = rot;
        }
    }
    b
}

fn grid_coords(rows: usize, cols: usize) -> Vec<(f64, f64)> {
    (0..rows * cols).map(|v| ((v % cols) as f64, (v / cols) as f64)).collect()
}

/// `rows x cols` grid with rotation order N, E, S, W at every vertex.
pub fn generate_grid(
    rows: usize,
    cols: usize,
    weights: &WeightDist,
    seed: u64,
) -> Result<EmbeddedGraph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::ZeroDimension { rows, cols });
    }
    grid_edges(rows, cols, false).finish(rows * cols, weights, seed, Some(grid_coords(rows, cols)))
}

/// Grid plus the NW-SE diagonal of every unit square; all inner faces are
/// triangles.
pub fn generate_triangulated_grid(
    rows: usize,
    cols: usize,
    weights: &WeightDist,
    seed: u64,
) -> Result<EmbeddedGraph, GraphError> {
    if rows == 0 || cols == 0 {
        return Err(GraphError::ZeroDimension { rows, cols });
    }
    if rows < 2 || cols < 2 {
        return Err(GraphError::TooSmall { rows, cols });
    }
    grid_edges(rows, cols, true).finish(rows * cols, weights, seed, Some(grid_coords(rows, cols)))
}

/// Path `0 - 1 - ... - (n-1)` with explicit weight numerators (denominator 1).
pub fn generate_path(weights: &[u64]) -> Result<EmbeddedGraph, GraphError> {
    let n = weights.len() + 1;
    let mut b = Builder::new(n);
    for i in 0..weights.len() {
        let e = b.add(i as VertexId, i as VertexId + 1);
        b.edges[e as usize].w = weights[i];
        b.rotation[i].push(e);
        b.rotation[i + 1].push(e);
    }
    EmbeddedGraph::new(n, 1, b.edges, b.rotation, None)
}

/// Star with center 0 and `leaves` unit-weight spokes.
pub fn generate_star(leaves: usize) -> Result<EmbeddedGraph, GraphError> {
    let n = leaves + 1;
    let mut b = Builder::new(n);
    for l in 1..n {
        let e = b.add(0, l as VertexId);
        b.rotation[0].push(e);
        b.rotation[l].push(e);
    }
    b.finish(n, &WeightDist::Unit, 0, None)
}

/// Uniformly random recursive tree (each vertex attaches to a random earlier
/// one). Any rotation of a tree is planar; children are appended clockwise.
pub fn random_tree(n: usize, weights: &WeightDist, seed: u64) -> Result<EmbeddedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ee5_eed5);
    let mut b = Builder::new(n);
    for v in 1..n {
        let p = rng.gen_range(0..v);
        let e = b.add(p as VertexId, v as VertexId);
        b.rotation[p].push(e);
        b.rotation[v].push(e);
    }
    b.finish(n, weights, seed, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::faces;

    #[test]
    fn grid_shapes() {
        let g = generate_grid(1, 1, &WeightDist::Unit, 3).unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
        let g = generate_grid(2, 2, &WeightDist::Unit, 3).unwrap();
        assert_eq!((g.n(), g.m()), (4, 4));
        assert!(g.edges().iter().all(|e| e.w == 1));
        assert_eq!(
            generate_grid(0, 3, &WeightDist::Unit, 0).unwrap_err(),
            GraphError::ZeroDimension { rows: 0, cols: 3 }
        );
    }

    #[test]
    fn grid_weights_are_seed_deterministic() {
        let dist = WeightDist::Uniform { lo: 1, hi: 8, denom: 1 };
        let a = generate_grid(3, 3, &dist, 7).unwrap();
        let b = generate_grid(3, 3, &dist, 7).unwrap();
        assert_eq!((a.n(), a.m()), (9, 12));
        assert_eq!(a, b);
        assert!(a.edges().iter().all(|e| (1..=8).contains(&e.w)));
        let c = generate_grid(3, 3, &dist, 8).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn triangulated_grid_counts() {
        let g = generate_triangulated_grid(2, 2, &WeightDist::Unit, 0).unwrap();
        assert_eq!((g.n(), g.m()), (4, 5));
        let g = generate_triangulated_grid(3, 3, &WeightDist::Unit, 0).unwrap();
        assert_eq!((g.n(), g.m()), (9, 16));
    }

    #[test]
    fn triangulated_grid_face_census() {
        let g = generate_triangulated_grid(4, 6, &WeightDist::Unit, 11).unwrap();
        let mut sizes: Vec<usize> = faces(&g).iter().map(|f| f.len()).collect();
        sizes.sort_unstable();
        let outer = sizes.pop().unwrap();
        assert_eq!(outer, 2 * (4 + 6) - 4);
        assert!(sizes.iter().all(|&s| s == 3));
        assert_eq!(sizes.len(), 2 * 3 * 5);
    }

    #[test]
    fn parses_weight_specs() {
        assert_eq!("unit".parse::<WeightDist>().unwrap(), WeightDist::Unit);
        assert_eq!(
            "uniform:1:8".parse::<WeightDist>().unwrap(),
            WeightDist::Uniform { lo: 1, hi: 8, denom: 1 }
        );
        assert!("uniform:0:8".parse::<WeightDist>().is_err());
        assert!("gauss".parse::<WeightDist>().is_err());
    }
}
