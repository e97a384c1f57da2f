//! Pseudo-padded decomposition around a set of centers.
//!
//! Each center `x` draws an offset `delta_x ~ Delta * Texp(lambda)` and is
//! joined to a super-source by a virtual edge of length `Delta - delta_x`.
//! One SSSP from the super-source then assigns every vertex to the center
//! whose virtual edge starts its tree path.
//!
//! Offsets are real numbers, so distances inside the SSSP are kept in ticks
//! multiplied by a power of two `K` (at most `2^16`) and offsets are rounded
//! to the nearest `1/K` tick. Graph distances stay exact.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Dist, EmbeddedGraph, LocalGraph, Localizer, SubgraphMask, VertexId, NONE};
use crate::sssp::{local_sssp, EngineParams, SsspMode, UNREACHED};
use crate::util::mix;
use crate::verify::wilson_interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("no centers given")]
    NoCenters,
    #[error("center {0} lies outside the mask")]
    CenterOutsideMask(VertexId),
    #[error("vertex {0} is not reachable from any center")]
    Uncovered(VertexId),
    #[error("eps must be nonnegative (got {0})")]
    NegativeEps(f64),
    #[error("delta must be positive")]
    ZeroDelta,
    #[error("gamma must lie in [0, 1/16] (got {0})")]
    BadGamma(f64),
}

/// Truncated exponential distribution on `[0, 1]` scaled by `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncExpParams {
    pub lambda: f64,
    pub delta: f64,
}

impl TruncExpParams {
    /// `lambda = 2 + 2 ln(tau)`.
    pub fn for_tau(tau: usize, delta: f64) -> Self {
        TruncExpParams { lambda: 2.0 + 2.0 * (tau.max(1) as f64).ln(), delta }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        (-(-self.lambda * x).exp_m1()) / (-(-self.lambda).exp_m1())
    }

    /// Inverse CDF of the unscaled variable.
    pub fn quantile(&self, u: f64) -> f64 {
        -(u * (-self.lambda).exp_m1()).ln_1p() / self.lambda
    }
}

/// One draw of `delta * X`, keyed by `seed`.
pub fn sample_texp(params: &TruncExpParams, seed: u64) -> f64 {
    let u: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    params.delta * params.quantile(u)
}

fn center_offset(params: &TruncExpParams, seed: u64, center: VertexId) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(center as u64);
    params.delta * params.quantile(rng.gen())
}

/// Candidate centers with their packing bound `tau`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CenterSet {
    pub centers: Vec<VertexId>,
    pub tau: usize,
}

impl CenterSet {
    pub fn new(mut centers: Vec<VertexId>, tau: usize) -> Self {
        centers.sort_unstable();
        centers.dedup();
        CenterSet { centers, tau: tau.max(1) }
    }

    /// Every vertex of `mask` is a center; `tau` is the vertex count.
    pub fn all(mask: &SubgraphMask) -> Self {
        let centers = mask.vertices();
        let tau = centers.len();
        CenterSet::new(centers, tau)
    }

    /// Uses the true packing number: the most centers within
    /// `(3 + eps) delta` of any vertex of `mask`.
    pub fn with_measured_tau(
        g: &EmbeddedGraph,
        mask: &SubgraphMask,
        centers: Vec<VertexId>,
        delta: Dist,
        eps: f64,
    ) -> Self {
        let tau = packing_number(g, mask, &centers, ((3.0 + eps) * delta as f64).floor() as Dist);
        CenterSet::new(centers, tau)
    }

    /// Largest distance from a vertex of `mask` to its nearest center.
    pub fn covering_radius(&self, g: &EmbeddedGraph, mask: &SubgraphMask) -> Option<Dist> {
        let verts = mask.vertices();
        let lg = Localizer::new(g.n()).view(g, &verts);
        let seeds: Vec<(u32, Dist)> = self
            .centers
            .iter()
            .filter_map(|c| verts.binary_search(c).ok().map(|l| (l as u32, 0)))
            .collect();
        let f = local_sssp(&lg, &seeds, &EngineParams::exact());
        if f.order.len() < verts.len() {
            return None;
        }
        f.dist.iter().copied().max()
    }
}

fn packing_number(g: &EmbeddedGraph, mask: &SubgraphMask, centers: &[VertexId], radius: Dist) -> usize {
    let verts = mask.vertices();
    let lg = Localizer::new(g.n()).view(g, &verts);
    let mut is_center = vec![false; verts.len()];
    for c in centers {
        if let Ok(l) = verts.binary_search(c) {
            is_center[l] = true;
        }
    }
    let p = EngineParams { bound: Some(radius), ..EngineParams::exact() };
    (0..verts.len() as u32)
        .into_par_iter()
        .map(|v| local_sssp(&lg, &[(v, 0)], &p).order.iter().filter(|&&u| is_center[u as usize]).count())
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub center: VertexId,
    /// `delta_x` in ticks.
    pub offset: f64,
    /// Sorted member list.
    pub members: Vec<VertexId>,
    /// Parent in the cluster's spanning tree, aligned with `members`.
    pub parent: Vec<Option<VertexId>>,
    /// Tree distance to the center in ticks, aligned with `members`.
    pub dist: Vec<Dist>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mask(&self, n: usize) -> SubgraphMask {
        SubgraphMask::from_vertices(n, self.members.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    /// Center of each vertex's cluster; `None` outside the mask.
    pub center_of: Vec<Option<VertexId>>,
    pub clusters: Vec<Cluster>,
    pub delta: Dist,
    pub eps: f64,
    pub tau: usize,
    pub lambda: f64,
    /// Vertices farther than `2 (1 + eps) delta` from the super-source.
    pub covering_violations: Vec<VertexId>,
}

impl Partition {
    pub fn cluster_index(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.center_of.len()];
        for (i, c) in self.clusters.iter().enumerate() {
            for &v in &c.members {
                out[v as usize] = Some(i);
            }
        }
        out
    }
}

/// Local result: per local vertex, the local id of its center.
pub(crate) struct LocalPartition {
    pub center: Vec<u32>,
    pub parent: Vec<u32>,
    /// Tree distance to the center in ticks.
    pub dist: Vec<Dist>,
    pub offsets: Vec<(u32, f64)>,
    pub violations: Vec<u32>,
    pub unreached: Option<u32>,
}

fn scale_for(lg: &LocalGraph, delta: Dist) -> u64 {
    let span: u128 = lg.wt.iter().map(|&w| w as u128).sum::<u128>() / 2 + 2 * delta as u128 + 1;
    let mut k: u64 = 1 << 16;
    while k > 1 && (k as u128) * span >= 1u128 << 62 {
        k >>= 1;
    }
    k
}

pub(crate) fn decompose_local(
    lg: &LocalGraph,
    centers: &[u32],
    tau: usize,
    delta: Dist,
    eps: f64,
    seed: u64,
    mode: SsspMode,
) -> LocalPartition {
    let params = TruncExpParams::for_tau(tau, delta as f64);
    let k = scale_for(lg, delta);
    let mut offsets = Vec::with_capacity(centers.len());
    let mut seeds = Vec::with_capacity(centers.len());
    for &c in centers {
        let off = center_offset(&params, seed, lg.to_global[c as usize]);
        offsets.push((c, off));
        seeds.push((c, ((delta as f64 - off) * k as f64).round().max(0.0) as Dist));
    }
    let mut p = EngineParams::new(eps, mode);
    if let Some(key) = p.noise {
        p.noise = Some(mix(&[key, seed, 0xdec0]));
    }
    p.scale = k;
    let f = local_sssp(lg, &seeds, &p);
    let n = lg.n();
    let mut virt = vec![0; n];
    for &(c, w) in &seeds {
        virt[c as usize] = w;
    }
    let cover_limit = (2.0 * (1.0 + eps) * delta as f64 + 1.0) * k as f64;
    let mut dist = vec![UNREACHED; n];
    let mut violations = Vec::new();
    for &v in &f.order {
        let r = f.root[v as usize];
        // exact: the path from the center is a real path scaled by k
        dist[v as usize] = (f.dist[v as usize] - virt[r as usize]) / k;
        if f.dist[v as usize] as f64 > cover_limit {
            violations.push(v);
        }
    }
    let unreached = (f.order.len() < n).then(|| (0..n as u32).find(|&v| f.root[v as usize] == NONE).unwrap());
    LocalPartition { center: f.root, parent: f.parent, dist, offsets, violations, unreached }
}

/// Decomposition with the SSSP oracle in stretch-noise mode keyed by `seed`
/// (exact when `eps = 0`).
pub fn decompose(
    g: &EmbeddedGraph,
    mask: &SubgraphMask,
    centers: &CenterSet,
    delta: Dist,
    eps: f64,
    seed: u64,
) -> Result<Partition, DecompositionError> {
    decompose_with_mode(g, mask, centers, delta, eps, seed, SsspMode::StretchNoise { seed })
}

pub fn decompose_with_mode(
    g: &EmbeddedGraph,
    mask: &SubgraphMask,
    centers: &CenterSet,
    delta: Dist,
    eps: f64,
    seed: u64,
    mode: SsspMode,
) -> Result<Partition, DecompositionError> {
    if !(eps >= 0.0) {
        return Err(DecompositionError::NegativeEps(eps));
    }
    if delta == 0 {
        return Err(DecompositionError::ZeroDelta);
    }
    if centers.centers.is_empty() {
        return Err(DecompositionError::NoCenters);
    }
    let verts = mask.vertices();
    let mut local_centers = Vec::with_capacity(centers.centers.len());
    for &c in &centers.centers {
        let l = verts.binary_search(&c).map_err(|_| DecompositionError::CenterOutsideMask(c))?;
        local_centers.push(l as u32);
    }
    let lg = Localizer::new(g.n()).view(g, &verts);
    let lp = decompose_local(&lg, &local_centers, centers.tau, delta, eps, seed, mode);
    if let Some(v) = lp.unreached {
        return Err(DecompositionError::Uncovered(verts[v as usize]));
    }
    let mut slot = vec![usize::MAX; verts.len()];
    let mut clusters: Vec<Cluster> = Vec::new();
    for &(c, off) in &lp.offsets {
        slot[c as usize] = clusters.len();
        clusters.push(Cluster {
            center: verts[c as usize],
            offset: off,
            members: Vec::new(),
            parent: Vec::new(),
            dist: Vec::new(),
        });
    }
    let mut center_of = vec![None; g.n()];
    for (l, &v) in verts.iter().enumerate() {
        let c = lp.center[l];
        center_of[v as usize] = Some(verts[c as usize]);
        let cl = &mut clusters[slot[c as usize]];
        cl.members.push(v);
        let p = lp.parent[l];
        cl.parent.push((p != NONE).then(|| verts[p as usize]));
        cl.dist.push(lp.dist[l]);
    }
    clusters.retain(|c| !c.is_empty());
    Ok(Partition {
        center_of,
        clusters,
        delta,
        eps,
        tau: centers.tau,
        lambda: TruncExpParams::for_tau(centers.tau, delta as f64).lambda,
        covering_violations: lp.violations.iter().map(|&l| verts[l as usize]).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaddingEstimate {
    pub trials: usize,
    /// Fraction of trials in which the vertex's ball stayed inside its cluster.
    pub per_vertex: Vec<f64>,
    pub per_vertex_ci: Vec<(f64, f64)>,
    pub aggregate: f64,
    pub aggregate_ci: (f64, f64),
}

impl PaddingEstimate {
    /// CSV with columns `vertex,frequency,ci_low,ci_high`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["vertex", "frequency", "ci_low", "ci_high"])?;
        for (v, (f, (lo, hi))) in self.per_vertex.iter().zip(&self.per_vertex_ci).enumerate() {
            wr.serialize((v, f, lo, hi))?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Monte-Carlo estimate of `P[B(v, gamma delta) inside the cluster of v]`.
pub fn estimate_padding(
    g: &EmbeddedGraph,
    centers: &CenterSet,
    delta: Dist,
    eps: f64,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<PaddingEstimate, DecompositionError> {
    if !(0.0..=1.0 / 16.0).contains(&gamma) {
        return Err(DecompositionError::BadGamma(gamma));
    }
    let n = g.n();
    let full = SubgraphMask::full(n);
    let verts: Vec<VertexId> = (0..n as VertexId).collect();
    let lg = Localizer::new(n).view(g, &verts);
    let radius = (gamma * delta as f64).floor() as Dist;
    let bp = EngineParams { bound: Some(radius), ..EngineParams::exact() };
    let balls: Vec<Vec<u32>> = (0..n as u32).into_par_iter().map(|v| local_sssp(&lg, &[(v, 0)], &bp).order).collect();
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let p = decompose(g, &full, centers, delta, eps, mix(&[seed, t as u64]))?;
            Ok(balls
                .iter()
                .enumerate()
                .map(|(v, ball)| ball.iter().all(|&u| p.center_of[u as usize] == p.center_of[v]))
                .collect())
        })
        .collect::<Result<_, DecompositionError>>()?;
    let mut count = vec![0usize; n];
    for h in &hits {
        for (c, &b) in count.iter_mut().zip(h) {
            *c += usize::from(b);
        }
    }
    let total: usize = count.iter().sum();
    let trials_f = trials.max(1) as f64;
    Ok(PaddingEstimate {
        trials,
        per_vertex: count.iter().map(|&c| c as f64 / trials_f).collect(),
        per_vertex_ci: count.iter().map(|&c| wilson_interval(c, trials, 1.96)).collect(),
        aggregate: total as f64 / (trials_f * n as f64),
        aggregate_ci: wilson_interval(total, trials * n, 1.96),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_path, generate_triangulated_grid, WeightDist};
    use crate::sssp::{exact_sssp, SourceSpec};

    #[test]
    fn quantile_endpoints_and_value() {
        let p = TruncExpParams { lambda: 2.0, delta: 1.0 };
        assert_eq!(p.quantile(0.0), 0.0);
        assert!((p.quantile(1.0 - 1e-15) - 1.0).abs() < 1e-9);
        let closed = -(1.0 - 0.5 * (1.0 - (-2.0f64).exp())).ln() / 2.0;
        assert!((p.quantile(0.5) - closed).abs() < 1e-15);
        // invert the CDF by bisection
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = (lo + hi) / 2.0;
            if p.cdf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - closed).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_range() {
        let p = TruncExpParams::for_tau(8, 5.0);
        for s in 0..1000 {
            let x = sample_texp(&p, s);
            assert!((0.0..=5.0).contains(&x));
        }
    }

    #[test]
    fn single_center_takes_everything() {
        let g = generate_grid(5, 5, &WeightDist::Uniform { lo: 1, hi: 3, denom: 1 }, 2).unwrap();
        let full = SubgraphMask::full(25);
        let p = decompose(&g, &full, &CenterSet::new(vec![12], 1), 40, 0.0, 1).unwrap();
        assert_eq!(p.clusters.len(), 1);
        let ex = exact_sssp(&g, &full, &SourceSpec::Single(12)).unwrap();
        let c = &p.clusters[0];
        for (i, &v) in c.members.iter().enumerate() {
            assert_eq!(Some(c.dist[i]), ex.dist[v as usize]);
            assert_eq!(c.parent[i], ex.parent[v as usize]);
        }
        assert!(p.covering_violations.is_empty());
    }

    #[test]
    fn far_centers_split_a_path() {
        let g = generate_path(&[1; 20]).unwrap();
        let full = SubgraphMask::full(21);
        for seed in 0..20 {
            let p = decompose(&g, &full, &CenterSet::new(vec![0, 20], 1), 10, 0.0, seed).unwrap();
            assert_eq!(p.clusters.len(), 2);
            assert_eq!(p.center_of[0], Some(0));
            assert_eq!(p.center_of[20], Some(20));
        }
    }

    #[test]
    fn assignment_is_an_argmin_of_shifted_distance() {
        let g = generate_triangulated_grid(8, 8, &WeightDist::Uniform { lo: 1, hi: 4, denom: 1 }, 6).unwrap();
        let full = SubgraphMask::full(64);
        let centers = CenterSet::new(vec![0, 9, 27, 36, 50, 63], 6);
        let delta = 6;
        let params = TruncExpParams::for_tau(6, delta as f64);
        for seed in 0..5 {
            let p = decompose(&g, &full, &centers, delta, 0.0, seed).unwrap();
            let shifted: Vec<(VertexId, Vec<f64>)> = centers
                .centers
                .iter()
                .map(|&x| {
                    let d = exact_sssp(&g, &full, &SourceSpec::Single(x)).unwrap();
                    let off = delta as f64 - center_offset(&params, seed, x);
                    (x, d.dist.iter().map(|d| off + d.unwrap() as f64).collect())
                })
                .collect();
            for v in 0..64 {
                let best = shifted.iter().map(|(_, s)| s[v]).fold(f64::INFINITY, f64::min);
                let mine = shifted.iter().find(|(x, _)| Some(*x) == p.center_of[v]).unwrap().1[v];
                // offsets are rounded to 2^-16 ticks
                assert!(mine - best < 1e-4, "vertex {v}");
            }
        }
    }

    #[test]
    fn uncovered_vertex_is_reported() {
        let g = generate_path(&[1, 1, 1]).unwrap();
        let mask = SubgraphMask::from_vertices(4, [0, 2, 3]);
        assert_eq!(
            decompose(&g, &mask, &CenterSet::new(vec![3], 1), 2, 0.0, 0).unwrap_err(),
            DecompositionError::Uncovered(0)
        );
    }

    #[test]
    fn trivial_padding_cases() {
        let g = generate_grid(4, 4, &WeightDist::Unit, 0).unwrap();
        let all = CenterSet::all(&SubgraphMask::full(16));
        let est = estimate_padding(&g, &all, 4, 0.0, 0.0, 10, 3).unwrap();
        assert!(est.per_vertex.iter().all(|&f| f == 1.0));
        let one = CenterSet::new(vec![5], 1);
        let est = estimate_padding(&g, &one, 8, 0.0, 1.0 / 16.0, 10, 3).unwrap();
        assert_eq!(est.aggregate, 1.0);
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("vertex,frequency,ci_low,ci_high\n0,1.0,"));
    }

    #[test]
    fn measured_tau_and_covering() {
        let g = generate_grid(9, 9, &WeightDist::Unit, 0).unwrap();
        let full = SubgraphMask::full(81);
        let net: Vec<VertexId> = [1, 4, 7].iter().flat_map(|&r| [1, 4, 7].map(|c| r * 9 + c)).collect();
        let cs = CenterSet::with_measured_tau(&g, &full, net, 2, 0.0);
        assert_eq!(cs.covering_radius(&g, &full), Some(2));
        // from the middle vertex all 9 centers lie within 6
        assert_eq!(cs.tau, 9);
    }
}
