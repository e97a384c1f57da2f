//! Property checks tying the construction's guarantees to measurements.
//!
//! Every check returns [`PropertyResult`]s that are reproducible from their
//! seed. Pass thresholds for the statistical checks (K-S 0.02, padding slack
//! 0.5, 1% failure budgets) are test-budget constants of this crate.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{
    decompose, estimate_padding, sample_texp, CenterSet, DecompositionError, TruncExpParams,
};
use crate::graph::{
    generate_grid, generate_path, generate_star, generate_triangulated_grid, random_tree, Dist, EmbeddedGraph,
    GraphError, SubgraphMask, VertexId, WeightDist,
};
use crate::router_sim::{evaluate, PairSampler};
use crate::scheme::{build_scheme, measure_sizes, Scheme, SchemeConfig, SchemeError};
use crate::separator::{find_separator, SeparatorError};
use crate::sssp::{approx_sssp, exact_sssp, SourceSpec, SsspError, SsspMode};
use crate::tree_cover::{repeat_covers, CoverError, CoverParams, CoverTree, TreeCover, NO_PARENT};
use crate::tree_routing::{build_tree_tables, tree_route};
use crate::util::{ceil_log2, mix};

pub const KS_THRESHOLD: f64 = 0.02;
pub const PADDING_SLACK: f64 = 0.5;
pub const FAILURE_BUDGET: f64 = 0.01;
pub const GROWTH_SLACK: f64 = 1.5;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Separator(#[from] SeparatorError),
    #[error(transparent)]
    Sssp(#[from] SsspError),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub instance: String,
    pub passed: bool,
    pub measured: f64,
    /// `None` when the property is only measured.
    pub bound: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub seed: u64,
    pub details: Vec<String>,
}

impl PropertyResult {
    fn new(property: &str, instance: impl Into<String>, seed: u64) -> Self {
        PropertyResult {
            property: property.into(),
            instance: instance.into(),
            passed: true,
            measured: 0.0,
            bound: None,
            ci: None,
            seed,
            details: Vec::new(),
        }
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("results serialize")
    }
}

/// Plain-text summary, one row per result.
pub fn summary_table(results: &[PropertyResult]) -> String {
    let mut s = format!("{:<6} {:<16} {:<40} {:>12} {:>12}\n", "status", "property", "instance", "measured", "bound");
    for r in results {
        let bound = r.bound.map_or("-".to_string(), |b| format!("{b:.6}"));
        let _ = writeln!(
            s,
            "{:<6} {:<16} {:<40} {:>12.6} {:>12}",
            if r.passed { "PASS" } else { "FAIL" },
            r.property,
            r.instance,
            r.measured,
            bound
        );
    }
    s
}

/// Mean of the unscaled truncated exponential.
pub fn texp_mean(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        0.5 - lambda / 12.0
    } else {
        1.0 / lambda - (-lambda).exp() / -(-lambda).exp_m1()
    }
}

/// K-S and mean checks of the sampler for each `lambda`.
pub fn check_sampler(lambdas: &[f64], samples: usize, seed: u64) -> Vec<PropertyResult> {
    lambdas
        .par_iter()
        .flat_map_iter(|&lambda| {
            let p = TruncExpParams { lambda, delta: 1.0 };
            let key = mix(&[seed, lambda.to_bits()]);
            let mut xs: Vec<f64> = (0..samples).map(|i| sample_texp(&p, mix(&[key, i as u64]))).collect();
            let inst = format!("lambda={lambda} samples={samples}");

            let mean = xs.iter().sum::<f64>() / samples as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
            let se = (var / samples as f64).sqrt();
            let mut m = PropertyResult::new("sampler_mean", inst.clone(), seed);
            m.measured = (mean - texp_mean(lambda)).abs() / se;
            m.bound = Some(3.0);
            m.passed = m.measured <= 3.0;
            m.details.push(format!("mean={mean} analytic={} se={se}", texp_mean(lambda)));

            let mut ks = PropertyResult::new("sampler_ks", inst, seed);
            ks.measured = ks_statistic(&mut xs, |x| p.cdf(x));
            ks.bound = Some(KS_THRESHOLD);
            ks.passed = ks.measured < KS_THRESHOLD;
            if lambda < 1e-3 {
                let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
                ks.details.push(format!("ks_vs_uniform={d}"));
                ks.passed &= d < KS_THRESHOLD;
            }
            [ks, m]
        })
        .collect()
}

/// Largest distance between two members using only cluster vertices.
pub fn strong_diameter(g: &EmbeddedGraph, members: &[VertexId]) -> Option<Dist> {
    let mask = SubgraphMask::from_vertices(g.n(), members.iter().copied());
    let mut worst = 0;
    for &v in members {
        let f = exact_sssp(g, &mask, &SourceSpec::Single(v)).ok()?;
        for &u in members {
            worst = worst.max(f.dist[u as usize]?);
        }
    }
    Some(worst)
}

/// Greedy `delta`-net in id order: every vertex is within `delta` of a
/// center and centers are more than `delta` apart.
pub fn greedy_net(g: &EmbeddedGraph, delta: Dist) -> Vec<VertexId> {
    let n = g.n();
    let full = SubgraphMask::full(n);
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    for v in 0..n as VertexId {
        if covered[v as usize] {
            continue;
        }
        centers.push(v);
        let f = exact_sssp(g, &full, &SourceSpec::Single(v)).unwrap();
        for (c, d) in covered.iter_mut().zip(&f.dist) {
            *c |= d.is_some_and(|d| d <= delta);
        }
    }
    centers
}

/// Every cluster of every run has strong diameter at most `(1 + eps) 4 delta`.
/// Centers form a greedy `delta`-net with measured packing number.
pub fn check_diameter(
    g: &EmbeddedGraph,
    instance: &str,
    delta: Dist,
    eps: f64,
    seeds: std::ops::Range<u64>,
) -> Result<PropertyResult, VerifyError> {
    let full = SubgraphMask::full(g.n());
    let centers = CenterSet::with_measured_tau(g, &full, greedy_net(g, delta), delta, eps);
    let bound = (1.0 + eps) * 4.0 * delta as f64;
    let runs: Vec<(u64, usize, Vec<String>, Dist)> = seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let p = decompose(g, &full, &centers, delta, eps, seed)?;
            let mut bad = Vec::new();
            let mut worst = 0;
            for c in &p.clusters {
                let d = strong_diameter(g, &c.members).expect("clusters are connected");
                worst = worst.max(d);
                if d as f64 > bound {
                    bad.push(format!("seed={seed} center={} size={} diameter={d}", c.center, c.members.len()));
                }
            }
            Ok((seed, p.clusters.len(), bad, worst))
        })
        .collect::<Result<_, DecompositionError>>()?;
    let mut r = PropertyResult::new(
        "strong_diameter",
        format!("{instance} delta={delta} eps={eps} tau={}", centers.tau),
        seeds.start,
    );
    r.bound = Some(bound);
    r.measured = runs.iter().map(|x| x.3).max().unwrap_or(0) as f64;
    let clusters: usize = runs.iter().map(|x| x.1).sum();
    let bad: Vec<String> = runs.into_iter().flat_map(|x| x.2).collect();
    r.passed = bad.is_empty();
    r.details.push(format!("runs={} clusters={clusters} violations={}", seeds.end - seeds.start, bad.len()));
    r.details.extend(bad.into_iter().take(20));
    Ok(r)
}

/// Appendix-form padding bound `exp(-64 (gamma + eps) ln tau) - eps ln tau`.
pub fn padding_bound(tau: usize, gamma: f64, eps: f64) -> f64 {
    let l = (tau.max(1) as f64).ln();
    (-64.0 * (gamma + eps) * l).exp() - eps * l
}

/// Monte-Carlo padding frequency against `PADDING_SLACK` times the bound.
/// With `eps > 0` the frequency is only measured.
#[allow(clippy::too_many_arguments)]
pub fn check_padding(
    g: &EmbeddedGraph,
    instance: &str,
    centers: &CenterSet,
    delta: Dist,
    eps: f64,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<PropertyResult, VerifyError> {
    let est = estimate_padding(g, centers, delta, eps, gamma, trials, seed)?;
    let mut r = PropertyResult::new(
        "padding",
        format!("{instance} tau={} delta={delta} gamma={gamma} eps={eps} trials={trials}", centers.tau),
        seed,
    );
    r.measured = est.aggregate;
    r.ci = Some(est.aggregate_ci);
    let appendix = padding_bound(centers.tau, gamma, eps);
    // unit-constant reading of exp(-O(tau (gamma + eps))) - O(tau eps)
    let definition = (-(centers.tau as f64) * (gamma + eps)).exp() - centers.tau as f64 * eps;
    r.details.push(format!("appendix_form={appendix} definition_form_unit_constants={definition}"));
    if eps == 0.0 {
        r.bound = Some(PADDING_SLACK * appendix);
        r.passed = est.aggregate >= PADDING_SLACK * appendix;
    } else {
        r.details.push("measurement only".into());
    }
    Ok(r)
}

/// All pairs at distance below `2 delta` have a tree within
/// `(1 + eps) d + eps delta`, up to `FAILURE_BUDGET`.
pub fn coverage_failures(g: &EmbeddedGraph, covers: &[TreeCover], delta: Dist, eps: f64) -> (usize, usize, Vec<String>) {
    let n = g.n();
    let full = SubgraphMask::full(n);
    let rows: Vec<(usize, usize, Vec<String>)> = (0..n as VertexId)
        .into_par_iter()
        .map(|v| {
            let f = exact_sssp(g, &full, &SourceSpec::Single(v)).unwrap();
            let (mut pairs, mut fails, mut ex) = (0, 0, Vec::new());
            for w in v + 1..n as VertexId {
                let d = f.dist[w as usize].unwrap();
                if d >= 2 * delta {
                    continue;
                }
                pairs += 1;
                let limit = (1.0 + eps) * d as f64 + eps * delta as f64;
                let best = covers.iter().filter_map(|c| c.best_distance(v, w)).min();
                if best.map_or(true, |b| b as f64 > limit + 1e-9) {
                    fails += 1;
                    if ex.len() < 5 {
                        ex.push(format!("pair=({v},{w}) d={d} best={best:?} limit={limit}"));
                    }
                }
            }
            (pairs, fails, ex)
        })
        .collect();
    let pairs = rows.iter().map(|r| r.0).sum();
    let fails = rows.iter().map(|r| r.1).sum();
    (pairs, fails, rows.into_iter().flat_map(|r| r.2).take(20).collect())
}

pub fn check_coverage(
    g: &EmbeddedGraph,
    instance: &str,
    delta: Dist,
    eps: f64,
    reps: usize,
    seed: u64,
) -> Result<PropertyResult, VerifyError> {
    let params = CoverParams::new(g.n(), delta, eps);
    let covers = repeat_covers(g, &params, reps, seed)?;
    let (pairs, fails, ex) = coverage_failures(g, &covers, delta, eps);
    let mut r = PropertyResult::new("coverage", format!("{instance} delta={delta} eps={eps} L={reps}"), seed);
    r.measured = if pairs == 0 { 0.0 } else { fails as f64 / pairs as f64 };
    r.bound = Some(FAILURE_BUDGET);
    r.ci = Some(wilson_interval(fails, pairs, 1.96));
    r.passed = r.measured <= FAILURE_BUDGET;
    r.details.push(format!("pairs={pairs} failures={fails}"));
    r.details.extend(ex);
    Ok(r)
}

/// Random triangulated grids with random weights and ids, `n` in `[lo, hi]`.
pub fn random_triangulation(lo: usize, hi: usize, seed: u64) -> Result<EmbeddedGraph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(lo.max(4)..=hi.max(lo.max(4)));
    let rows = rng.gen_range(2..=((target as f64).sqrt() as usize).max(2));
    let cols = (target / rows).max(2);
    let g = generate_triangulated_grid(rows, cols, &WeightDist::Uniform { lo: 1, hi: 8, denom: 1 }, seed)?;
    let mut perm: Vec<VertexId> = (0..g.n() as VertexId).collect();
    perm.shuffle(&mut rng);
    Ok(g.relabeled(&perm))
}

/// Separator balance and shape on random triangulations.
pub fn check_separators(instances: usize, lo: usize, hi: usize, seed: u64) -> Result<PropertyResult, VerifyError> {
    let rows: Vec<(f64, Vec<String>)> = (0..instances as u64)
        .into_par_iter()
        .map(|i| {
            let s = mix(&[seed, i]);
            let g = random_triangulation(lo, hi, s)?;
            let n = g.n();
            let full = SubgraphMask::full(n);
            let root = (s % n as u64) as VertexId;
            let mode = if i % 2 == 0 { SsspMode::Exact } else { SsspMode::StretchNoise { seed: s } };
            let tree = approx_sssp(&g, &full, &SourceSpec::Single(root), 0.5, mode)?;
            let sep = find_separator(&g, &full, &tree)?;
            let mut bad = Vec::new();
            let largest = sep.components.iter().map(Vec::len).max().unwrap_or(0);
            let cap = (2 * n).div_ceil(3);
            if largest > cap {
                bad.push(format!("instance={i} n={n} largest={largest} cap={cap}"));
            }
            let par = |v: VertexId| tree.parent[v as usize];
            let p = &sep.path;
            let up = (0..sep.lca_index).all(|k| par(p[k]) == Some(p[k + 1]));
            let down = (sep.lca_index..p.len() - 1).all(|k| par(p[k + 1]) == Some(p[k]));
            if !(up && down) {
                bad.push(format!("instance={i} separator is not one tree path"));
            }
            Ok((largest as f64 / n as f64, bad))
        })
        .collect::<Result<_, VerifyError>>()?;
    let mut r = PropertyResult::new("separator_balance", format!("{instances} triangulations n in [{lo},{hi}]"), seed);
    r.measured = rows.iter().map(|x| x.0).fold(0.0, f64::max);
    r.bound = Some(2.0 / 3.0);
    let bad: Vec<String> = rows.into_iter().flat_map(|x| x.1).collect();
    r.passed = bad.is_empty();
    r.details.extend(bad.into_iter().take(20));
    Ok(r)
}

/// Separator statistics gathered during scheme builds.
pub fn check_build_separators(scheme: &Scheme, instance: &str) -> PropertyResult {
    let mut r = PropertyResult::new("build_separators", instance, scheme.config.seed);
    let levels = &scheme.diagnostics.levels;
    let unbalanced: usize = levels.iter().map(|l| l.unbalanced_separators).sum();
    r.measured = levels.iter().map(|l| l.worst_balance).fold(0.0, f64::max);
    r.bound = Some(2.0 / 3.0);
    r.passed = unbalanced == 0;
    r.details.push(format!(
        "separators={} unbalanced={unbalanced}",
        levels.iter().map(|l| l.separators).sum::<usize>()
    ));
    r
}

/// A random rooted tree with `n` members and scattered vertex ids.
pub fn random_cover_tree(n: usize, seed: u64) -> CoverTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<VertexId> = (0..(4 * n) as VertexId).collect();
    ids.shuffle(&mut rng);
    ids.truncate(n);
    // random recursive tree over a shuffled member order
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut parent = vec![NO_PARENT; n];
    let mut dist = vec![0; n];
    for k in 1..n {
        let p = order[rng.gen_range(0..k)];
        parent[order[k]] = p as u32;
        dist[order[k]] = dist[p] + rng.gen_range(1..10);
    }
    CoverTree {
        id: seed,
        repetition: 0,
        recursion: 0,
        partition: ids[order[0]],
        root: ids[order[0]],
        members: ids,
        parent,
        dist,
    }
}

/// The unique tree path between member indices `i` and `j`.
pub fn tree_path(t: &CoverTree, i: usize, j: usize) -> Vec<VertexId> {
    let up = |mut x: usize| {
        let mut chain = vec![x];
        while let Some(p) = t.parent_of(x) {
            x = p;
            chain.push(x);
        }
        chain
    };
    let (mut a, mut b) = (up(i), up(j));
    while a.len() > 1 && b.len() > 1 && a[a.len() - 2] == b[b.len() - 2] {
        a.pop();
        b.pop();
    }
    b.pop();
    a.extend(b.into_iter().rev());
    a.into_iter().map(|x| t.members[x]).collect()
}

/// Tree routing reproduces the tree path for all ordered pairs.
pub fn check_tree_routing(trees: usize, max_n: usize, seed: u64) -> PropertyResult {
    let rows: Vec<(usize, Vec<String>)> = (0..trees as u64)
        .into_par_iter()
        .map(|k| {
            let s = mix(&[seed, k]);
            let n = 1 + (s % max_n as u64) as usize;
            let t = random_cover_tree(n, s);
            let tabs = build_tree_tables(&t).expect("random trees are trees");
            let mut bad = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let got = tree_route(&tabs, t.members[i], &tabs.labels[j]);
                    let want = tree_path(&t, i, j);
                    if got.as_ref() != Ok(&want) {
                        bad.push(format!("tree={k} n={n} from={} to={} got={got:?}", t.members[i], t.members[j]));
                    }
                }
            }
            (n * n, bad)
        })
        .collect();
    let pairs: usize = rows.iter().map(|x| x.0).sum();
    let bad: Vec<String> = rows.into_iter().flat_map(|x| x.1).collect();
    let mut r = PropertyResult::new("tree_routing", format!("{trees} random trees n<={max_n}"), seed);
    r.measured = bad.len() as f64;
    r.bound = Some(0.0);
    r.passed = bad.is_empty();
    r.details.push(format!("ordered_pairs={pairs}"));
    r.details.extend(bad.into_iter().take(20));
    r
}

/// Fraction of pairs routed within `1 + eps`, no route shorter than exact,
/// and no failure other than a missing common tree.
pub fn check_stretch(
    scheme: &Scheme,
    g: &EmbeddedGraph,
    instance: &str,
    sampler: &PairSampler,
    count: usize,
    seed: u64,
) -> PropertyResult {
    let (rep, _) = evaluate(scheme, g, sampler, count, seed, false);
    let kind = match sampler {
        PairSampler::Uniform => "uniform",
        PairSampler::Decades => "decades",
        PairSampler::Explicit(_) => "explicit",
    };
    let mut r = PropertyResult::new("stretch", format!("{instance} eps={} {kind} pairs={count}", scheme.config.eps), seed);
    r.measured = rep.within_fraction();
    r.bound = Some(1.0 - FAILURE_BUDGET);
    r.ci = Some(wilson_interval(rep.within_bound, rep.pairs, 1.96));
    let hard = rep.failures - rep.failure_kinds.get("NoTree").copied().unwrap_or(0);
    r.passed = r.measured >= 1.0 - FAILURE_BUDGET && rep.below_exact == 0 && hard == 0;
    if matches!(sampler, PairSampler::Decades) {
        for d in &rep.per_decade {
            let within = d.within_bound as f64 / d.pairs.max(1) as f64;
            r.passed &= within >= 1.0 - FAILURE_BUDGET;
            r.details.push(format!("decade={} pairs={} within={within} p99={}", d.decade, d.pairs, d.p99));
        }
    }
    r.details.push(format!(
        "p50={} p90={} p99={} max={} failures={} below_exact={} levels={:?}",
        rep.p50, rep.p90, rep.p99, rep.max, rep.failures, rep.below_exact, rep.per_level
    ));
    r
}

/// Allowed growth of max label bits from `n1` to `n2` at fixed eps:
/// `(log 2m / log m)^5 * GROWTH_SLACK` per doubling `m -> 2m`.
pub fn growth_bound(n1: usize, n2: usize) -> f64 {
    let mut b = 1.0;
    let mut m = n1;
    while m < n2 {
        b *= ((2 * m) as f64).log2().powi(5) / (m as f64).log2().powi(5) * GROWTH_SLACK;
        m *= 2;
    }
    b
}

/// Label growth across `(n, scheme)` pairs ordered by `n`.
pub fn check_size_growth(schemes: &[(usize, &Scheme)], instance: &str) -> Vec<PropertyResult> {
    schemes
        .windows(2)
        .map(|w| {
            let (n1, s1) = w[0];
            let (n2, s2) = w[1];
            let (a, b) = (measure_sizes(s1), measure_sizes(s2));
            let mut r = PropertyResult::new("label_growth", format!("{instance} n={n1}->{n2} eps={}", s1.config.eps), s2.config.seed);
            r.measured = b.max_label_bits as f64 / a.max_label_bits.max(1) as f64;
            r.bound = Some(growth_bound(n1, n2));
            r.passed = r.measured <= growth_bound(n1, n2);
            r.details.push(format!(
                "max_label_bits {} -> {}, max_trees {} -> {}, max_table_bits {} -> {}",
                a.max_label_bits, b.max_label_bits, a.max_trees, b.max_trees, a.max_table_bits, b.max_table_bits
            ));
            r
        })
        .collect()
}

/// Trees per node when eps halves: at most `2 * GROWTH_SLACK` times.
pub fn check_eps_halving(full: &Scheme, half: &Scheme, instance: &str) -> PropertyResult {
    let (a, b) = (measure_sizes(full), measure_sizes(half));
    let mut r = PropertyResult::new(
        "eps_halving",
        format!("{instance} eps={}->{}", full.config.eps, half.config.eps),
        half.config.seed,
    );
    r.measured = b.max_trees as f64 / a.max_trees.max(1) as f64;
    r.bound = Some(2.0 * GROWTH_SLACK);
    r.passed = r.measured <= 2.0 * GROWTH_SLACK;
    r.details.push(format!("max_trees {} -> {}, mean_trees {:.1} -> {:.1}", a.max_trees, b.max_trees, a.mean_trees, b.mean_trees));
    r
}

/// Two builds with the same configuration serialize identically.
pub fn check_determinism(g: &EmbeddedGraph, config: &SchemeConfig, instance: &str) -> Result<PropertyResult, VerifyError> {
    let a = build_scheme(g, config)?.encode();
    let b = build_scheme(g, config)?.encode();
    let mut r = PropertyResult::new("determinism", instance, config.seed);
    let diff = a.iter().zip(&b).position(|(x, y)| x != y).or((a.len() != b.len()).then_some(a.len().min(b.len())));
    r.measured = diff.map_or(0.0, |_| 1.0);
    r.bound = Some(0.0);
    r.passed = diff.is_none();
    r.details.push(format!("bytes={} first_difference={diff:?}", a.len()));
    Ok(r)
}

/// Lattice of centers at rows and columns `4, 12, 20, ...` (spacing 8).
pub fn grid_net(rows: usize, cols: usize, spacing: usize) -> Vec<VertexId> {
    let first = spacing / 2;
    let mut out = Vec::new();
    for r in (first..rows).step_by(spacing) {
        for c in (first..cols).step_by(spacing) {
            out.push((r * cols + c) as VertexId);
        }
    }
    out
}

pub const SUITES: &[&str] =
    &["sampler", "diameter", "padding", "coverage", "separator", "tree-routing", "stretch", "size", "determinism"];

/// Runs a named suite (or `all`) scaled to about `n` vertices.
pub fn run_suite(name: &str, n: usize, seed: u64) -> Result<Vec<PropertyResult>, VerifyError> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s, n, seed)?);
        }
        return Ok(out);
    }
    let side = ((n as f64).sqrt().round() as usize).max(2);
    let unit = WeightDist::Unit;
    Ok(match name {
        "sampler" => check_sampler(&[1e-6, 1.0, 2.0 + 2.0 * 8f64.ln(), 10.0], 100_000, seed),
        "diameter" => {
            let w = WeightDist::Uniform { lo: 1, hi: 4, denom: 2 };
            let graphs = [
                ("grid", generate_grid(side, side, &unit, seed)?),
                ("tri-grid", generate_triangulated_grid(side, side, &w, seed)?),
                ("tree", random_tree(side * side, &w, seed)?),
            ];
            let mut out = Vec::new();
            for (label, g) in &graphs {
                let inst = format!("{label} n={}", g.n());
                out.push(check_diameter(g, &inst, 4 * g.denom(), 0.0, seed..seed + 50)?);
            }
            out.push(check_diameter(&graphs[0].1, &format!("grid n={}", side * side), 4, 0.25, seed..seed + 10)?);
            out
        }
        "padding" => {
            let s = side.min(24);
            let g = generate_grid(s, s, &unit, seed)?;
            let full = SubgraphMask::full(g.n());
            let centers = CenterSet::with_measured_tau(&g, &full, grid_net(s, s, 8), 8, 0.0);
            let wide = CenterSet::with_measured_tau(&g, &full, grid_net(s, s, 8), 32, 0.0);
            let inst = format!("grid {s}x{s} net");
            vec![
                check_padding(&g, &inst, &centers, 8, 0.0, 1.0 / 32.0, 400, seed)?,
                check_padding(&g, &inst, &CenterSet::new(centers.centers.clone(), 1), 8, 0.0, 0.0, 20, seed)?,
                check_padding(&g, &inst, &centers, 8, 0.1, 1.0 / 32.0, 400, seed)?,
                check_padding(&g, &inst, &wide, 32, 0.0, 1.0 / 16.0, 400, seed)?,
            ]
        }
        "coverage" => {
            let s = side.min(14);
            let g = generate_grid(s, s, &unit, seed)?;
            let reps = 2 * ceil_log2(g.n()) as usize;
            let path = generate_path(&vec![1; 29])?;
            vec![
                check_coverage(&g, &format!("grid {s}x{s}"), 8, 0.5, reps, seed)?,
                check_coverage(&path, "path n=30", 4, 0.5, 2, seed)?,
                check_coverage(&generate_star(12)?, "star n=13", 2, 0.5, 1, seed)?,
            ]
        }
        "separator" => vec![check_separators(100, 9, 2000.min(8 * n.max(2)), seed)?],
        "tree-routing" => vec![check_tree_routing(500, 64, seed)],
        "stretch" => {
            let g = generate_grid(side, side, &unit, seed)?;
            let s = build_scheme(&g, &SchemeConfig::new(g.n(), 0.5, seed))?;
            let inst = format!("grid {side}x{side}");
            vec![
                check_stretch(&s, &g, &inst, &PairSampler::Uniform, 2000, seed),
                check_stretch(&s, &g, &inst, &PairSampler::Decades, 1000, seed),
                check_build_separators(&s, &inst),
            ]
        }
        "size" => {
            let mut ns = vec![];
            let mut m = 64;
            while m <= n.max(64) {
                ns.push(m);
                m *= 4;
            }
            let schemes: Vec<(usize, Scheme)> = ns
                .iter()
                .map(|&m| {
                    let k = (m as f64).sqrt() as usize;
                    let g = generate_grid(k, k, &unit, seed)?;
                    Ok((m, build_scheme(&g, &SchemeConfig::new(m, 0.5, seed))?))
                })
                .collect::<Result<_, VerifyError>>()?;
            let refs: Vec<(usize, &Scheme)> = schemes.iter().map(|(m, s)| (*m, s)).collect();
            let mut out = check_size_growth(&refs, "grid");
            let (m, full) = schemes.last().unwrap();
            let k = (*m as f64).sqrt() as usize;
            let g = generate_grid(k, k, &unit, seed)?;
            let half = build_scheme(&g, &SchemeConfig::new(*m, 0.25, seed))?;
            out.push(check_eps_halving(full, &half, &format!("grid n={m}")));
            out
        }
        "determinism" => {
            let s = side.min(16);
            let g = generate_grid(s, s, &unit, seed)?;
            vec![check_determinism(&g, &SchemeConfig::new(g.n(), 0.5, seed), &format!("grid {s}x{s}"))?]
        }
        other => return Err(VerifyError::UnknownSuite(other.into())),
    })
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_value() {
        // 50/100 at z = 1.96
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        assert_eq!(wilson_interval(10, 10, 1.96).1, 1.0);
    }

    #[test]
    fn ks_of_a_perfect_grid() {
        let mut s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut s, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
    }

    #[test]
    fn texp_mean_against_quadrature() {
        for lambda in [1e-6, 0.5, 1.0, 2.0 + 2.0 * 8f64.ln(), 10.0] {
            let k = 200_000;
            let h = 1.0 / k as f64;
            let norm = -(-lambda).exp_m1();
            // midpoint rule on x f(x)
            let q: f64 = (0..k)
                .map(|i| {
                    let x = (i as f64 + 0.5) * h;
                    x * lambda * (-lambda * x).exp() / norm * h
                })
                .sum();
            assert!((q - texp_mean(lambda)).abs() < 1e-8, "{lambda}: {q} vs {}", texp_mean(lambda));
        }
    }

    #[test]
    fn sampler_small_run() {
        let rs = check_sampler(&[2.0 + 2.0 * 8f64.ln()], 20_000, 3);
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().all(|r| r.passed), "{rs:?}");
    }

    #[test]
    fn tree_path_oracle() {
        let t = CoverTree {
            id: 0,
            repetition: 0,
            recursion: 0,
            partition: 0,
            root: 7,
            members: vec![5, 7, 9, 11],
            parent: vec![1, NO_PARENT, 1, 2],
            dist: vec![1, 0, 1, 2],
        };
        assert_eq!(tree_path(&t, 0, 3), vec![5, 7, 9, 11]);
        assert_eq!(tree_path(&t, 3, 2), vec![11, 9]);
        assert_eq!(tree_path(&t, 1, 1), vec![7]);
        assert!(check_tree_routing(20, 12, 1).passed);
    }

    #[test]
    fn single_center_diameter() {
        let g = generate_grid(5, 5, &WeightDist::Unit, 0).unwrap();
        let full = SubgraphMask::full(25);
        let p = decompose(&g, &full, &CenterSet::new(vec![12], 1), 8, 0.0, 1).unwrap();
        assert_eq!(p.clusters.len(), 1);
        // eccentricity of the middle is 4
        assert!(strong_diameter(&g, &p.clusters[0].members).unwrap() <= 8);
    }

    #[test]
    fn padding_with_zero_gamma_is_certain() {
        let g = generate_grid(8, 8, &WeightDist::Unit, 0).unwrap();
        let full = SubgraphMask::full(64);
        let cs = CenterSet::with_measured_tau(&g, &full, grid_net(8, 8, 4), 4, 0.0);
        let r = check_padding(&g, "grid", &cs, 4, 0.0, 0.0, 10, 0).unwrap();
        assert_eq!(r.measured, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn coverage_on_path_and_star() {
        let g = generate_path(&[1; 15]).unwrap();
        let r = check_coverage(&g, "path", 4, 0.5, 2, 0).unwrap();
        assert_eq!(r.measured, 0.0, "{r:?}");
        let r = check_coverage(&generate_star(9).unwrap(), "star", 2, 0.5, 1, 0).unwrap();
        assert_eq!(r.measured, 0.0, "{r:?}");
    }

    #[test]
    fn growth_bound_compounds() {
        let one = (7.0f64 / 6.0).powi(5) * GROWTH_SLACK;
        assert!((growth_bound(64, 128) - one).abs() < 1e-12);
        assert!((growth_bound(64, 256) - (8.0f64 / 6.0).powi(5) * 2.25).abs() < 1e-9);
        assert_eq!(growth_bound(64, 64), 1.0);
    }

    #[test]
    fn separators_small_sweep() {
        let r = check_separators(10, 9, 200, 5).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.measured <= 2.0 / 3.0 + 0.01);
    }

    #[test]
    fn greedy_net_covers_and_packs() {
        let g = generate_grid(9, 9, &WeightDist::Unit, 0).unwrap();
        let net = greedy_net(&g, 3);
        let full = SubgraphMask::full(81);
        assert!(CenterSet::new(net.clone(), 1).covering_radius(&g, &full).unwrap() <= 3);
        for &a in &net {
            let f = exact_sssp(&g, &full, &SourceSpec::Single(a)).unwrap();
            assert!(net.iter().all(|&b| b == a || f.dist[b as usize].unwrap() > 3));
        }
    }

    #[test]
    fn grid_net_positions() {
        assert_eq!(grid_net(24, 24, 8).len(), 9);
        assert_eq!(grid_net(24, 24, 8)[0], 4 * 24 + 4);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", 16, 0), Err(VerifyError::UnknownSuite(_))));
    }
}
