use planar_routing::graph::{generate_grid, generate_path, generate_triangulated_grid, parse_graph, format_graph, WeightDist};
use planar_routing::router_sim::{evaluate, PairSampler};
use planar_routing::scheme::{build_scheme, measure_sizes, select_tree, Scheme, SchemeConfig, Selection};
use planar_routing::sssp::{exact_sssp, SourceSpec};
use planar_routing::graph::SubgraphMask;
use planar_routing::tree_cover::OracleMode;

#[test]
fn grid_16_selected_bound_within_stretch() {
    let g = generate_grid(16, 16, &WeightDist::Unit, 0).unwrap();
    let s = build_scheme(&g, &SchemeConfig::new(256, 0.5, 1)).unwrap();
    let (rep, traces) = evaluate(&s, &g, &PairSampler::Uniform, 2000, 2, false);
    let good = traces
        .iter()
        .filter(|t| match select_tree(&s.table(t.source), &s.label(t.target)) {
            Selection::Tree { bound, .. } => bound as f64 <= 1.5 * t.exact as f64,
            _ => false,
        })
        .count();
    assert!(good as f64 >= 0.99 * 2000.0, "{good}");
    assert_eq!(rep.below_exact, 0);
    assert!(rep.within_fraction() >= 0.99);
}

#[test]
fn weighted_triangulation_with_noisy_oracle() {
    let g = generate_triangulated_grid(10, 10, &WeightDist::Uniform { lo: 1, hi: 6, denom: 4 }, 3).unwrap();
    let mut cfg = SchemeConfig::new(100, 0.5, 4);
    cfg.oracle = OracleMode::Noise { cap: 0.1 };
    let s = build_scheme(&g, &cfg).unwrap();
    let full = SubgraphMask::full(100);
    let mut inside = 0;
    for a in (0..100).step_by(7) {
        let ex = exact_sssp(&g, &full, &SourceSpec::Single(a)).unwrap();
        for b in (0..100).step_by(3).take(14) {
            let d = ex.dist[b as usize].unwrap();
            match select_tree(&s.table(a), &s.label(b)) {
                Selection::Tree { bound, .. } => {
                    assert!(bound >= d);
                    inside += usize::from(bound as f64 <= 1.5 * d as f64);
                }
                Selection::Delivered => inside += 1,
                Selection::NoTree => {}
            }
        }
    }
    // 15 sources x 14 targets
    assert!(inside as f64 >= 0.95 * 210.0, "{inside}");
    let (rep, _) = evaluate(&s, &g, &PairSampler::Uniform, 300, 5, false);
    assert_eq!(rep.below_exact, 0);
    assert!(rep.within_fraction() >= 0.95, "{rep:?}");
}

#[test]
fn stratified_grid_32() {
    let g = generate_grid(32, 32, &WeightDist::Unit, 0).unwrap();
    let s = build_scheme(&g, &SchemeConfig::new(1024, 0.5, 6)).unwrap();
    let (rep, _) = evaluate(&s, &g, &PairSampler::Decades, 1000, 7, false);
    assert!(rep.per_decade.len() >= 2);
    for d in &rep.per_decade {
        assert!(d.within_bound as f64 >= 0.99 * d.pairs as f64, "{d:?}");
        assert!(d.p99 <= 1.5);
    }
}

#[test]
fn scheme_file_through_disk() {
    let g = generate_grid(5, 7, &WeightDist::Uniform { lo: 1, hi: 3, denom: 1 }, 8).unwrap();
    let g = parse_graph(&format_graph(&g, &["fixture".into()])).unwrap();
    let s = build_scheme(&g, &SchemeConfig::new(35, 0.25, 9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.prts");
    s.write_to(std::fs::File::create(&path).unwrap()).unwrap();
    let back = Scheme::read_from(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(measure_sizes(&back), measure_sizes(&s));
    let (a, _) = evaluate(&s, &g, &PairSampler::Uniform, 100, 1, false);
    let (b, _) = evaluate(&back, &g, &PairSampler::Uniform, 100, 1, false);
    assert_eq!(a, b);
}

#[test]
fn path_graph_routes_exactly() {
    let g = generate_path(&[3, 1, 4, 1, 5, 9, 2, 6]).unwrap();
    let s = build_scheme(&g, &SchemeConfig::new(9, 0.5, 0)).unwrap();
    let (rep, _) = evaluate(&s, &g, &PairSampler::Uniform, 200, 0, true);
    assert_eq!(rep.failures, 0);
    assert_eq!(rep.max, 1.0);
}
