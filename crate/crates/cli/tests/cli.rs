use std::path::Path;
use std::process::{Command, Output};

fn prts(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prts")).current_dir(dir).args(args).output().expect("runs")
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid json")
}

#[test]
fn generate_build_route() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(prts(d, &["generate", "--grid", "4x4", "--seed", "1"]).status.success());
    let text = std::fs::read_to_string(d.join("graph.pg")).unwrap();
    assert!(text.starts_with("# prts "), "{text}");
    assert!(prts(d, &["build", "--eps", "0.5"]).status.success());
    let side = json(&std::fs::read(d.join("scheme.prts.json")).unwrap());
    assert_eq!(side["config"]["eps"], 0.5);
    assert!(side["run"]["version"].is_string());

    let out = prts(d, &["route", "--pairs", "0:15"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    let t = &v["traces"][0];
    assert_eq!(t["source"], 0);
    assert_eq!(t["target"], 15);
    let ok = t["error"].is_null();
    assert!(!ok || t["stretch"].as_f64().unwrap() <= 1.5, "{t}");
    if ok {
        assert_eq!(t["path"].as_array().unwrap().last().unwrap(), 15);
    }
}

#[test]
fn builds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.prts", "b.prts"] {
        let o = prts(d, &["build", "--tri-grid", "5x6", "--weights", "uniform:1:4:2", "--seed", "9", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(d.join("a.prts")).unwrap();
    assert_eq!(&a[..5], b"PRTS1");
    assert_eq!(a, std::fs::read(d.join("b.prts")).unwrap());
}

#[test]
fn eval_reports_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(prts(d, &["build", "--grid", "6x6", "--seed", "2"]).status.success());
    let out = prts(d, &["eval", "--grid", "6x6", "--count", "50", "--sampler", "decades", "--csv", "pairs.csv", "--out", "r.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&std::fs::read(d.join("r.json")).unwrap());
    assert_eq!(r["report"]["pairs"], 50);
    assert_eq!(r["report"]["below_exact"], 0);
    assert_eq!(r["config"]["cmd"]["Eval"]["count"], 50);
    let csv = std::fs::read_to_string(d.join("pairs.csv")).unwrap();
    assert!(csv.starts_with("s,t,exact,routed,stretch,tree\n"));
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        vec!["generate", "--grid", "4by4"],
        vec!["generate"],
        vec!["build", "--grid", "3x3", "--eps", "0"],
        vec!["build", "--grid", "3x3", "--sssp", "fast"],
        vec!["verify", "--suite", "nope"],
        vec!["frobnicate"],
    ] {
        let o = prts(d, &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(prts(d, &["build", "--grid", "3x3"]).status.success());
    let o = prts(d, &["route", "--grid", "3x3", "--pairs", "0:9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = prts(d, &["route", "--grid", "4x4", "--pairs", "0:1"]);
    assert_eq!(o.status.code(), Some(2), "scheme size mismatch");
}

#[test]
fn verify_emits_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = prts(dir.path(), &["verify", "--suite", "tree-routing", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["tool"], "prts");
    assert_eq!(lines[1]["property"], "tree_routing");
    assert_eq!(lines[1]["passed"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn verify_all_at_256() {
    let dir = tempfile::tempdir().unwrap();
    let out = prts(dir.path(), &["verify", "--suite", "all", "--n", "256", "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
