use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use planar_routing::graph::{
    format_graph, generate_grid, generate_triangulated_grid, read_graph, EmbeddedGraph, VertexId, WeightDist,
};
use planar_routing::router_sim::{evaluate, route, sample_pairs, PairSampler, StretchReport};
use planar_routing::scheme::{build_scheme, Scheme, SchemeConfig, TOOL_VERSION};
use planar_routing::tree_cover::OracleMode;
use planar_routing::verify::{run_suite, summary_table, SUITES};
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Serialize)]
#[command(name = "prts", version, about = "Compact (1+eps)-stretch routing on embedded planar graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Progress and timings on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, Serialize)]
struct Dims {
    rows: usize,
    cols: usize,
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected RxC, got {s:?}"))?;
    let rows = r.parse().map_err(|_| format!("bad row count {r:?}"))?;
    let cols = c.parse().map_err(|_| format!("bad column count {c:?}"))?;
    Ok(Dims { rows, cols })
}

fn parse_weights(s: &str) -> Result<WeightDist, String> {
    WeightDist::from_str(s).map_err(|e| e.to_string())
}

fn parse_sssp(s: &str) -> Result<OracleMode, String> {
    match s.split_once(':') {
        None if s == "exact" => Ok(OracleMode::Exact),
        Some(("noise", e)) => match e.parse::<f64>() {
            Ok(cap) if cap >= 0.0 => Ok(OracleMode::Noise { cap }),
            _ => Err(format!("bad noise cap {e:?}")),
        },
        _ => Err(format!("expected exact or noise:EPS, got {s:?}")),
    }
}

#[derive(Args, Clone, Serialize)]
struct GraphSource {
    /// Graph file; defaults to graph.pg when no generator is given.
    #[arg(long, conflicts_with_all = ["grid", "tri_grid"])]
    graph: Option<PathBuf>,
    /// Generate a RxC grid.
    #[arg(long, value_parser = parse_dims, conflicts_with = "tri_grid")]
    grid: Option<Dims>,
    /// Generate a RxC triangulated grid.
    #[arg(long, value_parser = parse_dims)]
    tri_grid: Option<Dims>,
    /// Edge weights for generated graphs: unit, uniform:LO:HI[:DENOM].
    #[arg(long, default_value = "unit", value_parser = parse_weights)]
    weights: WeightDist,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Sampler {
    Uniform,
    Decades,
}

#[derive(Subcommand, Serialize)]
enum Cmd {
    /// Write a generated graph.
    Generate {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "graph.pg")]
        out: PathBuf,
    },
    /// Build a routing scheme; writes the PRTS1 file and a JSON sidecar.
    Build {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Independent covers per scale (default ceil(2 log2 n)).
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SSSP oracle inside the construction: exact or noise:EPS.
        #[arg(long, default_value = "exact", value_parser = parse_sssp)]
        sssp: OracleMode,
        #[arg(long, default_value = "scheme.prts")]
        out: PathBuf,
    },
    /// Route explicit pairs and print their traces.
    Route {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value = "scheme.prts")]
        scheme: PathBuf,
        /// Comma-separated S:T pairs.
        #[arg(long, required = true)]
        pairs: String,
        /// Re-select the tree at every hop.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Route sampled pairs and report stretch statistics.
    Eval {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value = "scheme.prts")]
        scheme: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Sampler::Uniform)]
        sampler: Sampler,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-pair CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run property suites; JSON lines on stdout or --out, summary on stderr.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Bad input detected after argument parsing; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn header(cli: &Cli) -> serde_json::Value {
    json!({ "tool": "prts", "version": TOOL_VERSION, "config": cli })
}

fn load_graph(src: &GraphSource, seed: u64) -> Result<EmbeddedGraph> {
    let generated = match (src.grid, src.tri_grid) {
        (Some(d), _) => Some(generate_grid(d.rows, d.cols, &src.weights, seed)),
        (_, Some(d)) => Some(generate_triangulated_grid(d.rows, d.cols, &src.weights, seed)),
        _ => None,
    };
    if let Some(g) = generated {
        return g.map_err(|e| usage(e.to_string()));
    }
    let path = src.graph.clone().unwrap_or_else(|| PathBuf::from("graph.pg"));
    read_graph(&path).with_context(|| format!("reading {}", path.display()))
}

fn load_scheme(path: &Path, g: &EmbeddedGraph) -> Result<Scheme> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let s = Scheme::read_from(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    if s.n != g.n() {
        return Err(usage(format!("scheme has {} nodes but the graph has {}", s.n, g.n())));
    }
    Ok(s)
}

fn parse_pairs(s: &str, n: usize) -> Result<Vec<(VertexId, VertexId)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p.trim().split_once(':').ok_or_else(|| usage(format!("bad pair {p:?}, expected S:T")))?;
            let parse = |x: &str| -> Result<VertexId> {
                let v: VertexId = x.parse().map_err(|_| usage(format!("bad vertex {x:?}")))?;
                if v as usize >= n {
                    return Err(usage(format!("vertex {v} out of range (n = {n})")));
                }
                Ok(v)
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.context("writing stdout"),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let t0 = Instant::now();
    let log = |msg: &str| {
        if cli.verbose > 0 {
            eprintln!("[{:>8.2}s] {msg}", t0.elapsed().as_secs_f64());
        }
    };
    match &cli.cmd {
        Cmd::Generate { source, seed, out } => {
            if source.grid.is_none() && source.tri_grid.is_none() {
                return Err(usage("generate needs --grid or --tri-grid"));
            }
            let g = load_graph(source, *seed)?;
            let comments = vec![format!("prts {TOOL_VERSION}"), format!("config {}", serde_json::to_string(cli)?)];
            std::fs::write(out, format_graph(&g, &comments)).with_context(|| format!("writing {}", out.display()))?;
            log(&format!("wrote {} (n = {}, m = {})", out.display(), g.n(), g.m()));
        }
        Cmd::Build { source, eps, reps, seed, sssp, out } => {
            if !(*eps > 0.0) {
                return Err(usage(format!("--eps must be positive, got {eps}")));
            }
            if *reps == Some(0) {
                return Err(usage("--reps must be at least 1"));
            }
            let g = load_graph(source, *seed)?;
            let mut config = SchemeConfig::new(g.n(), *eps, *seed);
            config.reps = reps.unwrap_or(config.reps);
            config.oracle = *sssp;
            log(&format!("building n = {} eps = {eps} reps = {}", g.n(), config.reps));
            let s = build_scheme(&g, &config)?;
            let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
            s.write_to(&mut w)?;
            w.flush()?;
            let mut side = s.sidecar();
            side["run"] = header(cli);
            let side_path = PathBuf::from(format!("{}.json", out.display()));
            write_json(Some(&side_path), &side)?;
            log(&format!(
                "{} trees, max label {} bits, wrote {} and {}",
                s.tree_count(),
                s.diagnostics.max_label_bits,
                out.display(),
                side_path.display()
            ));
        }
        Cmd::Route { source, scheme, pairs, strict, out } => {
            let g = load_graph(source, 0)?;
            let pairs = parse_pairs(pairs, g.n())?;
            if pairs.is_empty() {
                return Err(usage("--pairs is empty"));
            }
            let s = load_scheme(scheme, &g)?;
            let traces: Vec<_> = sample_pairs(&g, &PairSampler::Explicit(pairs), 0, 0)
                .into_iter()
                .map(|(a, b, d)| route(&s, &g, a, b, d, *strict))
                .collect();
            let mut v = header(cli);
            v["seed"] = json!(s.config.seed);
            v["scheme_config"] = json!(s.config);
            v["traces"] = json!(traces);
            write_json(out.as_deref(), &v)?;
        }
        Cmd::Eval { source, scheme, count, sampler, seed, strict, out, csv } => {
            if *count == 0 {
                return Err(usage("--count must be at least 1"));
            }
            let g = load_graph(source, 0)?;
            let s = load_scheme(scheme, &g)?;
            let ps = match sampler {
                Sampler::Uniform => PairSampler::Uniform,
                Sampler::Decades => PairSampler::Decades,
            };
            let (report, traces) = evaluate(&s, &g, &ps, *count, *seed, *strict);
            if let Some(p) = csv {
                let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
                StretchReport::write_csv(&traces, BufWriter::new(f))?;
            }
            let mut v = header(cli);
            v["seed"] = json!(seed);
            v["scheme_config"] = json!(s.config);
            v["report"] = json!(report);
            write_json(out.as_deref(), &v)?;
            log(&format!("{} pairs, {} failures, p99 {}", report.pairs, report.failures, report.p99));
        }
        Cmd::Verify { suite, n, seed, out } => {
            if suite != "all" && !SUITES.contains(&suite.as_str()) {
                return Err(usage(format!("unknown suite {suite:?}; expected all or one of {}", SUITES.join(", "))));
            }
            if *n < 4 {
                return Err(usage("--n must be at least 4"));
            }
            let results = run_suite(suite, *n, *seed)?;
            let mut lines = vec![serde_json::to_string(&header(cli))?];
            lines.extend(results.iter().map(|r| r.json_line()));
            let text = lines.join("\n") + "\n";
            match out {
                Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            eprint!("{}", summary_table(&results));
            let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
            for r in &failed {
                eprintln!("failed: {}", r.json_line());
            }
            log("done");
            return Ok(failed.is_empty());
        }
    }
    log("done");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_parsers() {
        let d = parse_dims("4x7").unwrap();
        assert_eq!((d.rows, d.cols), (4, 7));
        assert!(parse_dims("4by7").is_err());
        assert_eq!(parse_sssp("noise:0.1").unwrap(), OracleMode::Noise { cap: 0.1 });
        assert_eq!(parse_sssp("exact").unwrap(), OracleMode::Exact);
        assert!(parse_sssp("noise:-1").is_err());
        assert!(parse_sssp("fast").is_err());
    }

    #[test]
    fn pair_lists() {
        assert_eq!(parse_pairs("0:15, 3:4", 16).unwrap(), vec![(0, 15), (3, 4)]);
        assert!(parse_pairs("0:16", 16).is_err());
        assert!(parse_pairs("0-1", 16).is_err());
    }
}
