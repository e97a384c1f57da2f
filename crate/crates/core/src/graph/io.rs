//! Text format, one record per line:
//!
//! ```text
//! p planar <n> <m> <denom>
//! v <id> <x> <y>            (optional)
//! e <id> <u> <v> <w_numerator>
//! r <v> <e1> <e2> ...       (clockwise rotation)
//! ```
//!
//! Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Edge, EdgeId, EmbeddedGraph, GraphError};

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn perr(line: usize, msg: impl Into<String>) -> GraphIoError {
    GraphIoError::Parse { line, msg: msg.into() }
}

pub fn format_graph(g: &EmbeddedGraph, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        for l in c.lines() {
            let _ = writeln!(s, "# {l}");
        }
    }
    let _ = writeln!(s, "p planar {} {} {}", g.n(), g.m(), g.denom());
    if let Some(coords) = g.coords() {
        for (v, (x, y)) in coords.iter().enumerate() {
            let _ = writeln!(s, "v {v} {x} {y}");
        }
    }
    for (id, e) in g.edges().iter().enumerate() {
        let _ = writeln!(s, "e {id} {} {} {}", e.u, e.v, e.w);
    }
    for v in 0..g.n() as u32 {
        let _ = write!(s, "r {v}");
        for e in g.rotation(v) {
            let _ = write!(s, " {e}");
        }
        s.push('\n');
    }
    s
}

pub fn write_graph(g: &EmbeddedGraph, path: impl AsRef<Path>) -> Result<(), GraphIoError> {
    std::fs::write(path, format_graph(g, &[]))?;
    Ok(())
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<EmbeddedGraph, GraphIoError> {
    parse_graph(&std::fs::read_to_string(path)?)
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, GraphIoError> {
    tok.ok_or_else(|| perr(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(line, format!("malformed {what}")))
}

pub fn parse_graph(text: &str) -> Result<EmbeddedGraph, GraphIoError> {
    let mut header: Option<(usize, usize, u64, usize)> = None;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut edges: Vec<Option<(Edge, usize)>> = Vec::new();
    let mut rotation: Vec<Option<(Vec<EdgeId>, usize)>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut tok = l.split_whitespace();
        let kind = tok.next().unwrap();
        if kind != "p" && header.is_none() {
            return Err(perr(line, "record before header"));
        }
        match kind {
            "p" => {
                if header.is_some() {
                    return Err(perr(line, "duplicate header"));
                }
                if tok.next() != Some("planar") {
                    return Err(perr(line, "malformed header: expected 'p planar <n> <m> <denom>'"));
                }
                let n: usize = num(tok.next(), line, "header n")?;
                let m: usize = num(tok.next(), line, "header m")?;
                let denom: u64 = num(tok.next(), line, "header denom")?;
                if n == 0 || denom == 0 {
                    return Err(perr(line, "malformed header: n and denom must be positive"));
                }
                header = Some((n, m, denom, line));
                coords = vec![None; n];
                edges = vec![None; m];
                rotation = vec![None; n];
            }
            "v" => {
                let n = header.unwrap().0;
                let id: u64 = num(tok.next(), line, "vertex id")?;
                if id as usize >= n {
                    return Err(perr(line, format!("unknown vertex {id}")));
                }
                let x: f64 = num(tok.next(), line, "x")?;
                let y: f64 = num(tok.next(), line, "y")?;
                coords[id as usize] = Some((x, y));
            }
            "e" => {
                let (n, m, ..) = header.unwrap();
                let id: u64 = num(tok.next(), line, "edge id")?;
                if id as usize >= m {
                    return Err(perr(line, format!("unknown edge {id}")));
                }
                let u: u64 = num(tok.next(), line, "endpoint")?;
                let v: u64 = num(tok.next(), line, "endpoint")?;
                for x in [u, v] {
                    if x as usize >= n {
                        return Err(perr(line, format!("unknown vertex {x}")));
                    }
                }
                let w: u64 = num(tok.next(), line, "weight")?;
                if edges[id as usize].is_some() {
                    return Err(perr(line, format!("duplicate edge {id}")));
                }
                edges[id as usize] = Some((Edge { u: u as u32, v: v as u32, w }, line));
            }
            "r" => {
                let (n, m, ..) = header.unwrap();
                let v: u64 = num(tok.next(), line, "vertex id")?;
                if v as usize >= n {
                    return Err(perr(line, format!("unknown vertex {v}")));
                }
                let mut rot = Vec::new();
                for t in tok.by_ref() {
                    let e: u64 = t.parse().map_err(|_| perr(line, "malformed edge id"))?;
                    if e as usize >= m {
                        return Err(perr(line, format!("unknown edge {e}")));
                    }
                    rot.push(e as EdgeId);
                }
                rotation[v as usize] = Some((rot, line));
            }
            other => return Err(perr(line, format!("unknown record type '{other}'"))),
        }
    }

    let (n, _m, denom, header_line) = header.ok_or_else(|| perr(0, "missing header"))?;
    let mut edge_list = Vec::with_capacity(edges.len());
    let mut edge_line = Vec::with_capacity(edges.len());
    for (id, e) in edges.into_iter().enumerate() {
        let (e, l) = e.ok_or_else(|| perr(header_line, format!("edge {id} missing")))?;
        edge_list.push(e);
        edge_line.push(l);
    }
    let rot_line: Vec<usize> = rotation.iter().map(|r| r.as_ref().map_or(header_line, |r| r.1)).collect();
    let rot: Vec<Vec<EdgeId>> = rotation.into_iter().map(|r| r.map(|r| r.0).unwrap_or_default()).collect();
    let coords = if coords.iter().all(Option::is_none) {
        None
    } else if coords.iter().all(Option::is_some) {
        Some(coords.into_iter().map(Option::unwrap).collect())
    } else {
        return Err(perr(header_line, "coordinates given for only some vertices"));
    };

    EmbeddedGraph::new(n, denom, edge_list, rot, coords).map_err(|err| {
        let line = match &err {
            GraphError::UnknownVertex { edge, .. }
            | GraphError::SelfLoop(edge)
            | GraphError::ParallelEdge(_, edge)
            | GraphError::WeightOutOfRange { edge, .. } => edge_line[*edge as usize],
            GraphError::RotationIncomplete(v)
            | GraphError::RotationForeignEdge { vertex: v, .. }
            | GraphError::RotationDuplicate { vertex: v, .. } => rot_line[*v as usize],
            _ => header_line,
        };
        perr(line, err.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid, generate_triangulated_grid, WeightDist};

    #[test]
    fn round_trip_is_structural_identity() {
        let g = generate_grid(2, 2, &WeightDist::Unit, 0).unwrap();
        assert_eq!(parse_graph(&format_graph(&g, &[])).unwrap(), g);
        let dist = WeightDist::Uniform { lo: 1, hi: 9, denom: 4 };
        let g = generate_triangulated_grid(5, 3, &dist, 42).unwrap();
        let text = format_graph(&g, &["generated for a test".into()]);
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn file_round_trip() {
        let g = generate_grid(3, 2, &WeightDist::Unit, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        write_graph(&g, &p).unwrap();
        assert_eq!(read_graph(&p).unwrap(), g);
    }

    #[test]
    fn unknown_vertex_reports_line() {
        let text = "p planar 2 1 1\ne 0 0 3 1\nr 0 0\nr 1 0\n";
        let err = parse_graph(text).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("unknown vertex"), "{err}");
    }

    #[test]
    fn incomplete_rotation_reports_vertex() {
        let text = "p planar 3 2 1\ne 0 0 1 1\ne 1 1 2 1\nr 0 0\nr 1 0\nr 2 1\n";
        let err = parse_graph(text).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("rotation incomplete at 1"), "{err}");
    }

    #[test]
    fn malformed_header() {
        let err = parse_graph("p graph 2 1 1\n").unwrap_err().to_string();
        assert!(err.contains("line 1") && err.contains("malformed header"), "{err}");
        assert!(parse_graph("e 0 0 1 1\n").unwrap_err().to_string().contains("before header"));
    }
}
