//! Gset edge-list text: a header `n m` followed by `m` lines `i j w` with 1-based vertices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A parsed Gset instance. Edges are normalized (merged, loop-free) inside `graph`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    pub name: String,
    pub graph: Graph,
}

impl GraphInstance {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Edges with 1-based vertex indices, `i < j`.
    pub fn edges_one_based(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph.edges().iter().map(|&(i, j, w)| (i + 1, j + 1, w))
    }

    pub fn self_loops_dropped(&self) -> usize {
        self.graph.self_loops_dropped()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

pub fn parse_gset(text: &str, name: &str) -> Result<GraphInstance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hline, "vertex count")?;
    let m: usize = field(toks.next(), hline, "edge count")?;
    if toks.next().is_some() {
        return Err(parse_err(hline, "header must be `n m`"));
    }
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        let mut toks = line.split_whitespace();
        let i: usize = field(toks.next(), lineno, "first vertex")?;
        let j: usize = field(toks.next(), lineno, "second vertex")?;
        let w: f64 = field(toks.next(), lineno, "weight")?;
        if toks.next().is_some() {
            return Err(parse_err(lineno, "expected `i j w`"));
        }
        if i == 0 || j == 0 || i > n || j > n {
            return Err(parse_err(lineno, format!("vertex out of range 1..={n} in edge ({i}, {j})")));
        }
        if !w.is_finite() {
            return Err(parse_err(lineno, "non-finite weight"));
        }
        edges.push((i - 1, j - 1, w));
    }
    if edges.len() != m {
        return Err(parse_err(hline, format!("header announces {m} edges, found {}", edges.len())));
    }
    let graph = Graph::new(n, edges)?;
    if graph.self_loops_dropped() > 0 {
        log::warn!("{name}: dropped {} self-loop(s)", graph.self_loops_dropped());
    }
    Ok(GraphInstance { name: name.to_string(), graph })
}

pub fn read_gset(path: &Path) -> Result<GraphInstance> {
    let text = std::fs::read_to_string(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_gset(&text, &name)
}

/// Canonical text: normalized edges in `(i, j)` order.
pub fn serialize_gset(inst: &GraphInstance) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", inst.n(), inst.graph.edges().len()).unwrap();
    for (i, j, w) in inst.edges_one_based() {
        writeln!(out, "{i} {j} {w}").unwrap();
    }
    out
}
