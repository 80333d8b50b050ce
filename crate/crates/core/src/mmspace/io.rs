//! Plain-text node/edge list format.
//!
//! ```text
//! nodes N edges M spacing h
//! v <id> <x> <y> <mu>
//! e <id1> <id2> <len> <sigma> <m>
//! ```
//!
//! Node ids must be `0..N`. Nodes without a position are written as `nan nan`.

use std::fmt::Write as _;
use std::str::FromStr;

use super::graph::{Edge, MeasureGraph, Node};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_graph<T: Real>(graph: &MeasureGraph<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {} edges {} spacing {}", graph.node_count(), graph.edge_count(), graph.spacing());
    for (i, v) in graph.nodes().iter().enumerate() {
        match v.pos {
            Some([x, y]) => {
                let _ = writeln!(out, "v {i} {x} {y} {}", v.mass);
            }
            None => {
                let _ = writeln!(out, "v {i} nan nan {}", v.mass);
            }
        }
    }
    for e in graph.edges() {
        let _ = writeln!(out, "e {} {} {} {} {}", e.a, e.b, e.length, e.cross, e.energy);
    }
    out
}

/// Node-indexed values, one `<id> <value>` line per node.
pub fn write_node_values<T: Real>(values: &[T]) -> String {
    let mut out = String::new();
    for (i, x) in values.iter().enumerate() {
        let _ = writeln!(out, "{i} {x}");
    }
    out
}

fn field<F: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<F> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse { line, msg: format!("expected {what}") })
}

pub fn read_graph<T: Real + FromStr>(text: &str) -> Result<MeasureGraph<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let mut tok = header.split_whitespace();
    let mut expect = |kw: &str| {
        if tok.next() == Some(kw) {
            Ok(())
        } else {
            Err(Error::Parse { line: hl, msg: format!("header must read `nodes N edges M spacing h`, missing `{kw}`") })
        }
    };
    expect("nodes")?;
    let n: usize = field(tok.next(), hl, "node count")?;
    if tok.next() != Some("edges") {
        return Err(Error::Parse { line: hl, msg: "missing `edges`".into() });
    }
    let m: usize = field(tok.next(), hl, "edge count")?;
    if tok.next() != Some("spacing") {
        return Err(Error::Parse { line: hl, msg: "missing `spacing`".into() });
    }
    let spacing: T = field(tok.next(), hl, "spacing")?;

    let mut nodes: Vec<Option<Node<T>>> = vec![None; n];
    let mut edges = Vec::with_capacity(m);
    for (ln, l) in lines {
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("v") => {
                let id: usize = field(tok.next(), ln, "node id")?;
                let x: T = field(tok.next(), ln, "x")?;
                let y: T = field(tok.next(), ln, "y")?;
                let mass: T = field(tok.next(), ln, "mass")?;
                let slot = nodes.get_mut(id).ok_or_else(|| Error::Parse { line: ln, msg: format!("node id {id} out of range") })?;
                if slot.is_some() {
                    return Err(Error::Parse { line: ln, msg: format!("node {id} listed twice") });
                }
                let pos = if x.is_nan() || y.is_nan() { None } else { Some([x, y]) };
                *slot = Some(Node { pos, mass });
            }
            Some("e") => {
                let a = field(tok.next(), ln, "first endpoint")?;
                let b = field(tok.next(), ln, "second endpoint")?;
                let length = field(tok.next(), ln, "length")?;
                let cross = field(tok.next(), ln, "sigma")?;
                let energy = field(tok.next(), ln, "energy weight")?;
                edges.push(Edge { a, b, length, cross, energy });
            }
            _ => return Err(Error::Parse { line: ln, msg: "expected a `v` or `e` record".into() }),
        }
        if tok.next().is_some() {
            return Err(Error::Parse { line: ln, msg: "trailing tokens".into() });
        }
    }
    if edges.len() != m {
        return Err(Error::Parse { line: hl, msg: format!("header announces {m} edges, found {}", edges.len()) });
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(Error::Parse { line: hl, msg: format!("node {i} missing") }))
        .collect::<Result<Vec<_>>>()?;
    MeasureGraph::new(nodes, edges, spacing)
}
