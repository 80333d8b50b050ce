//! Exhaustive listings of small families, used as brute-force references.

use super::{Condenser, Constraint};
use crate::error::{invalid, Result};
use crate::mmspace::{MeasureGraph, NodeSet};
use crate::scalar::Real;

/// Upper bound on the number of free nodes for cut enumeration.
const MAX_FREE_NODES: usize = 22;

/// Every simple path inside `Ω` from a node of `E` to a node of `F` whose
/// interior avoids `E ∪ F`. Longer paths through extra `E`/`F` nodes contain
/// one of these and never tighten the family.
pub fn all_curve_constraints<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, limit: usize) -> Result<Vec<Constraint<T>>> {
    cond.check_graph(graph)?;
    let mut out = Vec::new();
    let mut on_path = vec![false; graph.node_count()];
    for s in cond.e().iter() {
        let mut path = vec![s];
        on_path[s] = true;
        walk(graph, cond, &mut path, &mut on_path, &mut out, limit)?;
        on_path[s] = false;
    }
    Ok(out)
}

fn walk<T: Real>(
    graph: &MeasureGraph<T>,
    cond: &Condenser,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Constraint<T>>,
    limit: usize,
) -> Result<()> {
    let v = *path.last().expect("nonempty path");
    for &(w, _) in graph.neighbors(v) {
        if on_path[w] || !cond.omega().contains(w) || cond.e().contains(w) {
            continue;
        }
        path.push(w);
        if cond.f().contains(w) {
            if out.len() >= limit {
                return invalid(format!("more than {limit} paths"));
            }
            out.push(Constraint::curve(graph, path)?);
        } else {
            on_path[w] = true;
            walk(graph, cond, path, on_path, out, limit)?;
            on_path[w] = false;
        }
        path.pop();
    }
    Ok(())
}

/// Every separating set `E ⊆ U ⊆ Ω ∖ F`, as cut constraints, in the order of
/// the binary counter over the free nodes.
pub fn all_cut_constraints<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser) -> Result<Vec<Constraint<T>>> {
    cond.check_graph(graph)?;
    let free: Vec<usize> = cond.omega().difference(&cond.e().union(cond.f())).iter().collect();
    if free.len() > MAX_FREE_NODES {
        return invalid(format!("{} free nodes is too many to enumerate", free.len()));
    }
    let mut out = Vec::with_capacity(1 << free.len());
    for bits in 0u64..(1u64 << free.len()) {
        let mut u: NodeSet = cond.e().clone();
        for (i, &v) in free.iter().enumerate() {
            if bits >> i & 1 == 1 {
                u.insert(v);
            }
        }
        out.push(Constraint::cut(graph, cond, &u));
    }
    Ok(out)
}
