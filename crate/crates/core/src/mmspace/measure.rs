//! Metric and measure diagnostics on a [`MeasureGraph`]: balls, perimeter,
//! total variation, the coarea identity, doubling and isoperimetric ratios.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::{MeasureGraph, NodeSet};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Heap entry ordered so that `BinaryHeap` pops the smallest key first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MinKey<T> {
    pub dist: T,
    pub hops: usize,
    pub node: usize,
}

impl<T: Real> PartialEq for MinKey<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for MinKey<T> {}
impl<T: Real> PartialOrd for MinKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for MinKey<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.partial_cmp(&self.dist).unwrap_or(Ordering::Equal).then(other.hops.cmp(&self.hops)).then(other.node.cmp(&self.node))
    }
}

/// Shortest-path `ℓ`-distances from a set of sources, restricted to `within`.
pub fn distances_from<T: Real>(graph: &MeasureGraph<T>, sources: &NodeSet, within: Option<&NodeSet>) -> Vec<T> {
    let n = graph.node_count();
    let mut dist = vec![T::infinity(); n];
    let mut heap = BinaryHeap::new();
    for s in sources.iter() {
        if within.is_none_or(|w| w.contains(s)) {
            dist[s] = T::zero();
            heap.push(MinKey { dist: T::zero(), hops: 0, node: s });
        }
    }
    while let Some(MinKey { dist: d, node: v, .. }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in graph.neighbors(v) {
            if within.is_some_and(|s| !s.contains(w)) {
                continue;
            }
            let nd = d + graph.edge(e).length;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(MinKey { dist: nd, hops: 0, node: w });
            }
        }
    }
    dist
}

/// Open ball `{y : d(center, y) < r}` in the graph metric.
pub fn ball<T: Real>(graph: &MeasureGraph<T>, center: usize, r: T) -> Result<NodeSet> {
    if center >= graph.node_count() {
        return invalid(format!("center {center} is not a node"));
    }
    if !(r > T::zero()) {
        return invalid("ball radius must be positive");
    }
    let src = NodeSet::from_ids(graph.node_count(), [center])?;
    let dist = distances_from(graph, &src, None);
    Ok(NodeSet::from_predicate(graph.node_count(), |v| dist[v] < r))
}

/// `P(U, A)`: σ-weight of edges with exactly one endpoint in `U` and at least
/// one endpoint in `A` (`None` means every node).
pub fn perimeter<T: Real>(graph: &MeasureGraph<T>, set: &NodeSet, within: Option<&NodeSet>) -> T {
    graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, e)| set.contains(e.a) != set.contains(e.b) && within.is_none_or(|a| graph.edge_meets(*k, a)))
        .map(|(_, e)| e.cross)
        .sum()
}

fn check_finite<T: Real>(u: &[T]) -> Result<()> {
    match u.iter().position(|x| !x.is_finite()) {
        Some(v) => Err(Error::NonFinite(v)),
        None => Ok(()),
    }
}

/// `‖Du‖(A) = Σ σ(e)|u(x) − u(y)|` over edges meeting `A`.
pub fn total_variation<T: Real>(graph: &MeasureGraph<T>, u: &[T], within: Option<&NodeSet>) -> Result<T> {
    if u.len() != graph.node_count() {
        return invalid("function length does not match the node count");
    }
    check_finite(u)?;
    Ok(graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| within.is_none_or(|a| graph.edge_meets(*k, a)))
        .map(|(_, e)| e.cross * (u[e.a] - u[e.b]).abs())
        .sum())
}

/// Both sides of the coarea formula.
///
/// `lhs` integrates `t ↦ P({u > t}, A)` exactly over the sorted node values
/// (the integrand is piecewise constant between them), `rhs` is
/// [`total_variation`].
pub fn coarea_identity<T: Real>(graph: &MeasureGraph<T>, u: &[T], within: Option<&NodeSet>) -> Result<(T, T)> {
    let rhs = total_variation(graph, u, within)?;

    let mut levels: Vec<T> = u.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    levels.dedup();
    let slot = |x: T| levels.partition_point(|&t| t < x);

    // edge e lies in ∂{u > t} exactly for t ∈ [min, max)
    let mut delta = vec![T::zero(); levels.len() + 1];
    for (k, e) in graph.edges().iter().enumerate() {
        if within.is_some_and(|a| !graph.edge_meets(k, a)) {
            continue;
        }
        let (lo, hi) = if u[e.a] < u[e.b] { (u[e.a], u[e.b]) } else { (u[e.b], u[e.a]) };
        if lo < hi {
            delta[slot(lo)] = delta[slot(lo)] + e.cross;
            delta[slot(hi)] = delta[slot(hi)] - e.cross;
        }
    }
    let mut lhs = T::zero();
    let mut per = T::zero();
    for k in 0..levels.len().saturating_sub(1) {
        per = per + delta[k];
        lhs = lhs + (levels[k + 1] - levels[k]) * per;
    }
    Ok((lhs, rhs))
}

/// Largest `μ(B(x, 2r)) / μ(B(x, r))` over the sampled centers and radii.
pub fn doubling_estimate<T: Real>(graph: &MeasureGraph<T>, centers: &[usize], radii: &[T]) -> Result<T> {
    let mut worst = T::zero();
    for &c in centers {
        if c >= graph.node_count() {
            return invalid(format!("center {c} is not a node"));
        }
        let src = NodeSet::from_ids(graph.node_count(), [c])?;
        let dist = distances_from(graph, &src, None);
        for &r in radii {
            if r < graph.spacing() {
                return Err(Error::BelowResolution { radius: r.as_f64(), resolution: graph.spacing().as_f64() });
            }
            let mut inner = T::zero();
            let mut outer = T::zero();
            for (v, &d) in dist.iter().enumerate() {
                if d < r {
                    inner = inner + graph.node(v).mass;
                }
                if d < r + r {
                    outer = outer + graph.node(v).mass;
                }
            }
            if !(inner > T::zero()) {
                return invalid(format!("ball around {c} of radius {r} has zero measure"));
            }
            worst = worst.max(outer / inner);
        }
    }
    Ok(worst)
}

/// One sample of the relative isoperimetric ratio
/// `min{μ(B∩U), μ(B∖U)} / (r · P(U, λB))`; zero when the numerator vanishes.
pub fn isoperimetric_ratio<T: Real>(graph: &MeasureGraph<T>, center: usize, r: T, set: &NodeSet, lambda: T) -> Result<T> {
    let b = ball(graph, center, r)?;
    let inside = graph.mass_of(&b.intersection(set));
    let outside = graph.mass_of(&b.difference(set));
    let small = inside.min(outside);
    if small <= T::zero() {
        return Ok(T::zero());
    }
    let wide = ball(graph, center, lambda * r)?;
    let per = perimeter(graph, set, Some(&wide));
    Ok(small / (r * per))
}
