//! Condensers and the separation oracles for their curve and cut families.
//!
//! The curve family of a condenser `(E, F, Ω)` is the set of simple paths in
//! the subgraph induced by `Ω` that start in `E` and end in `F`; a density
//! `ρ` is admissible when every such path has `Σ ρ(e) ℓ(e) ≥ 1`. The cut
//! family consists of node sets `U` with `E ⊆ U ⊆ Ω ∖ F`; admissibility asks
//! `Σ_{e ∈ ∂U} ρ(e) σ(e) ≥ 1`, the sum running over edges inside `Ω`.

mod enumerate;
mod flow;

use std::collections::BinaryHeap;

use serde::Serialize;

pub use enumerate::{all_curve_constraints, all_cut_constraints};

use crate::error::{Error, Result};
use crate::mmspace::{MeasureGraph, MinKey, NodeSet};
use crate::scalar::Real;
use flow::FlowNetwork;

/// The triple `(E, F, Ω)` over one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condenser {
    e: NodeSet,
    f: NodeSet,
    omega: NodeSet,
}

impl Condenser {
    pub fn new(e: NodeSet, f: NodeSet, omega: NodeSet) -> Result<Self> {
        let n = omega.universe();
        if e.universe() != n || f.universe() != n {
            return Err(Error::InvalidCondenser("sets live on different graphs".into()));
        }
        if !e.is_disjoint(&f) {
            return Err(Error::InvalidCondenser("E and F intersect".into()));
        }
        if !e.is_subset(&omega) || !f.is_subset(&omega) {
            return Err(Error::InvalidCondenser("E and F must lie inside Ω".into()));
        }
        if e.is_empty() {
            return Err(Error::InvalidCondenser("E ∩ Ω is empty".into()));
        }
        if f.is_empty() {
            return Err(Error::InvalidCondenser("F ∩ Ω is empty".into()));
        }
        Ok(Condenser { e, f, omega })
    }

    /// Condenser with `Ω` equal to every node.
    pub fn whole(e: NodeSet, f: NodeSet) -> Result<Self> {
        let n = e.universe();
        Self::new(e, f, NodeSet::full(n))
    }

    pub fn e(&self) -> &NodeSet {
        &self.e
    }

    pub fn f(&self) -> &NodeSet {
        &self.f
    }

    pub fn omega(&self) -> &NodeSet {
        &self.omega
    }

    /// The condenser with the roles of `E` and `F` exchanged.
    pub fn swapped(&self) -> Self {
        Condenser { e: self.f.clone(), f: self.e.clone(), omega: self.omega.clone() }
    }

    pub fn check_graph<T: Real>(&self, graph: &MeasureGraph<T>) -> Result<()> {
        if self.omega.universe() != graph.node_count() {
            return Err(Error::InvalidCondenser("condenser does not match the graph".into()));
        }
        Ok(())
    }

    /// Whether `u` is a valid separating set: `E ⊆ U ⊆ Ω ∖ F`.
    pub fn separates(&self, u: &NodeSet) -> bool {
        self.e.is_subset(u) && u.is_disjoint(&self.f) && u.is_subset(&self.omega)
    }
}

/// Nonnegative per-edge density.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityField<T> {
    values: Vec<T>,
}

impl<T: Real> DensityField<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(e) = values.iter().position(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("density on edge {e} is negative or non-finite")));
        }
        Ok(DensityField { values })
    }

    pub fn constant(graph: &MeasureGraph<T>, c: T) -> Self {
        DensityField { values: vec![c; graph.edge_count()] }
    }

    pub(crate) fn from_raw(values: Vec<T>) -> Self {
        DensityField { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: T) -> Self {
        DensityField { values: self.values.iter().map(|&x| x * t).collect() }
    }

    /// `Σ m(e) ρ(e)^p`.
    pub fn energy(&self, graph: &MeasureGraph<T>, p: T) -> T {
        graph.edges().iter().zip(&self.values).map(|(e, &r)| e.energy * r.powf(p)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Curve,
    Cut,
}

/// One measure of a family: a weighted edge support.
///
/// For curves `nodes` is the path in order and the weights are `ℓ`; for cuts
/// `nodes` lists `U` (sorted) and the weights are `σ` on `∂U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint<T> {
    pub kind: ConstraintKind,
    pub edges: Vec<usize>,
    pub weights: Vec<T>,
    pub nodes: Vec<usize>,
}

impl<T: Real> Constraint<T> {
    /// `Σ w(e) ρ(e)` over the support.
    pub fn eval(&self, rho: &[T]) -> T {
        self.edges.iter().zip(&self.weights).map(|(&e, &w)| w * rho[e]).sum()
    }

    /// Builds the cut constraint of `U` (edges of `∂U` inside `Ω`).
    pub fn cut(graph: &MeasureGraph<T>, cond: &Condenser, u: &NodeSet) -> Self {
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (k, e) in graph.edges().iter().enumerate() {
            if graph.edge_inside(k, cond.omega()) && u.contains(e.a) != u.contains(e.b) {
                edges.push(k);
                weights.push(e.cross);
            }
        }
        Constraint { kind: ConstraintKind::Cut, edges, weights, nodes: u.iter().collect() }
    }

    /// Builds the curve constraint of a node path.
    pub fn curve(graph: &MeasureGraph<T>, path: &[usize]) -> Result<Self> {
        let mut edges = Vec::with_capacity(path.len().saturating_sub(1));
        let mut weights = Vec::with_capacity(edges.capacity());
        for w in path.windows(2) {
            let &(_, e) = graph
                .neighbors(w[0])
                .iter()
                .find(|(v, _)| *v == w[1])
                .ok_or_else(|| Error::InvalidArgument(format!("{} and {} are not adjacent", w[0], w[1])))?;
            edges.push(e);
            weights.push(graph.edge(e).length);
        }
        Ok(Constraint { kind: ConstraintKind::Curve, edges, weights, nodes: path.to_vec() })
    }
}

struct PathTree<T> {
    dist: Vec<T>,
    pred: Vec<usize>,
    /// `F` nodes in the order they were settled.
    reached: Vec<usize>,
}

/// Multi-source Dijkstra from `E` inside `Ω` that does not expand `F` nodes.
/// Stops after `stop` nodes of `F` are settled or once the distance reaches
/// `cutoff`. Ties are broken by hop count, then node id.
fn path_tree<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &[T], stop: usize, cutoff: T) -> PathTree<T> {
    let n = graph.node_count();
    let omega = cond.omega();
    let mut dist = vec![T::infinity(); n];
    let mut hops = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut reached = Vec::new();
    let mut heap = BinaryHeap::new();
    for s in cond.e().iter() {
        dist[s] = T::zero();
        hops[s] = 0;
        heap.push(MinKey { dist: T::zero(), hops: 0, node: s });
    }
    while let Some(MinKey { dist: d, hops: k, node: v }) = heap.pop() {
        if done[v] || d > dist[v] || (d == dist[v] && k > hops[v]) {
            continue;
        }
        if d >= cutoff && !reached.is_empty() {
            break;
        }
        done[v] = true;
        if cond.f().contains(v) {
            reached.push(v);
            if reached.len() >= stop {
                break;
            }
            continue;
        }
        for &(w, e) in graph.neighbors(v) {
            if !omega.contains(w) || done[w] {
                continue;
            }
            let nd = d + rho[e] * graph.edge(e).length;
            let nk = k + 1;
            let better = nd < dist[w] || (nd == dist[w] && (nk < hops[w] || (nk == hops[w] && v < pred[w])));
            if better {
                let push = nd < dist[w] || nk < hops[w];
                dist[w] = nd;
                hops[w] = nk;
                pred[w] = v;
                if push {
                    heap.push(MinKey { dist: nd, hops: nk, node: w });
                }
            }
        }
    }
    PathTree { dist, pred, reached }
}

impl<T: Real> PathTree<T> {
    fn path_to(&self, t: usize) -> Vec<usize> {
        let mut path = vec![t];
        let mut v = t;
        while self.pred[v] != usize::MAX {
            v = self.pred[v];
            path.push(v);
        }
        path.reverse();
        path
    }
}

/// Shortest `E → F` path inside `Ω` under edge costs `ρ(e) ℓ(e)`.
///
/// Ties are broken by hop count, then node id. Returns
/// [`Error::EmptyFamily`] when no path exists.
pub fn curve_oracle<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &DensityField<T>) -> Result<(Constraint<T>, T)> {
    cond.check_graph(graph)?;
    check_density(graph, rho)?;
    let tree = path_tree(graph, cond, &rho.values, 1, T::infinity());
    let &t = tree.reached.first().ok_or(Error::EmptyFamily)?;
    let c = Constraint::curve(graph, &tree.path_to(t))?;
    let value = c.eval(&rho.values);
    Ok((c, value))
}

/// Shortest-path-tree paths to every `F` node whose `ρ`-length is below
/// `threshold`, shortest first, at most `limit` of them. The first entry is
/// always the [`curve_oracle`] path, even when it is not below `threshold`.
pub fn curve_harvest<T: Real>(
    graph: &MeasureGraph<T>,
    cond: &Condenser,
    rho: &DensityField<T>,
    threshold: T,
    limit: usize,
) -> Result<Vec<(Constraint<T>, T)>> {
    cond.check_graph(graph)?;
    check_density(graph, rho)?;
    let tree = path_tree(graph, cond, &rho.values, limit.max(1), threshold);
    if tree.reached.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut out = Vec::with_capacity(tree.reached.len());
    for (k, &t) in tree.reached.iter().enumerate() {
        if k > 0 && tree.dist[t] >= threshold {
            break;
        }
        let c = Constraint::curve(graph, &tree.path_to(t))?;
        let value = c.eval(&rho.values);
        out.push((c, value));
    }
    Ok(out)
}

/// Minimum cut separating `E` from `F` in the subgraph induced by `Ω`, with
/// capacities `ρ(e) σ(e)`. The returned `U` is the source side of the
/// residual graph, i.e. the cut closest to `E`.
pub fn cut_oracle<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &DensityField<T>) -> Result<(Constraint<T>, T)> {
    let mut cuts = min_cuts(graph, cond, rho, false)?;
    Ok(cuts.swap_remove(0))
}

/// The minimum cuts closest to `E` and closest to `F` (one entry when they
/// coincide).
pub fn cut_harvest<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &DensityField<T>) -> Result<Vec<(Constraint<T>, T)>> {
    min_cuts(graph, cond, rho, true)
}

fn min_cuts<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &DensityField<T>, both: bool) -> Result<Vec<(Constraint<T>, T)>> {
    cond.check_graph(graph)?;
    check_density(graph, rho)?;
    let n = graph.node_count();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2);
    let mut max_cap = T::zero();
    for (k, e) in graph.edges().iter().enumerate() {
        if graph.edge_inside(k, cond.omega()) {
            let c = rho.values[k] * e.cross;
            max_cap = max_cap.max(c);
            net.add_edge(e.a, e.b, c, c);
        }
    }
    for v in cond.e().iter() {
        net.add_edge(s, v, T::infinity(), T::zero());
    }
    for v in cond.f().iter() {
        net.add_edge(v, t, T::infinity(), T::zero());
    }
    let eps = max_cap * T::epsilon() * T::lit(1024.0);
    net.max_flow(s, t, eps);
    let build = |u: NodeSet| {
        debug_assert!(cond.separates(&u));
        let c = Constraint::cut(graph, cond, &u);
        let value = c.eval(&rho.values);
        (c, value)
    };
    let side = net.source_side(s, eps);
    let mut out = vec![build(NodeSet::from_predicate(n, |v| side[v] && cond.omega().contains(v)))];
    if both {
        let sink = net.sink_side(t, eps);
        let far = build(NodeSet::from_predicate(n, |v| !sink[v] && cond.omega().contains(v)));
        if far.0.nodes != out[0].0.nodes {
            out.push(far);
        }
    }
    Ok(out)
}

/// Feasibility gap `max(0, 1 − min_family ∫ρ dλ)`.
pub fn residual<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, rho: &DensityField<T>, kind: ConstraintKind) -> Result<T> {
    let (_, v) = match kind {
        ConstraintKind::Curve => curve_oracle(graph, cond, rho)?,
        ConstraintKind::Cut => cut_oracle(graph, cond, rho)?,
    };
    Ok((T::one() - v).max(T::zero()))
}

fn check_density<T: Real>(graph: &MeasureGraph<T>, rho: &DensityField<T>) -> Result<()> {
    if rho.len() != graph.edge_count() {
        return Err(Error::InvalidArgument("density length does not match the edge count".into()));
    }
    Ok(())
}
