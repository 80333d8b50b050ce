use crate::error::{Error, Result};
use crate::scalar::Real;

/// A node of the discrete space: optional planar position and its mass μ(v).
#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub pos: Option<[T; 2]>,
    pub mass: T,
}

/// An undirected edge with its three calibrated weights.
///
/// `length` realizes the metric, `cross` is the codimension-one weight used by
/// perimeters and cuts, `energy` is the measure used in `∫ρ^p dμ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    pub length: T,
    pub cross: T,
    pub energy: T,
}

impl<T> Edge<T> {
    #[inline]
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }
}

/// Weighted graph modelling a metric measure space. Immutable once built.
#[derive(Debug, Clone)]
pub struct MeasureGraph<T> {
    nodes: Vec<Node<T>>,
    edges: Vec<Edge<T>>,
    spacing: T,
    adj_start: Vec<usize>,
    adj: Vec<(usize, usize)>,
}

impl<T: Real> MeasureGraph<T> {
    /// Validates the invariants (connected, simple, positive weights) and
    /// builds the adjacency index.
    pub fn new(nodes: Vec<Node<T>>, edges: Vec<Edge<T>>, spacing: T) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidGraph("empty node set".into()));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGraph("spacing must be positive".into()));
        }
        let mut total = T::zero();
        for (i, v) in nodes.iter().enumerate() {
            if !(v.mass >= T::zero()) || !v.mass.is_finite() {
                return Err(Error::InvalidGraph(format!("node {i} has invalid mass")));
            }
            total = total + v.mass;
        }
        if !(total > T::zero()) {
            return Err(Error::InvalidGraph("total mass must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (k, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::InvalidGraph(format!("edge {k} references a missing node")));
            }
            if e.a == e.b {
                return Err(Error::InvalidGraph(format!("edge {k} is a self-loop")));
            }
            for w in [e.length, e.cross, e.energy] {
                if !(w > T::zero()) || !w.is_finite() {
                    return Err(Error::InvalidGraph(format!("edge {k} has a nonpositive weight")));
                }
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::InvalidGraph(format!("edge {k} duplicates a node pair")));
            }
        }

        let mut deg = vec![0usize; n + 1];
        for e in &edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        let mut adj_start = vec![0usize; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + deg[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0usize, 0usize); adj_start[n]];
        for (k, e) in edges.iter().enumerate() {
            adj[fill[e.a]] = (e.b, k);
            fill[e.a] += 1;
            adj[fill[e.b]] = (e.a, k);
            fill[e.b] += 1;
        }
        // neighbor lists sorted by node id so traversal order is canonical
        for i in 0..n {
            adj[adj_start[i]..adj_start[i + 1]].sort_unstable();
        }

        let g = MeasureGraph { nodes, edges, spacing, adj_start, adj };
        let comps = g.components(&NodeSet::full(n));
        if comps.iter().any(|&c| c != 0) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn node(&self, v: usize) -> &Node<T> {
        &self.nodes[v]
    }

    pub fn edge(&self, e: usize) -> &Edge<T> {
        &self.edges[e]
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn pos(&self, v: usize) -> Option<[T; 2]> {
        self.nodes[v].pos
    }

    /// `(neighbor, edge index)` pairs of `v`, ordered by neighbor id.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.adj_start[v]..self.adj_start[v + 1]]
    }

    pub fn total_mass(&self) -> T {
        self.nodes.iter().map(|v| v.mass).sum()
    }

    pub fn mass_of(&self, set: &NodeSet) -> T {
        set.iter().map(|v| self.nodes[v].mass).sum()
    }

    /// Axis-aligned bounding box of node positions, `None` when positions are missing.
    pub fn bbox(&self) -> Option<([T; 2], [T; 2])> {
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for v in &self.nodes {
            let p = v.pos?;
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }

    /// Component label per node of the subgraph induced by `within`, numbered
    /// in order of smallest member id. Nodes outside get `usize::MAX`.
    pub fn components(&self, within: &NodeSet) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if !within.contains(s) || label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &(w, _) in self.neighbors(v) {
                    if within.contains(w) && label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Whether both endpoints of edge `e` lie in `set`.
    #[inline]
    pub fn edge_inside(&self, e: usize, set: &NodeSet) -> bool {
        let ed = &self.edges[e];
        set.contains(ed.a) && set.contains(ed.b)
    }

    /// Edges meeting `set` (at least one endpoint inside).
    #[inline]
    pub fn edge_meets(&self, e: usize, set: &NodeSet) -> bool {
        let ed = &self.edges[e];
        set.contains(ed.a) || set.contains(ed.b)
    }
}

/// Membership mask over the nodes of one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    mask: Vec<bool>,
}

impl NodeSet {
    pub fn empty(n: usize) -> Self {
        NodeSet { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        NodeSet { mask: vec![true; n] }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        NodeSet { mask }
    }

    pub fn from_ids(n: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = NodeSet::empty(n);
        for v in ids {
            if v >= n {
                return Err(Error::InvalidArgument(format!("node id {v} out of range")));
            }
            s.mask[v] = true;
        }
        Ok(s)
    }

    pub fn from_predicate(n: usize, f: impl FnMut(usize) -> bool) -> Self {
        NodeSet { mask: (0..n).map(f).collect() }
    }

    /// Size of the ambient node set.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn insert(&mut self, v: usize) {
        self.mask[v] = true;
    }

    pub fn remove(&mut self, v: usize) {
        self.mask[v] = false;
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn complement(&self) -> Self {
        NodeSet { mask: self.mask.iter().map(|b| !b).collect() }
    }

    pub fn union(&self, other: &NodeSet) -> Self {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &NodeSet) -> Self {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &NodeSet) -> Self {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !(a && b))
    }

    fn zip(&self, other: &NodeSet, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.mask.len(), other.mask.len(), "node sets over different graphs");
        NodeSet { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| f(a, b)).collect() }
    }
}
