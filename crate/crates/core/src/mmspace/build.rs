//! Grid discretizations of planar domains.
//!
//! Every node carries the area of its Voronoi cell inside the domain, every
//! edge carries `ℓ = h` and the in-domain part of its dual cell: `m` is the
//! dual cell area (`h²` in the bulk) and `σ` the dual segment length (`h` in
//! the bulk). Edges running along a straight boundary therefore get half
//! weight, which is what makes rectangle moduli match their closed forms at
//! every spacing.

use serde::{Deserialize, Serialize};

use super::graph::{Edge, MeasureGraph, Node, NodeSet};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Subsamples per axis when estimating covered cell fractions.
const SUBSAMPLES: usize = 8;

/// Planar model domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain<T> {
    Rectangle { origin: [T; 2], width: T, height: T },
    Annulus { center: [T; 2], inner: T, outer: T },
}

impl<T: Real> Domain<T> {
    pub fn rectangle(width: T, height: T) -> Self {
        Domain::Rectangle { origin: [T::zero(); 2], width, height }
    }

    pub fn annulus(inner: T, outer: T) -> Self {
        Domain::Annulus { center: [T::zero(); 2], inner, outer }
    }

    /// Closed-set membership with a small relative slack.
    pub fn contains(&self, p: [T; 2]) -> bool {
        let slack = T::lit(1e-9);
        match *self {
            Domain::Rectangle { origin, width, height } => {
                let tx = slack * width.max(T::one());
                let ty = slack * height.max(T::one());
                p[0] >= origin[0] - tx && p[0] <= origin[0] + width + tx && p[1] >= origin[1] - ty && p[1] <= origin[1] + height + ty
            }
            Domain::Annulus { center, inner, outer } => {
                let r = (p[0] - center[0]).hypot(p[1] - center[1]);
                let t = slack * outer;
                r >= inner - t && r <= outer + t
            }
        }
    }

    pub fn bbox(&self) -> ([T; 2], [T; 2]) {
        match *self {
            Domain::Rectangle { origin, width, height } => (origin, [origin[0] + width, origin[1] + height]),
            Domain::Annulus { center, outer, .. } => ([center[0] - outer, center[1] - outer], [center[0] + outer, center[1] + outer]),
        }
    }

    /// Discretizes the domain at the given spacing.
    pub fn discretize(&self, spacing: T, weight: Option<&dyn Fn([T; 2]) -> T>) -> Result<MeasureGraph<T>> {
        match *self {
            Domain::Rectangle { origin, width, height } => build_rect_grid(origin, width, height, spacing, weight),
            Domain::Annulus { inner, outer, .. } => {
                check_annulus(inner, outer, spacing)?;
                let (lo, hi) = self.bbox();
                build_masked_grid(&|p| self.contains(p), lo, hi, spacing, weight)
            }
        }
    }
}

/// Axis-aligned 4-neighbour grid on `[0,width]×[0,height]`.
pub fn build_grid<T: Real>(width: T, height: T, spacing: T, node_weight: Option<&dyn Fn([T; 2]) -> T>) -> Result<MeasureGraph<T>> {
    build_rect_grid([T::zero(); 2], width, height, spacing, node_weight)
}

pub fn build_rect_grid<T: Real>(
    origin: [T; 2],
    width: T,
    height: T,
    spacing: T,
    node_weight: Option<&dyn Fn([T; 2]) -> T>,
) -> Result<MeasureGraph<T>> {
    if !(width > T::zero()) || !(height > T::zero()) || !(spacing > T::zero()) {
        return invalid("grid dimensions and spacing must be positive");
    }
    if spacing >= width.min(height) {
        return invalid("spacing must be smaller than both side lengths");
    }
    let nx = cells(width, spacing)?;
    let ny = cells(height, spacing)?;
    let h = spacing;
    let half = T::lit(0.5);
    let frac = |i: usize, n: usize| if i == 0 || i == n { half } else { T::one() };
    let weight = |p: [T; 2]| node_weight.map_or(T::one(), |w| w(p));
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let at = |i: usize, j: usize| [origin[0] + T::of_usize(i) * h, origin[1] + T::of_usize(j) * h];

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let p = at(i, j);
            nodes.push(Node { pos: Some(p), mass: h * h * frac(i, nx) * frac(j, ny) * weight(p) });
        }
    }
    let mut edges = Vec::with_capacity(nx * (ny + 1) + ny * (nx + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let p = at(i, j);
            if i < nx {
                let w = weight([p[0] + half * h, p[1]]);
                let f = frac(j, ny);
                edges.push(Edge { a: id(i, j), b: id(i + 1, j), length: h, cross: h * f * w, energy: h * h * f * w });
            }
            if j < ny {
                let w = weight([p[0], p[1] + half * h]);
                let f = frac(i, nx);
                edges.push(Edge { a: id(i, j), b: id(i, j + 1), length: h, cross: h * f * w, energy: h * h * f * w });
            }
        }
    }
    MeasureGraph::new(nodes, edges, h)
}

fn cells<T: Real>(extent: T, h: T) -> Result<usize> {
    let n = (extent / h).round();
    if (n * h - extent).abs() > T::lit(1e-9) * extent.max(T::one()) {
        return invalid(format!("spacing {h} does not divide extent {extent}"));
    }
    n.to_usize().ok_or_else(|| Error::InvalidArgument("grid too large".into()))
}

/// Ring `inner ≤ |x| ≤ outer` centred at the origin.
pub fn build_annulus_grid<T: Real>(inner: T, outer: T, spacing: T) -> Result<MeasureGraph<T>> {
    Domain::annulus(inner, outer).discretize(spacing, None)
}

fn check_annulus<T: Real>(inner: T, outer: T, spacing: T) -> Result<()> {
    if !(inner > T::zero()) || !(outer > inner) {
        return invalid("annulus needs 0 < inner < outer");
    }
    if !(spacing > T::zero()) || !(spacing < (outer - inner) / T::lit(4.0)) {
        return invalid("annulus spacing must be below a quarter of the ring width");
    }
    Ok(())
}

/// Lattice with origin `lo` restricted to the points accepted by `contains`.
///
/// Node masses are the covered fractions of the node cells; an edge takes the
/// covered fraction of its dual segment for both `σ` and `m`, keeping
/// `m = σℓ`. Fractions are estimated by midpoint subsampling. Only the largest connected component is
/// kept (ties go to the component holding the smallest id).
pub fn build_masked_grid<T: Real>(
    contains: &dyn Fn([T; 2]) -> bool,
    lo: [T; 2],
    hi: [T; 2],
    spacing: T,
    node_weight: Option<&dyn Fn([T; 2]) -> T>,
) -> Result<MeasureGraph<T>> {
    let h = spacing;
    if !(h > T::zero()) {
        return invalid("spacing must be positive");
    }
    let span = |k: usize| ((hi[k] - lo[k]) / h + T::lit(1e-9)).floor().to_usize();
    let (nx, ny) = match (span(0), span(1)) {
        (Some(a), Some(b)) => (a, b),
        _ => return invalid("degenerate bounding box"),
    };
    let at = |i: usize, j: usize| [lo[0] + T::of_usize(i) * h, lo[1] + T::of_usize(j) * h];
    let weight = |p: [T; 2]| node_weight.map_or(T::one(), |w| w(p));
    let half = T::lit(0.5);
    let ns = T::of_usize(SUBSAMPLES);
    let sub = |k: usize| (T::of_usize(k) + half) / ns;

    // fraction of the axis-aligned box [c - dx/2, c + dx/2] × [c - dy/2, c + dy/2] inside
    let box_frac = |c: [T; 2], dx: T, dy: T| {
        let mut hit = 0usize;
        let mut tot = 0usize;
        let (kx, ky) = (if dx > T::zero() { SUBSAMPLES } else { 1 }, if dy > T::zero() { SUBSAMPLES } else { 1 });
        for a in 0..kx {
            for b in 0..ky {
                let ox = if kx == 1 { T::zero() } else { (sub(a) - half) * dx };
                let oy = if ky == 1 { T::zero() } else { (sub(b) - half) * dy };
                tot += 1;
                if contains([c[0] + ox, c[1] + oy]) {
                    hit += 1;
                }
            }
        }
        // keep weights strictly positive for retained cells
        T::of_usize(hit.max(1)) / T::of_usize(tot)
    };

    let mut index = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = at(i, j);
            if contains(p) {
                index[j * (nx + 1) + i] = nodes.len();
                nodes.push(Node { pos: Some(p), mass: h * h * box_frac(p, h, h) * weight(p) });
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::InvalidGraph("no lattice point lies inside the domain".into()));
    }
    let mut edges = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let a = index[j * (nx + 1) + i];
            if a == usize::MAX {
                continue;
            }
            let p = at(i, j);
            if i < nx && index[j * (nx + 1) + i + 1] != usize::MAX {
                let mid = [p[0] + half * h, p[1]];
                let w = weight(mid);
                edges.push(Edge {
                    a,
                    b: index[j * (nx + 1) + i + 1],
                    length: h,
                    cross: h * box_frac(mid, T::zero(), h) * w,
                    energy: h * h * box_frac(mid, T::zero(), h) * w,
                });
            }
            if j < ny && index[(j + 1) * (nx + 1) + i] != usize::MAX {
                let mid = [p[0], p[1] + half * h];
                let w = weight(mid);
                edges.push(Edge {
                    a,
                    b: index[(j + 1) * (nx + 1) + i],
                    length: h,
                    cross: h * box_frac(mid, h, T::zero()) * w,
                    energy: h * h * box_frac(mid, h, T::zero()) * w,
                });
            }
        }
    }
    largest_component(nodes, edges, h)
}

fn largest_component<T: Real>(nodes: Vec<Node<T>>, edges: Vec<Edge<T>>, h: T) -> Result<MeasureGraph<T>> {
    let n = nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &edges {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut size = vec![0usize; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        size[r] += 1;
    }
    let best = (0..n).max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a))).unwrap_or(0);
    let keep = NodeSet::from_predicate(n, |v| find(&mut parent, v) == best);
    if keep.len() == n {
        return MeasureGraph::new(nodes, edges, h);
    }
    let mut remap = vec![usize::MAX; n];
    let mut kept_nodes = Vec::with_capacity(keep.len());
    for v in keep.iter() {
        remap[v] = kept_nodes.len();
        kept_nodes.push(nodes[v].clone());
    }
    let kept_edges = edges.into_iter().filter(|e| keep.contains(e.a)).map(|e| Edge { a: remap[e.a], b: remap[e.b], ..e }).collect();
    MeasureGraph::new(kept_nodes, kept_edges, h)
}
