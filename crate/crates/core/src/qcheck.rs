//! Metric dilatation and modulus distortion of planar maps.
//!
//! Image moduli are computed on a fresh lattice over the image domain. The
//! condenser is carried over by snapping: an image node belongs to `f(E)` if
//! it is the lattice point nearest to the image of some node of `E`, or if its
//! preimage rounds (strictly within half a source spacing) to a node of `E`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::duality::{duality_product, DualityReport};
use crate::error::{invalid, Error, Result};
use crate::families::{Condenser, ConstraintKind};
use crate::mmspace::{build_masked_grid, MeasureGraph, NodeSet};
use crate::modsolve::{warm_modulus, ModulusProblem, Status, Tolerances};
use crate::presets::CondenserSpec;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields, from = "StrictMapKind")]
pub enum MapKind {
    Identity,
    /// `(x, y) ↦ (a·x, y)`.
    AffineStretch {
        a: f64,
    },
    /// `z ↦ c + (z − c)|z − c|^{s−1}`.
    RadialPower {
        s: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `(x, y) ↦ (x + k·y, y)`.
    Shear {
        k: f64,
    },
}

/// Deserialization mirror so that `identity` rejects stray keys too.
#[derive(Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
enum StrictMapKind {
    Identity {},
    AffineStretch {
        a: f64,
    },
    RadialPower {
        s: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Shear {
        k: f64,
    },
}

impl From<StrictMapKind> for MapKind {
    fn from(m: StrictMapKind) -> Self {
        match m {
            StrictMapKind::Identity {} => MapKind::Identity,
            StrictMapKind::AffineStretch { a } => MapKind::AffineStretch { a },
            StrictMapKind::RadialPower { s, center } => MapKind::RadialPower { s, center },
            StrictMapKind::Shear { k } => MapKind::Shear { k },
        }
    }
}

/// A planar homeomorphism with an exact inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub kind: MapKind,
    #[serde(default)]
    pub inverted: bool,
}

/// Builds a zoo map by name: `identity`, `affine_stretch [a]`,
/// `radial_power [s]` or `[s, cx, cy]`, `shear [k]`.
pub fn map_zoo(name: &str, params: &[f64]) -> Result<GridMap> {
    let arity = |n: &[usize]| {
        if n.contains(&params.len()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("map `{name}` takes {n:?} parameters, got {}", params.len())))
        }
    };
    let kind = match name {
        "identity" => {
            arity(&[0])?;
            MapKind::Identity
        }
        "affine_stretch" => {
            arity(&[1])?;
            MapKind::AffineStretch { a: params[0] }
        }
        "radial_power" => {
            arity(&[1, 3])?;
            let center = if params.len() == 3 { [params[1], params[2]] } else { [0.0; 2] };
            MapKind::RadialPower { s: params[0], center }
        }
        "shear" => {
            arity(&[1])?;
            MapKind::Shear { k: params[0] }
        }
        _ => return invalid(format!("unknown map `{name}`")),
    };
    GridMap::new(kind)
}

impl GridMap {
    pub fn new(kind: MapKind) -> Result<Self> {
        match kind {
            MapKind::AffineStretch { a } if !(a > 0.0 && a.is_finite()) => invalid("stretch factor must be positive"),
            MapKind::RadialPower { s, .. } if !(s > 0.0 && s.is_finite()) => invalid("radial exponent must be positive"),
            MapKind::Shear { k } if !k.is_finite() => invalid("shear must be finite"),
            _ => Ok(GridMap { kind, inverted: false }),
        }
    }

    pub fn inverse(&self) -> Self {
        GridMap { kind: self.kind, inverted: !self.inverted }
    }

    pub fn name(&self) -> String {
        let base = match self.kind {
            MapKind::Identity => "identity".to_string(),
            MapKind::AffineStretch { a } => format!("affine_stretch({a})"),
            MapKind::RadialPower { s, .. } => format!("radial_power({s})"),
            MapKind::Shear { k } => format!("shear({k})"),
        };
        if self.inverted {
            format!("inverse_{base}")
        } else {
            base
        }
    }

    fn apply<T: Real>(&self, p: [T; 2], invert: bool) -> [T; 2] {
        let t = T::lit;
        match self.kind {
            MapKind::Identity => p,
            MapKind::AffineStretch { a } => {
                let a = if invert { t(1.0 / a) } else { t(a) };
                [a * p[0], p[1]]
            }
            MapKind::Shear { k } => {
                let k = if invert { -t(k) } else { t(k) };
                [p[0] + k * p[1], p[1]]
            }
            MapKind::RadialPower { s, center } => {
                let s = if invert { t(1.0 / s) } else { t(s) };
                let c = [t(center[0]), t(center[1])];
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                let r = dx.hypot(dy);
                if r == T::zero() {
                    return p;
                }
                let f = r.powf(s - T::one());
                [c[0] + dx * f, c[1] + dy * f]
            }
        }
    }

    pub fn forward<T: Real>(&self, p: [T; 2]) -> [T; 2] {
        self.apply(p, self.inverted)
    }

    pub fn backward<T: Real>(&self, p: [T; 2]) -> [T; 2] {
        self.apply(p, !self.inverted)
    }
}

fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilatationRow<T> {
    pub node: usize,
    pub x: [T; 2],
    pub r: T,
    /// Largest node distance `≤ r` actually realized on the lattice.
    pub r_used: T,
    pub big_l: T,
    pub small_l: T,
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilatationReport<T> {
    pub rows: Vec<DilatationRow<T>>,
    /// Smallest radius in the report.
    pub radius: T,
    /// Maximum ratio at that radius.
    pub h_est: T,
}

/// `L_f(x,r) / l_f(x,r)` in the Euclidean metric of the node positions, with
/// `L` over the closed ball and `l` over `r ≤ |y − x| ≤ 4r`. The radius is
/// snapped down to the largest realized node distance.
pub fn metric_dilatation<T: Real>(map: &GridMap, graph: &MeasureGraph<T>, samples: &[usize], radii: &[T]) -> Result<DilatationReport<T>> {
    if samples.is_empty() || radii.is_empty() {
        return invalid("need at least one sample and one radius");
    }
    let min_r = T::lit(2.0) * graph.spacing() * (T::one() - T::lit(1e-9));
    let pos = |v: usize| graph.pos(v).ok_or_else(|| Error::InvalidArgument("dilatation needs node positions".into()));
    let points: Vec<[T; 2]> = (0..graph.node_count()).map(pos).collect::<Result<_>>()?;
    let images: Vec<[T; 2]> = points.iter().map(|&p| map.forward(p)).collect();
    let rel = T::lit(1e-12);
    let mut rows = Vec::new();
    for &r in radii {
        if r < min_r {
            return Err(Error::BelowResolution { radius: r.as_f64(), resolution: min_r.as_f64() });
        }
        for &x in samples {
            if x >= points.len() {
                return invalid(format!("sample {x} is not a node"));
            }
            let d: Vec<T> = points.iter().map(|&y| dist(points[x], y)).collect();
            let r_used = d.iter().copied().filter(|&t| t <= r * (T::one() + rel)).fold(T::zero(), T::max);
            let mut big_l = T::zero();
            let mut small_l = T::infinity();
            for y in 0..points.len() {
                let fd = dist(images[x], images[y]);
                if d[y] <= r_used * (T::one() + rel) {
                    big_l = big_l.max(fd);
                }
                if d[y] >= r_used * (T::one() - rel) && d[y] <= T::lit(4.0) * r {
                    small_l = small_l.min(fd);
                }
            }
            if !small_l.is_finite() || !(small_l > T::zero()) {
                return invalid(format!("sample {x} has no nodes outside the ball of radius {r}"));
            }
            rows.push(DilatationRow { node: x, x: points[x], r, r_used, big_l, small_l, ratio: big_l / small_l });
        }
    }
    let radius = radii.iter().copied().fold(T::infinity(), T::min);
    let h_est = rows.iter().filter(|w| w.r == radius).map(|w| w.ratio).fold(T::zero(), T::max);
    Ok(DilatationReport { rows, radius, h_est })
}

/// Lookup from rounded lattice coordinates to node ids.
struct Lattice<T> {
    lo: [T; 2],
    h: T,
    ids: HashMap<(i64, i64), usize>,
}

impl<T: Real> Lattice<T> {
    fn new(graph: &MeasureGraph<T>) -> Result<Self> {
        let (lo, _) = graph.bbox().ok_or_else(|| Error::InvalidArgument("maps need node positions".into()))?;
        let h = graph.spacing();
        let mut lat = Lattice { lo, h, ids: HashMap::new() };
        for v in 0..graph.node_count() {
            let p = graph.pos(v).ok_or_else(|| Error::InvalidArgument("maps need node positions".into()))?;
            let (c, _) = lat.coords(p);
            lat.ids.insert(c, v);
        }
        Ok(lat)
    }

    /// Rounded lattice coordinates and the L∞ offset in units of `h`.
    fn coords(&self, p: [T; 2]) -> ((i64, i64), T) {
        let fx = (p[0] - self.lo[0]) / self.h;
        let fy = (p[1] - self.lo[1]) / self.h;
        let (rx, ry) = (fx.round(), fy.round());
        let off = (fx - rx).abs().max((fy - ry).abs());
        ((rx.to_i64().unwrap_or(i64::MAX), ry.to_i64().unwrap_or(i64::MAX)), off)
    }

    /// Node nearest to `p` among the rounded lattice point and its neighbours.
    fn nearest(&self, graph: &MeasureGraph<T>, p: [T; 2]) -> Option<usize> {
        let ((i, j), _) = self.coords(p);
        if let Some(&v) = self.ids.get(&(i, j)) {
            return Some(v);
        }
        let mut best: Option<(T, usize)> = None;
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(&v) = self.ids.get(&(i + di, j + dj)) {
                    let d = dist(graph.pos(v)?, p);
                    if best.is_none_or(|(bd, bv)| d < bd || (d == bd && v < bv)) {
                        best = Some((d, v));
                    }
                }
            }
        }
        best.map(|(_, v)| v)
    }
}

/// Image grid together with the transported condenser.
#[derive(Debug, Clone)]
pub struct ImageSpace<T> {
    pub graph: MeasureGraph<T>,
    pub condenser: Condenser,
}

fn transport<T: Real>(
    map: &GridMap,
    source: &MeasureGraph<T>,
    src_lat: &Lattice<T>,
    image: &MeasureGraph<T>,
    img_lat: &Lattice<T>,
    set: &NodeSet,
) -> NodeSet {
    let mut out = NodeSet::empty(image.node_count());
    for v in set.iter() {
        if let Some(w) = source.pos(v).and_then(|p| img_lat.nearest(image, map.forward(p))) {
            out.insert(w);
        }
    }
    let strict = T::lit(0.5) - T::lit(1e-9);
    for w in 0..image.node_count() {
        if let Some(p) = image.pos(w) {
            let (c, off) = src_lat.coords(map.backward(p));
            if off < strict && src_lat.ids.get(&c).is_some_and(|&v| set.contains(v)) {
                out.insert(w);
            }
        }
    }
    out
}

/// Builds the image lattice of `source_domain` under `map` at `spacing` and
/// snaps the condenser onto it.
pub fn image_space<T: Real>(
    map: &GridMap,
    source_domain: &dyn Fn([T; 2]) -> bool,
    source: &MeasureGraph<T>,
    cond: &Condenser,
    spacing: T,
) -> Result<ImageSpace<T>> {
    cond.check_graph(source)?;
    let src_lat = Lattice::new(source)?;
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for v in 0..source.node_count() {
        let q = map.forward(source.pos(v).ok_or_else(|| Error::InvalidArgument("maps need node positions".into()))?);
        for k in 0..2 {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    let contains = |y: [T; 2]| source_domain(map.backward(y));
    let image = build_masked_grid(&contains, lo, hi, spacing, None)?;
    let img_lat = Lattice::new(&image)?;
    let omega = if cond.omega().len() == source.node_count() {
        NodeSet::full(image.node_count())
    } else {
        transport(map, source, &src_lat, &image, &img_lat, cond.omega())
    };
    let e = transport(map, source, &src_lat, &image, &img_lat, cond.e()).intersection(&omega);
    let f = transport(map, source, &src_lat, &image, &img_lat, cond.f()).intersection(&omega);
    for (set, name) in [(&e, "f(E)"), (&f, "f(F)")] {
        if set.is_empty() {
            return Err(Error::SnapOverlap(format!("{name} is empty on the image grid")));
        }
    }
    if !e.is_disjoint(&f) {
        return Err(Error::SnapOverlap("f(E) meets f(F)".into()));
    }
    let condenser = Condenser::new(e, f, omega).map_err(|err| Error::SnapOverlap(err.to_string()))?;
    Ok(ImageSpace { graph: image, condenser })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distortion<T> {
    pub exponent: T,
    pub mod_source: T,
    pub mod_image: T,
    /// `mod_source / mod_image`.
    pub ratio: T,
    pub h_source: T,
    pub h_target: T,
}

fn converged<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, kind: ConstraintKind, p: T, tol: Tolerances<T>) -> Result<T> {
    let res = warm_modulus(&ModulusProblem::new(graph, cond, kind, p)?.with_tolerances(tol)?)?;
    match res.status {
        Status::IterationCap => Err(Error::NotConverged("distortion modulus".into())),
        _ => Ok(res.value),
    }
}

fn distortion<T: Real>(
    source: &MeasureGraph<T>,
    cond: &Condenser,
    image: &ImageSpace<T>,
    kind: ConstraintKind,
    exponent: T,
    tol: Tolerances<T>,
) -> Result<Distortion<T>> {
    let mod_source = converged(source, cond, kind, exponent, tol)?;
    let mod_image = converged(&image.graph, &image.condenser, kind, exponent, tol)?;
    Ok(Distortion {
        exponent,
        mod_source,
        mod_image,
        ratio: mod_source / mod_image,
        h_source: source.spacing(),
        h_target: image.graph.spacing(),
    })
}

fn conjugate<T: Real>(p: T) -> Result<T> {
    if !(p > T::one()) || !p.is_finite() {
        return invalid("exponent p must satisfy 1 < p < ∞");
    }
    Ok(p / (p - T::one()))
}

/// `Mod_p(Γ) / Mod_p(fΓ)` for the connecting curve family.
pub fn curve_distortion<T: Real>(
    map: &GridMap,
    source_domain: &dyn Fn([T; 2]) -> bool,
    source: &MeasureGraph<T>,
    cond: &Condenser,
    p: T,
    spacing: T,
    tol: Tolerances<T>,
) -> Result<Distortion<T>> {
    conjugate(p)?;
    let image = image_space(map, source_domain, source, cond, spacing)?;
    distortion(source, cond, &image, ConstraintKind::Curve, p, tol)
}

/// `Mod_q(L) / Mod_q(fL)` for the separating cut family, `q = p/(p−1)`.
pub fn surface_distortion<T: Real>(
    map: &GridMap,
    source_domain: &dyn Fn([T; 2]) -> bool,
    source: &MeasureGraph<T>,
    cond: &Condenser,
    p: T,
    spacing: T,
    tol: Tolerances<T>,
) -> Result<Distortion<T>> {
    let q = conjugate(p)?;
    let image = image_space(map, source_domain, source, cond, spacing)?;
    distortion(source, cond, &image, ConstraintKind::Cut, q, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelRow<T> {
    pub config: String,
    pub curve: Distortion<T>,
    pub surface: Distortion<T>,
    /// `Mod_q(fL) / Mod_q(L)`.
    pub c0: T,
    /// `max(r, 1/r)` of the curve ratio.
    pub k: T,
    pub image_duality: DualityReport<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QcPanel<T> {
    pub map: String,
    pub p: T,
    pub h_source: T,
    pub h_target: T,
    pub rows: Vec<PanelRow<T>>,
    pub c0_est: T,
    pub k_est: T,
    pub dilatation: DilatationReport<T>,
}

impl<T: Real> QcPanel<T> {
    pub fn h_est(&self) -> T {
        self.dilatation.h_est
    }
}

/// Everything a panel needs besides the map.
pub struct PanelSetup<'a, T> {
    pub source_domain: &'a dyn Fn([T; 2]) -> bool,
    pub source: &'a MeasureGraph<T>,
    pub configs: &'a [CondenserSpec],
    pub p: T,
    pub target_spacing: T,
    /// Nodes and radii for the dilatation estimate.
    pub samples: &'a [usize],
    pub radii: &'a [T],
    pub tol: Tolerances<T>,
}

/// Surface distortion, curve distortion and metric dilatation of one map over
/// several condenser configurations, with the image-side duality product of
/// each configuration.
pub fn qc_panel<T: Real>(map: &GridMap, setup: &PanelSetup<'_, T>) -> Result<QcPanel<T>> {
    if setup.configs.len() < 3 {
        return invalid("a panel needs at least three condenser configurations");
    }
    let q = conjugate(setup.p)?;
    let mut rows = Vec::with_capacity(setup.configs.len());
    for spec in setup.configs {
        let cond = spec.resolve(setup.source)?;
        let image = image_space(map, setup.source_domain, setup.source, &cond, setup.target_spacing)?;
        let curve = distortion(setup.source, &cond, &image, ConstraintKind::Curve, setup.p, setup.tol)?;
        let surface = distortion(setup.source, &cond, &image, ConstraintKind::Cut, q, setup.tol)?;
        let image_duality = duality_product(&image.graph, &image.condenser, setup.p, setup.tol)?;
        rows.push(PanelRow {
            config: spec.name(),
            c0: surface.mod_image / surface.mod_source,
            k: curve.ratio.max(T::one() / curve.ratio),
            curve,
            surface,
            image_duality,
        });
    }
    let dilatation = metric_dilatation(map, setup.source, setup.samples, setup.radii)?;
    Ok(QcPanel {
        map: map.name(),
        p: setup.p,
        h_source: setup.source.spacing(),
        h_target: setup.target_spacing,
        c0_est: rows.iter().map(|r| r.c0).fold(T::zero(), T::max),
        k_est: rows.iter().map(|r| r.k).fold(T::zero(), T::max),
        rows,
        dilatation,
    })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// sample is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("rank correlation needs two samples of equal length ≥ 2");
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Rank correlation of surface distortion against metric dilatation over a
/// zoo of panels.
pub fn zoo_correlation<T: Real>(panels: &[QcPanel<T>]) -> Result<f64> {
    let c0: Vec<f64> = panels.iter().map(|p| p.c0_est.as_f64()).collect();
    let h: Vec<f64> = panels.iter().map(|p| p.h_est().as_f64()).collect();
    spearman(&c0, &h)
}

/// Sample nodes on a sub-lattice (every `stride` nodes) that keep a margin of
/// `margin` from the bounding box and, for radial maps, at least
/// `min_center` from the centre.
pub fn interior_samples<T: Real>(map: &GridMap, graph: &MeasureGraph<T>, margin: T, min_center: T, stride: usize) -> Vec<usize> {
    let Some((lo, hi)) = graph.bbox() else { return Vec::new() };
    let h = graph.spacing();
    let stride = T::of_usize(stride.max(1));
    let center = match map.kind {
        MapKind::RadialPower { center, .. } => Some([T::lit(center[0]), T::lit(center[1])]),
        _ => None,
    };
    (0..graph.node_count())
        .filter(|&v| {
            let Some(p) = graph.pos(v) else { return false };
            let on_stride = (0..2).all(|k| {
                let i = ((p[k] - lo[k]) / h).round();
                (i % stride) == T::zero()
            });
            let inside = (0..2).all(|k| p[k] - lo[k] >= margin && hi[k] - p[k] >= margin);
            let away = center.is_none_or(|c| dist(p, c) >= min_center);
            on_stride && inside && away
        })
        .collect()
}
