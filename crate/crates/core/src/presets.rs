//! Named domains and condenser specifications resolved against a graph.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::families::Condenser;
use crate::mmspace::{Domain, MeasureGraph, NodeSet};
use crate::scalar::Real;

/// Model domains that can be rebuilt at any spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainPreset {
    Rectangle {
        width: f64,
        height: f64,
        #[serde(default)]
        origin: [f64; 2],
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// Rectangle with the power weight `|x − center|^alpha` on every measure.
    WeightedGrid {
        width: f64,
        height: f64,
        alpha: f64,
        center: [f64; 2],
    },
}

impl DomainPreset {
    pub fn domain<T: Real>(&self) -> Domain<T> {
        let t = T::lit;
        match *self {
            DomainPreset::Rectangle { width, height, origin } => {
                Domain::Rectangle { origin: [t(origin[0]), t(origin[1])], width: t(width), height: t(height) }
            }
            DomainPreset::WeightedGrid { width, height, .. } => Domain::rectangle(t(width), t(height)),
            DomainPreset::Annulus { inner, outer } => Domain::annulus(t(inner), t(outer)),
        }
    }

    pub fn build<T: Real>(&self, spacing: T) -> Result<MeasureGraph<T>> {
        match *self {
            DomainPreset::WeightedGrid { alpha, center, .. } => {
                if !alpha.is_finite() {
                    return invalid("weight exponent must be finite");
                }
                let c = [T::lit(center[0]), T::lit(center[1])];
                let a = T::lit(alpha);
                let w = move |p: [T; 2]| (p[0] - c[0]).hypot(p[1] - c[1]).powf(a);
                self.domain::<T>().discretize(spacing, Some(&w))
            }
            _ => self.domain::<T>().discretize(spacing, None),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainPreset::Rectangle { .. } => "rectangle",
            DomainPreset::Annulus { .. } => "annulus",
            DomainPreset::WeightedGrid { .. } => "weighted-grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// Geometric node predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields, from = "StrictRegion")]
pub enum Region {
    All,
    /// `coord ≤ at` (or `≥ at` with `above = true`), with half a spacing of slack.
    HalfPlane {
        axis: Axis,
        at: f64,
        #[serde(default)]
        above: bool,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// `inner ≤ |x − center| ≤ outer`.
    Band {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    /// `|x − center| ≥ radius`.
    Outside {
        center: [f64; 2],
        radius: f64,
    },
    Ids {
        ids: Vec<usize>,
    },
}

impl Region {
    pub fn resolve<T: Real>(&self, graph: &MeasureGraph<T>) -> Result<NodeSet> {
        let n = graph.node_count();
        let slack = graph.spacing().as_f64() * 0.5;
        let tiny = graph.spacing().as_f64() * 1e-9;
        let pos = |v: usize| -> Result<[f64; 2]> {
            graph
                .pos(v)
                .map(|p| [p[0].as_f64(), p[1].as_f64()])
                .ok_or_else(|| Error::InvalidArgument("geometric region on a graph without positions".into()))
        };
        let by = |f: &dyn Fn([f64; 2]) -> bool| -> Result<NodeSet> {
            let mut s = NodeSet::empty(n);
            for v in 0..n {
                if f(pos(v)?) {
                    s.insert(v);
                }
            }
            Ok(s)
        };
        let dist = |p: [f64; 2], c: [f64; 2]| (p[0] - c[0]).hypot(p[1] - c[1]);
        match self {
            Region::All => Ok(NodeSet::full(n)),
            Region::Ids { ids } => NodeSet::from_ids(n, ids.iter().copied()),
            Region::HalfPlane { axis, at, above } => {
                let k = if *axis == Axis::X { 0 } else { 1 };
                if *above {
                    by(&|p| p[k] >= at - slack)
                } else {
                    by(&|p| p[k] <= at + slack)
                }
            }
            Region::Disk { center, radius } => by(&|p| dist(p, *center) <= radius + tiny),
            Region::Band { center, inner, outer } => by(&|p| {
                let r = dist(p, *center);
                r >= inner - tiny && r <= outer + tiny
            }),
            Region::Outside { center, radius } => by(&|p| dist(p, *center) >= radius - tiny),
        }
    }
}

/// Condenser specifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields, from = "StrictCondenser")]
pub enum CondenserSpec {
    /// Leftmost column against rightmost column.
    LeftRight,
    /// Bottom row against top row.
    TopBottom,
    /// Inner against outer boundary nodes of a ring-shaped grid (nodes with a
    /// missing lattice neighbour, split at the mid radius about the bbox centre).
    InnerOuter,
    /// Disk of radius `inner` against everything at distance `≥ outer`.
    Rings {
        #[serde(default)]
        center: Option<[f64; 2]>,
        inner: f64,
        outer: f64,
    },
    Custom {
        e: Region,
        f: Region,
        #[serde(default = "all_region")]
        omega: Region,
    },
}

fn all_region() -> Region {
    Region::All
}

// Deserialization mirrors: serde ignores `deny_unknown_fields` on unit
// variants of internally tagged enums, so field-less cases are read as empty
// struct variants.

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StrictRegion {
    All {},
    HalfPlane {
        axis: Axis,
        at: f64,
        #[serde(default)]
        above: bool,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Band {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    Outside {
        center: [f64; 2],
        radius: f64,
    },
    Ids {
        ids: Vec<usize>,
    },
}

impl From<StrictRegion> for Region {
    fn from(r: StrictRegion) -> Self {
        match r {
            StrictRegion::All {} => Region::All,
            StrictRegion::HalfPlane { axis, at, above } => Region::HalfPlane { axis, at, above },
            StrictRegion::Disk { center, radius } => Region::Disk { center, radius },
            StrictRegion::Band { center, inner, outer } => Region::Band { center, inner, outer },
            StrictRegion::Outside { center, radius } => Region::Outside { center, radius },
            StrictRegion::Ids { ids } => Region::Ids { ids },
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
enum StrictCondenser {
    LeftRight {},
    TopBottom {},
    InnerOuter {},
    Rings {
        #[serde(default)]
        center: Option<[f64; 2]>,
        inner: f64,
        outer: f64,
    },
    Custom {
        e: Region,
        f: Region,
        #[serde(default = "all_region")]
        omega: Region,
    },
}

impl From<StrictCondenser> for CondenserSpec {
    fn from(c: StrictCondenser) -> Self {
        match c {
            StrictCondenser::LeftRight {} => CondenserSpec::LeftRight,
            StrictCondenser::TopBottom {} => CondenserSpec::TopBottom,
            StrictCondenser::InnerOuter {} => CondenserSpec::InnerOuter,
            StrictCondenser::Rings { center, inner, outer } => CondenserSpec::Rings { center, inner, outer },
            StrictCondenser::Custom { e, f, omega } => CondenserSpec::Custom { e, f, omega },
        }
    }
}

impl CondenserSpec {
    pub fn name(&self) -> String {
        match self {
            CondenserSpec::LeftRight => "left_right".into(),
            CondenserSpec::TopBottom => "top_bottom".into(),
            CondenserSpec::InnerOuter => "inner_outer".into(),
            CondenserSpec::Rings { inner, outer, .. } => format!("rings_{inner}_{outer}"),
            CondenserSpec::Custom { .. } => "custom".into(),
        }
    }

    pub fn resolve<T: Real>(&self, graph: &MeasureGraph<T>) -> Result<Condenser> {
        let (lo, hi) = graph.bbox().ok_or_else(|| Error::InvalidArgument("preset condensers need node positions".into()))?;
        let (lo, hi) = ([lo[0].as_f64(), lo[1].as_f64()], [hi[0].as_f64(), hi[1].as_f64()]);
        let centre = [(lo[0] + hi[0]) * 0.5, (lo[1] + hi[1]) * 0.5];
        let (e, f, omega) = match self {
            CondenserSpec::LeftRight => (
                Region::HalfPlane { axis: Axis::X, at: lo[0], above: false },
                Region::HalfPlane { axis: Axis::X, at: hi[0], above: true },
                Region::All,
            ),
            CondenserSpec::TopBottom => (
                Region::HalfPlane { axis: Axis::Y, at: lo[1], above: false },
                Region::HalfPlane { axis: Axis::Y, at: hi[1], above: true },
                Region::All,
            ),
            CondenserSpec::InnerOuter => {
                // boundary nodes (missing a lattice neighbour), split at the mid radius
                let radius = |v: usize| graph.pos(v).map_or(0.0, |p| (p[0].as_f64() - centre[0]).hypot(p[1].as_f64() - centre[1]));
                let n = graph.node_count();
                let full = (0..n).map(|v| graph.neighbors(v).len()).max().unwrap_or(0);
                let (rmin, rmax) = (0..n).map(radius).fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
                let mid = 0.5 * (rmin + rmax);
                let rim = |v: usize| graph.neighbors(v).len() < full;
                let inner: Vec<usize> = (0..n).filter(|&v| rim(v) && radius(v) < mid).collect();
                let outer: Vec<usize> = (0..n).filter(|&v| rim(v) && radius(v) > mid).collect();
                (Region::Ids { ids: inner }, Region::Ids { ids: outer }, Region::All)
            }
            CondenserSpec::Rings { center, inner, outer } => {
                if !(inner < outer) {
                    return invalid("rings need inner < outer");
                }
                let c = center.unwrap_or(centre);
                (Region::Disk { center: c, radius: *inner }, Region::Outside { center: c, radius: *outer }, Region::All)
            }
            CondenserSpec::Custom { e, f, omega } => (e.clone(), f.clone(), omega.clone()),
        };
        let omega = omega.resolve(graph)?;
        let e = e.resolve(graph)?.intersection(&omega);
        let f = f.resolve(graph)?.intersection(&omega);
        Condenser::new(e, f, omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_right_columns() {
        let g = DomainPreset::Rectangle { width: 2.0, height: 1.0, origin: [0.0; 2] }.build(0.5).unwrap();
        let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
        assert_eq!(c.e().len(), 3);
        assert_eq!(c.f().len(), 3);
        assert!(c.e().iter().all(|v| g.pos(v).unwrap()[0] == 0.0));
        assert!(c.f().iter().all(|v| g.pos(v).unwrap()[0] == 2.0));
    }

    #[test]
    fn specs_reject_stray_keys() {
        let spec: CondenserSpec = serde_json::from_str(r#"{"preset": "left_right"}"#).unwrap();
        assert_eq!(spec, CondenserSpec::LeftRight);
        assert!(serde_json::from_str::<CondenserSpec>(r#"{"preset": "left_right", "inner": 1.0}"#).is_err());
        let all: Region = serde_json::from_str(r#"{"kind": "all"}"#).unwrap();
        assert_eq!(all, Region::All);
        assert!(serde_json::from_str::<Region>(r#"{"kind": "all", "radius": 1.0}"#).is_err());
        let custom = r#"{"preset": "custom", "e": {"kind": "ids", "ids": [0]}, "f": {"kind": "ids", "ids": [1]}}"#;
        let spec: CondenserSpec = serde_json::from_str(custom).unwrap();
        assert!(matches!(spec, CondenserSpec::Custom { omega: Region::All, .. }));
        // serialization keeps the unit-variant shape
        assert_eq!(serde_json::to_string(&CondenserSpec::TopBottom).unwrap(), r#"{"preset":"top_bottom"}"#);
    }

    #[test]
    fn shifted_rectangle_keeps_origin() {
        let g = DomainPreset::Rectangle { width: 2.0, height: 2.0, origin: [-1.0, -1.0] }.build(0.5).unwrap();
        let (lo, hi) = g.bbox().unwrap();
        assert_eq!((lo, hi), ([-1.0, -1.0], [1.0, 1.0]));
    }

    #[test]
    fn inner_outer_on_annulus() {
        let g = DomainPreset::Annulus { inner: 1.0, outer: 2.0 }.build::<f64>(0.125).unwrap();
        let c = CondenserSpec::InnerOuter.resolve(&g).unwrap();
        for v in c.e().iter() {
            let p = g.pos(v).unwrap();
            assert!(p[0].hypot(p[1]) < 1.125 + 1e-9);
        }
        for v in c.f().iter() {
            let p = g.pos(v).unwrap();
            assert!(p[0].hypot(p[1]) > 1.875 - 1e-9);
        }
    }
}
