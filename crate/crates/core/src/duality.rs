//! The curve/surface duality product and studies built on it.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::families::{Condenser, ConstraintKind};
use crate::mmspace::{distances_from, MeasureGraph, NodeSet};
use crate::modsolve::{warm_modulus, ModulusProblem, ModulusResult, Status, Tolerances};
use crate::presets::{CondenserSpec, DomainPreset};
use crate::scalar::Real;

/// `Mod_q(L)^{(p−1)/p} · Mod_p(Γ)^{1/p}` for one condenser, `q = p/(p−1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport<T> {
    pub h: T,
    pub p: T,
    pub q: T,
    pub mod_curves: T,
    pub mod_surfaces: T,
    /// `None` on the degenerate pairing: no connecting curve (`Mod_p(Γ) = 0`)
    /// against an unbounded surface modulus.
    pub product: Option<T>,
    /// Product of the certified lower bounds of both moduli.
    pub product_lower: Option<T>,
    /// Product of the certified upper bounds.
    pub product_upper: Option<T>,
    pub residual_curves: T,
    pub residual_surfaces: T,
    pub curve_status: Status,
    pub surface_status: Status,
    pub degenerate: bool,
}

fn solve<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, kind: ConstraintKind, p: T, tol: Tolerances<T>) -> Result<ModulusResult<T>> {
    let res = warm_modulus(&ModulusProblem::new(graph, cond, kind, p)?.with_tolerances(tol)?)?;
    if res.status == Status::IterationCap {
        let what = match kind {
            ConstraintKind::Curve => "curve modulus",
            ConstraintKind::Cut => "cut modulus",
        };
        return Err(Error::NotConverged(what.into()));
    }
    Ok(res)
}

fn pairing<T: Real>(p: T, surfaces: T, curves: T) -> T {
    surfaces.powf((p - T::one()) / p) * curves.powf(T::one() / p)
}

/// Solves the curve family at `p` and the cut family at `q` and assembles
/// their duality product.
pub fn duality_product<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, p: T, tol: Tolerances<T>) -> Result<DualityReport<T>> {
    if !(p > T::one()) || !p.is_finite() {
        return invalid("exponent p must satisfy 1 < p < ∞");
    }
    let q = p / (p - T::one());
    let curves = solve(graph, cond, ConstraintKind::Curve, p, tol)?;
    let surfaces = solve(graph, cond, ConstraintKind::Cut, q, tol)?;
    let degenerate = curves.status == Status::EmptyFamily || surfaces.status == Status::Unbounded;
    let product = |s: T, c: T| (!degenerate).then(|| pairing(p, s, c));
    Ok(DualityReport {
        h: graph.spacing(),
        p,
        q,
        mod_curves: curves.value,
        mod_surfaces: surfaces.value,
        product: product(surfaces.value, curves.value),
        product_lower: product(surfaces.lower_bound, curves.lower_bound),
        product_upper: product(surfaces.upper_bound, curves.upper_bound),
        residual_curves: curves.residual,
        residual_surfaces: surfaces.residual,
        curve_status: curves.status,
        surface_status: surfaces.status,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow<T> {
    pub h: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<DualityReport<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy<T> {
    pub rows: Vec<RefinementRow<T>>,
    /// `|product(h_{k+1}) − product(h_k)|` between consecutive usable rows.
    pub drift: Vec<T>,
}

/// One duality report per spacing. A failing row is recorded with its error
/// and does not abort the study.
pub fn refinement_row<T: Real>(domain: &DomainPreset, cond: &CondenserSpec, p: T, h: T, tol: Tolerances<T>) -> RefinementRow<T> {
    let run = || -> Result<DualityReport<T>> {
        let graph = domain.build(h)?;
        let c = cond.resolve(&graph)?;
        if c.e().is_empty() || c.f().is_empty() {
            return Err(Error::InvalidCondenser("E or F is empty at this spacing".into()));
        }
        duality_product(&graph, &c, p, tol)
    };
    match run() {
        Ok(r) => RefinementRow { h, report: Some(r), error: None },
        Err(e) => RefinementRow { h, report: None, error: Some(e.to_string()) },
    }
}

pub fn check_spacings<T: Real>(spacings: &[T]) -> Result<()> {
    if spacings.len() < 2 {
        return invalid("a refinement study needs at least two spacings");
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0])) || spacings.iter().any(|&h| !(h > T::zero())) {
        return invalid("spacings must be positive and strictly decreasing");
    }
    Ok(())
}

/// Collects precomputed rows into a study and computes the drift.
pub fn assemble_study<T: Real>(rows: Vec<RefinementRow<T>>) -> RefinementStudy<T> {
    let products: Vec<T> = rows.iter().filter_map(|r| r.report.as_ref().and_then(|d| d.product)).collect();
    let drift = products.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    RefinementStudy { rows, drift }
}

pub fn refinement_study<T: Real>(
    domain: &DomainPreset,
    cond: &CondenserSpec,
    p: T,
    spacings: &[T],
    tol: Tolerances<T>,
) -> Result<RefinementStudy<T>> {
    check_spacings(spacings)?;
    let rows = spacings.iter().map(|&h| refinement_row(domain, cond, p, h, tol)).collect();
    Ok(assemble_study(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoewnerRow<T> {
    /// Position of the pair in the input list.
    pub pair: usize,
    pub distance: T,
    pub diam_e: T,
    pub diam_f: T,
    /// `dist(E, F) / min(diam E, diam F)`.
    pub delta: T,
    pub modulus: T,
    pub status: Status,
}

fn check_continuum<T: Real>(graph: &MeasureGraph<T>, set: &NodeSet, name: &str) -> Result<()> {
    if set.len() < 2 {
        return Err(Error::InvalidCondenser(format!("continuum {name} needs at least two nodes")));
    }
    let labels = graph.components(set);
    let first = labels[set.iter().next().unwrap_or(0)];
    if set.iter().any(|v| labels[v] != first) {
        return Err(Error::InvalidCondenser(format!("continuum {name} is not connected")));
    }
    Ok(())
}

fn diameter<T: Real>(graph: &MeasureGraph<T>, set: &NodeSet) -> T {
    let n = graph.node_count();
    let mut diam = T::zero();
    for v in set.iter() {
        let d = distances_from(graph, &NodeSet::from_ids(n, [v]).expect("node in range"), None);
        for w in set.iter() {
            diam = diam.max(d[w]);
        }
    }
    diam
}

/// `Mod_p(Γ(E, F; X))` against the relative distance `Δ(E, F)` for each pair
/// of continua, sorted by `Δ`.
pub fn loewner_profile<T: Real>(
    graph: &MeasureGraph<T>,
    pairs: &[(NodeSet, NodeSet)],
    p: T,
    tol: Tolerances<T>,
) -> Result<Vec<LoewnerRow<T>>> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (k, (e, f)) in pairs.iter().enumerate() {
        check_continuum(graph, e, "E")?;
        check_continuum(graph, f, "F")?;
        let cond = Condenser::whole(e.clone(), f.clone())?;
        cond.check_graph(graph)?;
        let from_e = distances_from(graph, e, None);
        let distance = f.iter().map(|v| from_e[v]).fold(T::infinity(), T::min);
        let (diam_e, diam_f) = (diameter(graph, e), diameter(graph, f));
        let res = solve(graph, &cond, ConstraintKind::Curve, p, tol)?;
        rows.push(LoewnerRow {
            pair: k,
            distance,
            diam_e,
            diam_f,
            delta: distance / diam_e.min(diam_f),
            modulus: res.value,
            status: res.status,
        });
    }
    rows.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap_or(std::cmp::Ordering::Equal).then(a.pair.cmp(&b.pair)));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::build_grid;

    #[test]
    fn rectangle_product_is_one() {
        for &(w, p) in &[(2.0, 2.0), (1.0, 1.5), (1.0, 3.0)] {
            let g: MeasureGraph<f64> = build_grid(w, 1.0, 0.125, None).unwrap();
            let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
            let r = duality_product(&g, &c, p, Tolerances::default()).unwrap();
            assert_eq!(r.q * (r.p - 1.0), r.p);
            let prod = r.product.unwrap();
            assert!((prod - 1.0).abs() < 1e-3, "w={w} p={p}: {prod}");
            assert!(r.product_lower.unwrap() <= prod + 1e-12 && prod <= r.product_upper.unwrap() + 1e-12);
            assert!((r.mod_curves - w.powf(1.0 - p)).abs() < 1e-3 * w.powf(1.0 - p));
        }
    }

    #[test]
    fn disconnected_pairing_is_degenerate() {
        let g: MeasureGraph<f64> = build_grid(1.0, 1.0, 0.25, None).unwrap();
        let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
        let omega = NodeSet::from_predicate(g.node_count(), |v| (g.pos(v).unwrap()[0] - 0.5).abs() > 1e-9);
        let c = Condenser::new(c.e().clone(), c.f().clone(), omega).unwrap();
        let r = duality_product(&g, &c, 2.0, Tolerances::default()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.product, None);
        assert_eq!(r.mod_curves, 0.0);
        assert_eq!(r.curve_status, Status::EmptyFamily);
        assert_eq!(r.surface_status, Status::Unbounded);
    }

    #[test]
    fn refinement_rows_fail_independently() {
        let dom = DomainPreset::Rectangle { width: 1.0, height: 1.0, origin: [0.0; 2] };
        let study = refinement_study(&dom, &CondenserSpec::LeftRight, 2.0, &[0.3, 0.25, 0.125], Tolerances::default()).unwrap();
        assert!(study.rows[0].error.is_some());
        assert!(study.rows[1].report.is_some() && study.rows[2].report.is_some());
        assert_eq!(study.drift.len(), 1);
        assert!(refinement_study(&dom, &CondenserSpec::LeftRight, 2.0, &[0.25], Tolerances::default()).is_err());
        assert!(refinement_study(&dom, &CondenserSpec::LeftRight, 2.0, &[0.125, 0.25], Tolerances::default()).is_err());
    }

    #[test]
    fn loewner_rows_sorted_and_monotone() {
        let g: MeasureGraph<f64> = build_grid(2.0, 1.0, 0.125, None).unwrap();
        let n = g.node_count();
        let column = |x: f64| NodeSet::from_predicate(n, |v| (g.pos(v).unwrap()[0] - x).abs() < 1e-9);
        let pairs = vec![(column(0.0), column(2.0)), (column(0.0), column(1.0))];
        let rows = loewner_profile(&g, &pairs, 2.0, Tolerances::default()).unwrap();
        assert_eq!(rows[0].pair, 1);
        assert!((rows[0].delta - 1.0).abs() < 1e-12 && (rows[1].delta - 2.0).abs() < 1e-12);
        assert!(rows[0].modulus > rows[1].modulus);
        let single = NodeSet::from_ids(n, [0]).unwrap();
        assert!(loewner_profile(&g, &[(single, column(2.0))], 2.0, Tolerances::default()).is_err());
    }
}
