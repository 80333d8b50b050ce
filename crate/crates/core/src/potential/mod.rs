//! Condenser potentials, capacities and the surfaces they generate.

mod solver;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::families::{cut_oracle, Condenser, Constraint, DensityField};
use crate::mmspace::{ball, MeasureGraph, NodeSet};
use crate::scalar::Real;

/// Capacitary potential of a condenser: `u = 1` on `E`, `u = 0` on `F` and
/// outside `Ω`, `0 ≤ u ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential<T> {
    pub u: Vec<T>,
    pub condenser: Condenser,
    pub p: T,
    /// `Σ m(e) g(e)^p` over edges inside `Ω`.
    pub energy: T,
    pub newton_steps: usize,
    pub sweeps: usize,
}

impl<T: Real> Potential<T> {
    /// Edge gradient `|u(a) − u(b)| / ℓ(e)`, zero on edges leaving `Ω`.
    pub fn gradient(&self, graph: &MeasureGraph<T>) -> Vec<T> {
        graph
            .edges()
            .iter()
            .enumerate()
            .map(
                |(k, e)| {
                    if graph.edge_inside(k, self.condenser.omega()) {
                        (self.u[e.a] - self.u[e.b]).abs() / e.length
                    } else {
                        T::zero()
                    }
                },
            )
            .collect()
    }
}

pub const DEFAULT_TOL: f64 = 1e-9;

fn p_energy<T: Real>(graph: &MeasureGraph<T>, omega: &NodeSet, u: &[T], p: T) -> T {
    graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| graph.edge_inside(*k, omega))
        .map(|(_, e)| e.energy * ((u[e.a] - u[e.b]).abs() / e.length).powf(p))
        .sum()
}

/// Minimizes the discrete p-energy over potentials with the condenser's
/// boundary values. Components of `Ω` that do not touch both `E` and `F` are
/// set constant (1 when they touch `E`, else 0).
pub fn condenser_potential<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, p: T, tol: T) -> Result<Potential<T>> {
    cond.check_graph(graph)?;
    if !(p > T::one()) || !p.is_finite() {
        return invalid("exponent p must satisfy 1 < p < ∞");
    }
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    let n = graph.node_count();
    let omega = cond.omega();
    let comp = graph.components(omega);
    let ncomp = comp.iter().filter(|&&c| c != usize::MAX).max().map_or(0, |&c| c + 1);
    let mut touches = vec![(false, false); ncomp];
    for v in 0..n {
        if comp[v] != usize::MAX {
            touches[comp[v]].0 |= cond.e().contains(v);
            touches[comp[v]].1 |= cond.f().contains(v);
        }
    }
    let mut u = vec![T::zero(); n];
    let mut free = vec![false; n];
    for v in 0..n {
        if comp[v] == usize::MAX {
            continue;
        }
        let (te, tf) = touches[comp[v]];
        if cond.e().contains(v) || (te && !tf) {
            u[v] = T::one();
        } else if te && tf && !cond.f().contains(v) {
            free[v] = true;
            u[v] = T::lit(0.5);
        }
    }
    let stats = solver::minimize_energy(graph, omega.mask(), &free, &mut u, p, tol.max(T::tol_floor()));
    let energy = p_energy(graph, omega, &u, p);
    Ok(Potential { u, condenser: cond.clone(), p, energy, newton_steps: stats.newton_steps, sweeps: stats.sweeps })
}

/// Condenser capacity: the energy of [`condenser_potential`].
pub fn capacity<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, p: T) -> Result<T> {
    Ok(condenser_potential(graph, cond, p, T::lit(DEFAULT_TOL))?.energy)
}

/// Super-level set `{u > t}` with its cut weight inside `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSurface<T> {
    pub t: T,
    pub set: NodeSet,
    pub perimeter: T,
}

/// `U_t = {u > t}` for `t = k/(K+1)`, `k = 1..=K`, each checked to separate
/// the condenser.
pub fn level_set_surfaces<T: Real>(graph: &MeasureGraph<T>, pot: &Potential<T>, count: usize) -> Result<Vec<LevelSurface<T>>> {
    if count == 0 {
        return invalid("need at least one level");
    }
    let cond = &pot.condenser;
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let t = T::of_usize(k) / T::of_usize(count + 1);
        let set = NodeSet::from_predicate(graph.node_count(), |v| cond.omega().contains(v) && pot.u[v] > t);
        if !cond.separates(&set) {
            return Err(Error::InvalidCondenser(format!("level set at t = {t} does not separate E from F")));
        }
        let perimeter = Constraint::cut(graph, cond, &set).weights.iter().copied().sum();
        out.push(LevelSurface { t, set, perimeter });
    }
    Ok(out)
}

/// Cut measures of the distinct super-level sets `{u ≥ u(v)}` of the
/// potential, thinned evenly to at most `count`. Under the extremal cut
/// density every one of them is tight.
pub fn level_cuts<T: Real>(graph: &MeasureGraph<T>, pot: &Potential<T>, count: usize) -> Vec<Constraint<T>> {
    let cond = &pot.condenser;
    let omega = cond.omega();
    let mut levels: Vec<T> = omega.iter().map(|v| pot.u[v]).filter(|&t| t > T::zero() && t < T::one()).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    levels.dedup();
    if levels.len() > count && count > 0 {
        let n = levels.len();
        levels = (0..count).map(|k| levels[k * n / count]).collect();
    }
    let mut out: Vec<Constraint<T>> = Vec::with_capacity(levels.len());
    for t in levels {
        let set = NodeSet::from_predicate(graph.node_count(), |v| omega.contains(v) && pot.u[v] >= t);
        if !cond.separates(&set) {
            continue;
        }
        let c = Constraint::cut(graph, cond, &set);
        if !c.edges.is_empty() && out.last().is_none_or(|last| last.edges != c.edges) {
            out.push(c);
        }
    }
    out
}

/// Greedy path decomposition of the capacitary current
/// `k(e)|Δu|^{p−1}` (directed downhill): repeatedly follows the largest
/// remaining outflow from `E` to `F` and removes the bottleneck. Stops once
/// `coverage` of the total current is decomposed or after `limit` paths.
/// Each path comes with the current it carries.
pub fn current_paths<T: Real>(graph: &MeasureGraph<T>, pot: &Potential<T>, coverage: T, limit: usize) -> Vec<(Constraint<T>, T)> {
    let cond = &pot.condenser;
    let omega = cond.omega();
    let p = pot.p;
    let mut flux: Vec<T> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            if graph.edge_inside(k, omega) {
                e.energy / e.length.powf(p) * (pot.u[e.a] - pot.u[e.b]).abs().powf(p - T::one())
            } else {
                T::zero()
            }
        })
        .collect();
    let downhill = |v: usize, e: usize| {
        let w = graph.edge(e).other(v);
        pot.u[w] < pot.u[v]
    };
    let outflow = |flux: &[T], v: usize| -> T { graph.neighbors(v).iter().filter(|&&(_, e)| downhill(v, e)).map(|&(_, e)| flux[e]).sum() };
    let total: T = cond.e().iter().map(|v| outflow(&flux, v)).sum();
    if !(total > T::zero()) {
        return Vec::new();
    }
    let mut remaining = total;
    let mut out = Vec::new();
    let floor = total * T::lit(1e-12);
    while remaining > (T::one() - coverage) * total && out.len() < limit {
        let start = cond.e().iter().map(|v| (outflow(&flux, v), v)).fold(None, |best: Option<(T, usize)>, (f, v)| match best {
            Some((bf, _)) if bf >= f => best,
            _ => Some((f, v)),
        });
        let Some((f0, start)) = start else { break };
        if !(f0 > floor) {
            break;
        }
        let mut path = vec![start];
        let mut edges = Vec::new();
        let mut v = start;
        while !cond.f().contains(v) {
            let next = graph.neighbors(v).iter().filter(|&&(_, e)| downhill(v, e) && flux[e] > floor).fold(
                None,
                |best: Option<(T, usize, usize)>, &(w, e)| match best {
                    Some((bf, _, _)) if bf >= flux[e] => best,
                    _ => Some((flux[e], w, e)),
                },
            );
            let Some((_, w, e)) = next else { break };
            edges.push(e);
            path.push(w);
            v = w;
        }
        let bottleneck = edges.iter().map(|&e| flux[e]).fold(T::infinity(), T::min);
        if !cond.f().contains(v) || edges.is_empty() {
            // dead end from round-off: drop the stranded current
            if let Some(&e) = edges.last() {
                flux[e] = T::zero();
            } else {
                for &(_, e) in graph.neighbors(start) {
                    flux[e] = T::zero();
                }
            }
            remaining = cond.e().iter().map(|v| outflow(&flux, v)).sum();
            continue;
        }
        for &e in &edges {
            flux[e] = flux[e] - bottleneck;
        }
        remaining = remaining - bottleneck;
        if let Ok(c) = Constraint::curve(graph, &path) {
            out.push((c, bottleneck));
        }
    }
    out
}

/// Every quantity of the chain
/// `1 ≤ ∫₀¹ ∫ρ dP(U_t) dt = ∫ρ d‖Du‖ ≤ ∫ρ g_u dμ ≤ ‖ρ‖_q ‖g_u‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundChain<T> {
    pub p: T,
    pub q: T,
    /// Minimum of `∫ρ dP(U)` over all separating sets.
    pub admissibility: T,
    /// `∫₀¹ Σ_{∂U_t} ρσ dt`, integrated exactly over the sorted potential values.
    pub level_integral: T,
    /// `Σ ρ σ |Δu|`.
    pub variation_integral: T,
    /// `Σ m ρ g_u`.
    pub gradient_integral: T,
    /// `(Σ m ρ^q)^{1/q} (Σ m g_u^p)^{1/p}`.
    pub holder_bound: T,
    pub links: [bool; 4],
}

impl<T: Real> LowerBoundChain<T> {
    pub fn holds(&self) -> bool {
        self.links.iter().all(|&b| b)
    }
}

/// Evaluates the duality lower-bound chain for a cut-admissible density `rho`
/// (at exponent `q = p/(p−1)`) against the `p`-potential of the condenser.
pub fn lower_bound_check<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, p: T, rho: &DensityField<T>) -> Result<LowerBoundChain<T>> {
    let slack = T::lit(1e-9).max(T::tol_floor());
    let (_, admissibility) = cut_oracle(graph, cond, rho)?;
    if admissibility < T::one() - slack {
        return Err(Error::Inadmissible((T::one() - admissibility).as_f64()));
    }
    let pot = condenser_potential(graph, cond, p, T::lit(DEFAULT_TOL))?;
    let q = p / (p - T::one());
    let grad = pot.gradient(graph);
    let r = rho.values();
    let inside: Vec<usize> = (0..graph.edge_count()).filter(|&k| graph.edge_inside(k, cond.omega())).collect();

    let mut variation = T::zero();
    let mut gradient = T::zero();
    let mut rho_q = T::zero();
    let mut g_p = T::zero();
    for &k in &inside {
        let e = graph.edge(k);
        variation = variation + r[k] * e.cross * (pot.u[e.a] - pot.u[e.b]).abs();
        gradient = gradient + e.energy * r[k] * grad[k];
        rho_q = rho_q + e.energy * r[k].powf(q);
        g_p = g_p + e.energy * grad[k].powf(p);
    }
    let holder = rho_q.powf(T::one() / q) * g_p.powf(T::one() / p);

    // ∫₀¹ of the piecewise constant t ↦ Σ_{∂{u>t}} ρσ
    let mut levels: Vec<T> = cond.omega().iter().map(|v| pot.u[v]).collect();
    levels.push(T::zero());
    levels.push(T::one());
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    levels.dedup();
    let mut level_integral = T::zero();
    for w in levels.windows(2) {
        let set = NodeSet::from_predicate(graph.node_count(), |v| cond.omega().contains(v) && pot.u[v] > w[0]);
        let c = Constraint::cut(graph, cond, &set);
        level_integral = level_integral + (w[1] - w[0]) * c.eval(r);
    }

    let close = |a: T, b: T| (a - b).abs() <= slack * a.abs().max(b.abs()).max(T::one());
    let le = |a: T, b: T| a <= b + slack * b.abs().max(T::one());
    let links = [le(T::one(), level_integral), close(level_integral, variation), le(variation, gradient), le(gradient, holder)];
    Ok(LowerBoundChain {
        p,
        q,
        admissibility,
        level_integral,
        variation_integral: variation,
        gradient_integral: gradient,
        holder_bound: holder,
        links,
    })
}

/// `rcap_p(A, W)`: minimal energy over `u ≥ 1` on `A`, `u = 0` off `W`.
pub fn relative_capacity<T: Real>(graph: &MeasureGraph<T>, a: &NodeSet, w: &NodeSet, p: T) -> Result<T> {
    if !a.is_subset(w) {
        return invalid("relative capacity needs A ⊆ W");
    }
    let outside = w.complement();
    if a.is_empty() || outside.is_empty() {
        return Ok(T::zero());
    }
    let cond = Condenser::whole(a.clone(), outside)?;
    capacity(graph, &cond, p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinnessRow<T> {
    pub t: T,
    pub cap_set: T,
    pub cap_ball: T,
    pub ratio: T,
    pub log_weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinnessReport<T> {
    pub index: T,
    pub rows: Vec<ThinnessRow<T>>,
}

/// Riemann sum of the Wiener-type integral
/// `Σ_k (rcap(E ∩ B(x,t_k), B(x,2t_k)) / rcap(B(x,t_k), B(x,2t_k)))^{1/(p−1)} log(t_k / t_{k+1})`
/// over dyadic scales `t_0 > t_1 > …` (the last scale gets weight `log 2`).
pub fn thinness_index<T: Real>(graph: &MeasureGraph<T>, set: &NodeSet, x: usize, p: T, scales: &[T]) -> Result<ThinnessReport<T>> {
    if scales.is_empty() {
        return invalid("need at least one scale");
    }
    let two = T::lit(2.0);
    for w in scales.windows(2) {
        if ((w[0] / w[1]) - two).abs() > T::lit(1e-9).max(T::tol_floor()) {
            return invalid("scales must be dyadic and decreasing");
        }
    }
    let h = graph.spacing();
    let mut rows = Vec::with_capacity(scales.len());
    let mut index = T::zero();
    for (k, &t) in scales.iter().enumerate() {
        if t < two * h * (T::one() - T::lit(1e-9)) {
            return Err(Error::BelowResolution { radius: t.as_f64(), resolution: (two * h).as_f64() });
        }
        let inner = ball(graph, x, t)?;
        let outer = ball(graph, x, two * t)?;
        let cap_ball = relative_capacity(graph, &inner, &outer, p)?;
        let cap_set = relative_capacity(graph, &set.intersection(&inner), &outer, p)?;
        let ratio = if cap_ball > T::zero() { cap_set / cap_ball } else { T::zero() };
        let log_weight = scales.get(k + 1).map_or(two.ln(), |&next| (t / next).ln());
        index = index + ratio.powf(T::one() / (p - T::one())) * log_weight;
        rows.push(ThinnessRow { t, cap_set, cap_ball, ratio, log_weight });
    }
    Ok(ThinnessReport { index, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmspace::build_grid;
    use crate::presets::CondenserSpec;

    fn rect(w: f64, h: f64, s: f64) -> (MeasureGraph<f64>, Condenser) {
        let g: MeasureGraph<f64> = build_grid(w, h, s, None).unwrap();
        let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
        (g, c)
    }

    #[test]
    fn linear_potential_on_rectangle() {
        let (g, c) = rect(2.0, 1.0, 0.5);
        let pot = condenser_potential(&g, &c, 2.0, 1e-12).unwrap();
        for v in 0..g.node_count() {
            let x = g.pos(v).unwrap()[0];
            assert!((pot.u[v] - (1.0 - x / 2.0)).abs() < 1e-10, "node {v}");
        }
        assert!((pot.energy - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rectangle_capacity_closed_form_for_all_p() {
        for &p in &[1.5, 2.0, 3.0] {
            let (g, c) = rect(1.0, 1.0, 1.0 / 16.0);
            assert!((capacity(&g, &c, p).unwrap() - 1.0).abs() < 1e-7, "p = {p}");
            let (g, c) = rect(2.0, 1.0, 1.0 / 8.0);
            let want = 2f64.powf(1.0 - p);
            assert!((capacity(&g, &c, p).unwrap() - want).abs() < 1e-7 * want, "p = {p}");
        }
    }

    #[test]
    fn swap_gives_complementary_potential() {
        let g: MeasureGraph<f64> = build_grid(1.0, 1.0, 0.125, None).unwrap();
        let c = CondenserSpec::Rings { center: Some([0.5, 0.5]), inner: 0.15, outer: 0.4 }.resolve(&g).unwrap();
        for &p in &[1.5, 3.0] {
            let a = condenser_potential(&g, &c, p, 1e-11).unwrap();
            let b = condenser_potential(&g, &c.swapped(), p, 1e-11).unwrap();
            assert!((a.energy - b.energy).abs() < 1e-8 * a.energy);
            for v in 0..g.node_count() {
                assert!((a.u[v] + b.u[v] - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn disconnected_condenser_gives_indicator() {
        let (g, c) = rect(1.0, 1.0, 0.25);
        let omega = NodeSet::from_predicate(g.node_count(), |v| (g.pos(v).unwrap()[0] - 0.5).abs() > 1e-9);
        let cond = Condenser::new(c.e().clone(), c.f().clone(), omega).unwrap();
        let pot = condenser_potential(&g, &cond, 2.0, 1e-9).unwrap();
        assert_eq!(pot.energy, 0.0);
        for v in 0..g.node_count() {
            let x = g.pos(v).unwrap()[0];
            assert_eq!(pot.u[v], if x < 0.5 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn level_sets_of_linear_potential() {
        let (g, c) = rect(2.0, 1.0, 0.125);
        let pot = condenser_potential(&g, &c, 2.0, 1e-12).unwrap();
        let levels = level_set_surfaces(&g, &pot, 5).unwrap();
        for l in &levels {
            assert!(c.separates(&l.set));
            assert!((l.perimeter - 1.0).abs() < 1e-12);
        }
        assert!(level_set_surfaces(&g, &pot, 0).is_err());
    }

    #[test]
    fn relative_capacity_edge_cases() {
        let g: MeasureGraph<f64> = build_grid(1.0, 1.0, 0.125, None).unwrap();
        let n = g.node_count();
        let w = ball(&g, 40, 0.4).unwrap();
        let a = ball(&g, 40, 0.2).unwrap();
        assert_eq!(relative_capacity(&g, &NodeSet::empty(n), &w, 2.0).unwrap(), 0.0);
        assert!(relative_capacity(&g, &w, &a, 2.0).is_err());
        let small = relative_capacity(&g, &a, &w, 2.0).unwrap();
        let full = relative_capacity(&g, &w, &w, 2.0).unwrap();
        assert!(small <= full);
        let cond = Condenser::whole(w.clone(), w.complement()).unwrap();
        assert!((full - capacity(&g, &cond, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn thinness_of_empty_and_full_sets() {
        let g: MeasureGraph<f64> = build_grid(2.0, 2.0, 1.0 / 16.0, None).unwrap();
        let n = g.node_count();
        let x = 16 * 33 + 16;
        let scales = [0.5, 0.25, 0.125];
        let r = thinness_index(&g, &NodeSet::empty(n), x, 2.0, &scales).unwrap();
        assert_eq!(r.index, 0.0);
        let r = thinness_index(&g, &NodeSet::full(n), x, 2.0, &scales).unwrap();
        let weights: f64 = r.rows.iter().map(|w| w.log_weight).sum();
        assert!((r.index - weights).abs() < 1e-12);
        assert!(thinness_index(&g, &NodeSet::full(n), x, 2.0, &[0.5, 0.3]).is_err());
        assert!(thinness_index(&g, &NodeSet::full(n), x, 2.0, &[0.0625]).is_err());
    }
}
