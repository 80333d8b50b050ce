//! `Mod_p` of connecting curve families and separating cut families.
//!
//! [`modulus`] runs constraint generation: solve the program restricted to
//! the measures found so far, ask the family oracle for the most violated
//! measure under the current density, add it, repeat. The restricted optimum
//! is always a lower bound for the family modulus and the density rescaled by
//! the final oracle value is admissible, so every result carries a certified
//! bracket.

mod brute;
mod dual;

use std::collections::HashSet;

use serde::Serialize;

pub use brute::{brute_force_bracket, brute_force_modulus, Bracket};

use crate::error::{invalid, Error, Result};
use crate::families::{curve_harvest, cut_harvest, cut_oracle, Condenser, Constraint, ConstraintKind, DensityField};
use crate::mmspace::MeasureGraph;
use crate::potential::{condenser_potential, current_paths, level_cuts};
use crate::scalar::Real;
use dual::DualSolver;

/// Stopping rules of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances<T> {
    /// Stop only once the oracle value is at least `1 − feasibility`.
    pub feasibility: T,
    /// Relative energy change between outer iterations, also the KKT
    /// tolerance of the inner solve.
    pub objective: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances { feasibility: T::lit(1e-4).max(T::tol_floor()), objective: T::lit(1e-4).max(T::tol_floor()), max_iterations: 50_000 }
    }
}

impl<T: Real> Tolerances<T> {
    /// Tight settings for small reference instances.
    pub fn strict() -> Self {
        Tolerances { feasibility: T::lit(1e-10).max(T::tol_floor()), objective: T::lit(1e-12).max(T::tol_floor()), max_iterations: 50_000 }
    }
}

#[derive(Debug, Clone)]
pub struct ModulusProblem<'a, T> {
    pub graph: &'a MeasureGraph<T>,
    pub condenser: &'a Condenser,
    pub kind: ConstraintKind,
    pub p: T,
    pub tol: Tolerances<T>,
    /// Measures of the family added before the first restricted solve.
    pub seeds: Vec<Constraint<T>>,
    /// Most violated measures added per outer iteration (1 = one per round).
    pub batch: usize,
}

/// Default number of measures harvested per outer iteration.
pub const DEFAULT_BATCH: usize = 256;

impl<'a, T: Real> ModulusProblem<'a, T> {
    pub fn new(graph: &'a MeasureGraph<T>, condenser: &'a Condenser, kind: ConstraintKind, p: T) -> Result<Self> {
        let prob = ModulusProblem { graph, condenser, kind, p, tol: Tolerances::default(), seeds: Vec::new(), batch: DEFAULT_BATCH };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Result<Self> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    /// Warm start: measures known to belong to the family. They only speed up
    /// convergence; the result is still certified by the oracle.
    pub fn with_seeds(mut self, seeds: Vec<Constraint<T>>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        self.batch = batch;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > T::one()) || !self.p.is_finite() {
            return invalid("exponent p must satisfy 1 < p < ∞");
        }
        let unit = |x: T| x > T::zero() && x < T::one();
        if !unit(self.tol.feasibility) || !unit(self.tol.objective) {
            return invalid("tolerances must lie in (0, 1)");
        }
        if self.tol.max_iterations == 0 {
            return invalid("iteration cap must be positive");
        }
        if self.batch == 0 {
            return invalid("batch size must be positive");
        }
        self.condenser.check_graph(self.graph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// No curve joins `E` and `F` inside `Ω`; the modulus is 0.
    EmptyFamily,
    /// Some separating set has no boundary inside `Ω`, so no density is
    /// admissible and the modulus is `+∞`.
    Unbounded,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusResult<T> {
    pub kind: ConstraintKind,
    pub p: T,
    /// Restricted optimum `Σ m ρ^p` over the generated constraints.
    pub value: T,
    /// Dual certificate, `≤ Mod_p`.
    pub lower_bound: T,
    /// Energy of [`Self::rho`], `≥ Mod_p`.
    pub upper_bound: T,
    /// Extremal density rescaled to be exactly admissible.
    pub rho: DensityField<T>,
    /// `max(0, 1 − oracle)` for the restricted optimum.
    pub residual: T,
    /// Constraints with a positive multiplier (empty when [`warm_modulus`]
    /// certified the bracket from the potential alone).
    pub active: Vec<Constraint<T>>,
    pub generated: usize,
    pub iterations: usize,
    pub status: Status,
}

/// Compact serializable summary of a [`ModulusResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusReport<T> {
    pub kind: ConstraintKind,
    pub status: Status,
    pub p: T,
    pub value: T,
    pub lower_bound: T,
    pub upper_bound: T,
    pub residual: T,
    pub iterations: usize,
    pub constraints: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<T>>,
}

impl<T: Real> ModulusResult<T> {
    pub fn report(&self, with_rho: bool) -> ModulusReport<T> {
        ModulusReport {
            kind: self.kind,
            status: self.status,
            p: self.p,
            value: self.value,
            lower_bound: self.lower_bound,
            upper_bound: self.upper_bound,
            residual: self.residual,
            iterations: self.iterations,
            constraints: self.active.len(),
            rho: with_rho.then(|| self.rho.values().to_vec()),
        }
    }

    fn degenerate(graph: &MeasureGraph<T>, kind: ConstraintKind, p: T, status: Status) -> Self {
        let value = if status == Status::Unbounded { T::infinity() } else { T::zero() };
        ModulusResult {
            kind,
            p,
            value,
            lower_bound: value,
            upper_bound: value,
            rho: DensityField::from_raw(vec![T::zero(); graph.edges().len()]),
            residual: T::zero(),
            active: Vec::new(),
            generated: 0,
            iterations: 0,
            status,
        }
    }
}

/// Violated measures under `rho`, most violated first; the first entry is the
/// oracle's minimizer.
fn harvest<T: Real>(prob: &ModulusProblem<'_, T>, rho: &DensityField<T>) -> Result<Vec<(Constraint<T>, T)>> {
    match prob.kind {
        ConstraintKind::Curve => curve_harvest(prob.graph, prob.condenser, rho, T::one(), prob.batch),
        ConstraintKind::Cut => {
            if prob.batch > 1 {
                cut_harvest(prob.graph, prob.condenser, rho)
            } else {
                Ok(vec![cut_oracle(prob.graph, prob.condenser, rho)?])
            }
        }
    }
}

/// Inner sweeps allowed per outer iteration.
const SWEEPS_PER_ROUND: usize = 10_000;

/// Loosest KKT tolerance used for early restricted solves.
const LOOSE_INNER: f64 = 1e-2;

pub fn modulus<T: Real>(prob: &ModulusProblem<'_, T>) -> Result<ModulusResult<T>> {
    generate(prob, None)
}

/// Constraint generation; `incumbent` is an optional candidate density whose
/// rescaling supplies an upper bound from the start.
fn generate<T: Real>(prob: &ModulusProblem<'_, T>, incumbent: Option<DensityField<T>>) -> Result<ModulusResult<T>> {
    prob.validate()?;
    let graph = prob.graph;
    let p = prob.p;
    let tol = prob.tol;

    let ones = DensityField::constant(graph, T::one());
    let first = match harvest(prob, &ones) {
        Ok(batch) => batch,
        Err(Error::EmptyFamily) => return Ok(ModulusResult::degenerate(graph, prob.kind, p, Status::EmptyFamily)),
        Err(e) => return Err(e),
    };
    if first[0].0.edges.is_empty() {
        return Ok(ModulusResult::degenerate(graph, prob.kind, p, Status::Unbounded));
    }

    let mut solver = DualSolver::new(graph, p);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for c in first.into_iter().map(|(c, _)| c).chain(prob.seeds.iter().cloned()) {
        if !c.edges.is_empty() && c.kind == prob.kind && seen.insert(c.edges.clone()) {
            solver.push(c);
        }
    }

    // best admissible density seen so far and its energy
    let mut best: Option<(DensityField<T>, T)> = None;
    let offer = |rho: &DensityField<T>, value: T, best: &mut Option<(DensityField<T>, T)>| {
        if value > T::zero() {
            let cand = rho.scaled(T::one() / value);
            let e = cand.energy(graph, p);
            if best.as_ref().is_none_or(|(_, b)| e < *b) {
                *best = Some((cand, e));
            }
        }
    };
    if let Some(rho) = incumbent {
        let value = harvest(prob, &rho)?[0].1;
        offer(&rho, value, &mut best);
    }

    let mut base_tol = tol.objective;
    // seeded runs start close to the optimum, so solve them tightly at once
    let mut gap = if prob.seeds.is_empty() { T::infinity() } else { T::zero() };
    let mut previous: Option<T> = None;
    let mut status = Status::IterationCap;
    let mut iterations = 0;
    let mut rho;
    let mut energy;
    let mut value_at_rho;
    loop {
        iterations += 1;
        let inner_tol = if gap <= tol.feasibility { base_tol } else { base_tol.max((gap * T::lit(0.1)).min(T::lit(LOOSE_INNER))) };
        solver.solve(inner_tol, SWEEPS_PER_ROUND);
        rho = DensityField::from_raw(solver.rho());
        energy = rho.energy(graph, p);
        let batch = harvest(prob, &rho)?;
        value_at_rho = batch[0].1;
        if batch[0].0.edges.is_empty() {
            return Ok(ModulusResult::degenerate(graph, prob.kind, p, Status::Unbounded));
        }
        gap = (T::one() - value_at_rho).max(T::zero());
        offer(&rho, value_at_rho, &mut best);
        let lower = solver.dual_value();
        let certified = best.as_ref().is_some_and(|(_, b)| *b - lower <= tol.objective * *b);
        let change = previous.map_or(T::infinity(), |e| (energy - e).abs() / energy.max(T::min_positive_value()));
        if inner_tol <= base_tol && (certified || (value_at_rho >= T::one() - tol.feasibility && change < tol.objective)) {
            status = Status::Converged;
            break;
        }
        if iterations >= tol.max_iterations {
            break;
        }
        previous = Some(energy);
        let mut added = false;
        for (c, v) in batch {
            if v < T::one() && seen.insert(c.edges.clone()) {
                solver.push(c);
                added = true;
            }
        }
        if !added && value_at_rho < T::one() && inner_tol <= base_tol {
            // the oracle returned known constraints: the inner solve was not tight enough
            base_tol = (base_tol * T::lit(0.1)).max(T::tol_floor());
        }
    }

    let (admissible, upper) = best.unwrap_or_else(|| (rho.scaled(T::zero()), T::infinity()));
    let lower = solver.dual_value().min(energy).max(T::zero());
    let active = solver.constraints().iter().zip(solver.multipliers()).filter(|(_, &l)| l > T::zero()).map(|(c, _)| c.clone()).collect();
    Ok(ModulusResult {
        kind: prob.kind,
        p,
        value: energy,
        lower_bound: lower,
        upper_bound: upper,
        rho: admissible,
        residual: (T::one() - value_at_rho).max(T::zero()),
        active,
        generated: solver.constraints().len(),
        iterations,
        status,
    })
}

/// Level sets used to seed cut families in [`warm_modulus`].
pub const SEED_LEVELS: usize = 512;

/// Best value of the Lagrangian dual along the ray `λ = c λ̃`, given the
/// aggregated weights `s̃ = Σ λ̃_j w_j` and `a = Σ λ̃_j`. Any ray gives a
/// lower bound on the modulus.
fn ray_bound<T: Real>(graph: &MeasureGraph<T>, p: T, s: &[T], a: T) -> T {
    let r = T::one() / (p - T::one());
    let b: T =
        graph.edges().iter().zip(s).filter(|(_, &x)| x > T::zero()).map(|(e, &x)| e.energy * (x / (p * e.energy)).powf(r).powf(p)).sum();
    if !(a > T::zero() && b > T::zero()) {
        return T::zero();
    }
    let c = (a / (p * b)).powf(p - T::one());
    c * a / p
}

/// [`modulus`] started from the capacitary potential of the condenser (at
/// exponent `p` for curves, `q/(q−1)` for cuts). The potential predicts the
/// extremal density, checked by the oracle for the upper bound, and a dual
/// certificate: its current split into paths for curves, its level cuts
/// (coarea) for cuts. When the bracket already meets the objective
/// tolerance it is returned as is (no iterations, no active list);
/// otherwise constraint generation continues from these seeds.
pub fn warm_modulus<T: Real>(prob: &ModulusProblem<'_, T>) -> Result<ModulusResult<T>> {
    prob.validate()?;
    let graph = prob.graph;
    let p = prob.p;
    let exponent = match prob.kind {
        ConstraintKind::Curve => p,
        ConstraintKind::Cut => p / (p - T::one()),
    };
    let pot = condenser_potential(graph, prob.condenser, exponent, T::lit(1e-10))?;
    let grad = pot.gradient(graph);
    let mut s = vec![T::zero(); graph.edge_count()];
    let (guess, a, paths) = match prob.kind {
        ConstraintKind::Curve => {
            let paths = current_paths(graph, &pot, T::one() - T::lit(1e-9), 1_000_000);
            let mut a = T::zero();
            for (c, f) in &paths {
                a = a + *f;
                for (&e, &w) in c.edges.iter().zip(&c.weights) {
                    s[e] = s[e] + *f * w;
                }
            }
            (grad, a, paths.into_iter().map(|(c, _)| c).collect())
        }
        ConstraintKind::Cut => {
            // weighting the cut {u ≥ t} by the gap below t recovers |Δu| on every edge
            let omega = prob.condenser.omega();
            let level = |v: usize| pot.u[v].max(T::zero()).min(T::one());
            for (k, e) in graph.edges().iter().enumerate() {
                if graph.edge_inside(k, omega) {
                    s[k] = e.cross * (level(e.a) - level(e.b)).abs();
                }
            }
            let r = exponent - T::one();
            (grad.into_iter().map(|g| g.powf(r)).collect(), T::one(), Vec::new())
        }
    };
    let guess = DensityField::from_raw(guess);
    let lower = ray_bound(graph, p, &s, a);
    let (first, value) = match harvest(prob, &guess) {
        Ok(mut batch) => batch.swap_remove(0),
        Err(Error::EmptyFamily) => return Ok(ModulusResult::degenerate(graph, prob.kind, p, Status::EmptyFamily)),
        Err(e) => return Err(e),
    };
    if first.edges.is_empty() {
        return Ok(ModulusResult::degenerate(graph, prob.kind, p, Status::Unbounded));
    }
    if value > T::zero() {
        let rho = guess.scaled(T::one() / value);
        let upper = rho.energy(graph, p);
        if upper - lower <= prob.tol.objective * upper {
            return Ok(ModulusResult {
                kind: prob.kind,
                p,
                value: upper,
                lower_bound: lower.min(upper),
                upper_bound: upper,
                rho,
                residual: T::zero(),
                active: Vec::new(),
                generated: 0,
                iterations: 0,
                status: Status::Converged,
            });
        }
    }
    let seeds = match prob.kind {
        ConstraintKind::Curve => paths,
        ConstraintKind::Cut => level_cuts(graph, &pot, SEED_LEVELS),
    };
    let mut seeded = prob.clone();
    seeded.seeds.extend(seeds);
    generate(&seeded, Some(guess))
}

/// Unique minimizer of `Σ m ρ^p` subject to the listed constraints, by dual
/// coordinate ascent to KKT tolerance `tol`.
pub fn restricted_solve<T: Real>(graph: &MeasureGraph<T>, constraints: &[Constraint<T>], p: T, tol: T) -> Result<DensityField<T>> {
    if constraints.is_empty() {
        return invalid("restricted solve needs at least one constraint");
    }
    if !(p > T::one()) {
        return invalid("exponent must exceed 1");
    }
    if constraints.iter().any(|c| c.edges.is_empty()) {
        return invalid("constraint with empty support is infeasible");
    }
    let mut solver = DualSolver::new(graph, p);
    for c in constraints {
        solver.push(c.clone());
    }
    solver.solve(tol.max(T::tol_floor()), 1_000_000);
    Ok(DensityField::from_raw(solver.rho()))
}

/// Convenience wrapper: modulus of the curve (`Mod_p(Γ)`) or cut family of a
/// condenser with default tolerances.
pub fn family_modulus<T: Real>(graph: &MeasureGraph<T>, cond: &Condenser, kind: ConstraintKind, p: T) -> Result<ModulusResult<T>> {
    modulus(&ModulusProblem::new(graph, cond, kind, p)?)
}
