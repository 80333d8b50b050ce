//! Reference solver for explicitly listed families.
//!
//! Solves the primal `min Σ m ρ^p` subject to `Σ_e w_j(e) ρ(e) ≥ 1` for every
//! listed measure by a log-barrier interior-point method with dense Newton
//! steps over the edges the family touches. The strictly feasible iterate
//! gives the upper end of the bracket; the multipliers `λ_j = 1/(t r_j)`
//! implied by the barrier give the Lagrangian lower end.

use crate::error::{invalid, Result};
use crate::families::Constraint;
use crate::mmspace::MeasureGraph;
use crate::scalar::Real;

/// Newton steps allowed per barrier parameter.
const CENTERING_STEPS: usize = 60;

/// Certified bracket returned by [`brute_force_bracket`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    pub lower: T,
    pub upper: T,
    /// Newton steps taken.
    pub iterations: usize,
}

/// `Mod_p` of an explicitly enumerated family, to relative accuracy `1e-8`
/// (the certified lower end of the bracket). An empty list has modulus 0.
pub fn brute_force_modulus<T: Real>(graph: &MeasureGraph<T>, constraints: &[Constraint<T>], p: T) -> Result<T> {
    Ok(brute_force_bracket(graph, constraints, p, T::lit(1e-8).max(T::tol_floor()), 10_000)?.lower)
}

/// Brackets `Mod_p` of the listed family until the relative gap is at most
/// `rel_gap` or `max_iter` Newton steps were spent.
pub fn brute_force_bracket<T: Real>(
    graph: &MeasureGraph<T>,
    constraints: &[Constraint<T>],
    p: T,
    rel_gap: T,
    max_iter: usize,
) -> Result<Bracket<T>> {
    if !(p > T::one()) {
        return invalid("exponent must exceed 1");
    }
    if constraints.is_empty() {
        return Ok(Bracket { lower: T::zero(), upper: T::zero(), iterations: 0 });
    }
    if constraints.iter().any(|c| c.edges.is_empty()) {
        // a measure with empty support can never reach 1
        return Ok(Bracket { lower: T::infinity(), upper: T::infinity(), iterations: 0 });
    }
    let one = T::one();
    let two = T::lit(2.0);

    // local edge indices and the dense constraint matrix
    let mut local = vec![usize::MAX; graph.edge_count()];
    let mut support = Vec::new();
    for c in constraints {
        for &e in &c.edges {
            if local[e] == usize::MAX {
                local[e] = support.len();
                support.push(e);
            }
        }
    }
    let d = support.len();
    let k = constraints.len();
    let mut a = vec![T::zero(); k * d];
    for (j, c) in constraints.iter().enumerate() {
        for (&e, &w) in c.edges.iter().zip(&c.weights) {
            a[j * d + local[e]] = a[j * d + local[e]] + w;
        }
    }
    let m: Vec<T> = support.iter().map(|&e| graph.edge(e).energy).collect();
    let row = |j: usize| &a[j * d..(j + 1) * d];
    let slacks = |rho: &[T]| -> Vec<T> { (0..k).map(|j| row(j).iter().zip(rho).map(|(&w, &r)| w * r).sum::<T>() - one).collect() };
    let energy = |rho: &[T]| -> T { rho.iter().zip(&m).map(|(&r, &me)| me * r.powf(p)).sum() };
    let barrier = |rho: &[T], t: T| -> Option<T> {
        if rho.iter().any(|&r| !(r > T::zero())) {
            return None;
        }
        let r = slacks(rho);
        if r.iter().any(|&x| !(x > T::zero())) {
            return None;
        }
        Some(t * energy(rho) - r.iter().map(|x| x.ln()).sum::<T>() - rho.iter().map(|x| x.ln()).sum::<T>())
    };

    // strictly feasible start: every slack at least 1
    let reach = (0..k).map(|j| row(j).iter().copied().sum::<T>()).fold(T::infinity(), T::min);
    let mut rho = vec![two / reach; d];
    let count = T::of_usize(k + d);
    let mut t = count / energy(&rho);
    let mut iterations = 0;
    let mut best = (T::zero(), T::infinity());
    let mut grad = vec![T::zero(); d];
    let mut hess = vec![T::zero(); d * d];
    let mut trial = vec![T::zero(); d];
    loop {
        // centre for the current t
        for _ in 0..CENTERING_STEPS {
            let r = slacks(&rho);
            for e in 0..d {
                grad[e] = t * m[e] * p * rho[e].powf(p - one) - one / rho[e];
            }
            hess.iter_mut().for_each(|h| *h = T::zero());
            for e in 0..d {
                hess[e * d + e] = t * m[e] * p * (p - one) * rho[e].powf(p - two) + one / (rho[e] * rho[e]);
            }
            for (j, &rj) in r.iter().enumerate().take(k) {
                let w = row(j);
                let inv = one / rj;
                let inv2 = inv * inv;
                for e in 0..d {
                    if w[e] == T::zero() {
                        continue;
                    }
                    grad[e] = grad[e] - w[e] * inv;
                    for f in e..d {
                        hess[e * d + f] = hess[e * d + f] + w[e] * w[f] * inv2;
                    }
                }
            }
            for e in 0..d {
                for f in 0..e {
                    hess[e * d + f] = hess[f * d + e];
                }
            }
            let Some(step) = cholesky_solve(&mut hess, &grad, d) else { break };
            // squared Newton decrement gᵀH⁻¹g, affine invariant
            let dec: T = grad.iter().zip(&step).map(|(&g, &s)| g * s).sum();
            iterations += 1;
            if !(dec > T::lit(1e-14)) || iterations >= max_iter {
                break;
            }
            let feasible = |x: &[T]| x.iter().all(|&v| v > T::zero()) && slacks(x).iter().all(|&v| v > T::zero());
            let mut s = one;
            if dec < T::lit(0.25) {
                // quadratic region: take the full step whenever it stays interior,
                // barrier values are too flat here to be compared reliably
                for _ in 0..60 {
                    for e in 0..d {
                        trial[e] = rho[e] - s * step[e];
                    }
                    if feasible(&trial) {
                        break;
                    }
                    s = s * T::lit(0.5);
                }
            } else {
                let f0 = barrier(&rho, t).expect("iterate stays strictly feasible");
                for _ in 0..60 {
                    for e in 0..d {
                        trial[e] = rho[e] - s * step[e];
                    }
                    if barrier(&trial, t).is_some_and(|f1| f1 <= f0 - T::lit(0.25) * s * dec) {
                        break;
                    }
                    s = s * T::lit(0.5);
                }
            }
            if !feasible(&trial) {
                break;
            }
            rho.copy_from_slice(&trial);
        }

        let upper = energy(&rho);
        let r = slacks(&rho);
        // Lagrangian value at λ_j = 1/(t r_j), ν_e = 1/(t ρ_e)
        let lam_sum: T = r.iter().map(|&x| one / (t * x)).sum();
        let mut load: Vec<T> = rho.iter().map(|&x| one / (t * x)).collect();
        for (j, &rj) in r.iter().enumerate() {
            let lam = one / (t * rj);
            for (l, &w) in load.iter_mut().zip(row(j)) {
                *l = *l + lam * w;
            }
        }
        let inner: T = load
            .iter()
            .zip(&m)
            .map(|(&c, &me)| {
                let x = (c / (p * me)).powf(one / (p - one));
                me * x.powf(p)
            })
            .sum();
        let lower = lam_sum - (p - one) * inner;
        best = (best.0.max(lower), best.1.min(upper));
        if best.1 - best.0 <= rel_gap * best.1 || iterations >= max_iter || !(t < T::max_value() / T::lit(100.0)) {
            return Ok(Bracket { lower: best.0.max(T::zero()), upper: best.1, iterations });
        }
        t = t * T::lit(8.0);
    }
}

/// Solves `H x = g` for symmetric positive definite `H` (overwritten by its
/// Cholesky factor). `None` if `H` is not numerically positive definite.
fn cholesky_solve<T: Real>(h: &mut [T], g: &[T], d: usize) -> Option<Vec<T>> {
    for j in 0..d {
        let mut diag = h[j * d + j];
        for k in 0..j {
            diag = diag - h[j * d + k] * h[j * d + k];
        }
        if !(diag > T::zero()) {
            return None;
        }
        let l = diag.sqrt();
        h[j * d + j] = l;
        for i in j + 1..d {
            let mut x = h[i * d + j];
            for k in 0..j {
                x = x - h[i * d + k] * h[j * d + k];
            }
            h[i * d + j] = x / l;
        }
    }
    let mut y = g.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] = y[i] - h[i * d + k] * y[k];
        }
        y[i] = y[i] / h[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] = y[i] - h[k * d + i] * y[k];
        }
        y[i] = y[i] / h[i * d + i];
    }
    Some(y)
}
