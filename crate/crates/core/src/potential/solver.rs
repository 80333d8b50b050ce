//! Minimizer of the discrete p-energy `Σ_e m(e) |(u(a) − u(b)) / ℓ(e)|^p`
//! with Dirichlet data.
//!
//! Newton iterations on the free nodes (Jacobi-preconditioned conjugate
//! gradients for the step, Armijo backtracking on the energy) followed by
//! node-wise relaxation sweeps that polish every free node to its exact
//! one-dimensional minimizer.

use crate::mmspace::MeasureGraph;
use crate::scalar::Real;

pub(crate) struct SolveStats {
    pub newton_steps: usize,
    pub sweeps: usize,
}

struct Link<T> {
    a: usize,
    b: usize,
    /// m / ℓ^p
    k: T,
    /// 1 / ℓ
    inv_len: T,
}

/// Solves in place. `free[v]` marks unknowns; all other entries of `u` are
/// boundary values. Only edges with both endpoints in `active` contribute.
pub(crate) fn minimize_energy<T: Real>(graph: &MeasureGraph<T>, active: &[bool], free: &[bool], u: &mut [T], p: T, tol: T) -> SolveStats {
    let n = graph.node_count();
    let mut local = vec![usize::MAX; n];
    let mut globals = Vec::new();
    for v in 0..n {
        if free[v] {
            local[v] = globals.len();
            globals.push(v);
        }
    }
    if globals.is_empty() {
        return SolveStats { newton_steps: 0, sweeps: 0 };
    }
    let links: Vec<Link<T>> = graph
        .edges()
        .iter()
        .filter(|e| active[e.a] && active[e.b] && (free[e.a] || free[e.b]))
        .map(|e| Link { a: e.a, b: e.b, k: e.energy / e.length.powf(p), inv_len: T::one() / e.length })
        .collect();

    let two = T::lit(2.0);
    // harmonic start: one exact Newton step of the quadratic energy
    newton(&links, &local, &globals, u, two, tol, 1);
    // inexact steps (CG to 1e-4): repeat until the update stalls, even for p = 2
    let steps = 1 + newton(&links, &local, &globals, u, p, tol, 200);
    let sweeps = relax(graph, active, &globals, u, p, tol, 500);
    SolveStats { newton_steps: steps, sweeps }
}

fn energy<T: Real>(links: &[Link<T>], u: &[T], p: T) -> T {
    links.iter().map(|l| l.k * (u[l.a] - u[l.b]).abs().powf(p)).sum()
}

fn newton<T: Real>(links: &[Link<T>], local: &[usize], globals: &[usize], u: &mut [T], p: T, tol: T, max_steps: usize) -> usize {
    let nf = globals.len();
    let one = T::one();
    let mut e_prev = energy(links, u, p);
    let mut trial = u.to_vec();
    for step in 1..=max_steps {
        // regularization scale for zero-gradient edges
        let rms = (links.iter().map(|l| ((u[l.a] - u[l.b]) * l.inv_len).powi(2)).sum::<T>() / T::of_usize(links.len().max(1))).sqrt();
        let delta = (rms * T::lit(1e-3)).max(T::min_positive_value().sqrt());
        let mut grad = vec![T::zero(); nf];
        let mut weight = Vec::with_capacity(links.len());
        for l in links {
            let diff = u[l.a] - u[l.b];
            // dJ/d(diff) = k p |diff|^{p-1} sgn
            let g = l.k * p * diff.abs().powf(p - one) * diff.signum();
            let d = diff * l.inv_len;
            let c = l.k * p * (p - one) * (d * d + delta * delta).powf((p - T::lit(2.0)) * T::lit(0.5)) * l.inv_len.powf(T::lit(2.0) - p);
            weight.push(c);
            if local[l.a] != usize::MAX {
                grad[local[l.a]] = grad[local[l.a]] + g;
            }
            if local[l.b] != usize::MAX {
                grad[local[l.b]] = grad[local[l.b]] - g;
            }
        }
        let gnorm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
        if gnorm == T::zero() {
            return step;
        }
        let dir = conjugate_gradient(links, &weight, local, &grad, T::lit(1e-4).max(T::tol_floor()), 20 * nf + 100);

        let slope: T = grad.iter().zip(&dir).map(|(&g, &d)| g * d).sum();
        let mut alpha = one;
        let mut e_new = e_prev;
        let mut accepted = false;
        for _ in 0..60 {
            trial.copy_from_slice(u);
            for (i, &v) in globals.iter().enumerate() {
                trial[v] = (u[v] + alpha * dir[i]).max(T::zero()).min(one);
            }
            e_new = energy(links, &trial, p);
            if e_new <= e_prev + T::lit(1e-4) * alpha * slope || e_new <= e_prev * (one - T::epsilon()) {
                accepted = true;
                break;
            }
            alpha = alpha * T::lit(0.5);
        }
        if !accepted {
            return step;
        }
        let moved = globals.iter().map(|&v| (trial[v] - u[v]).abs()).fold(T::zero(), T::max);
        u.copy_from_slice(&trial);
        let change = (e_prev - e_new).abs() / e_new.max(T::min_positive_value());
        e_prev = e_new;
        if moved < tol && change < tol {
            return step;
        }
    }
    max_steps
}

/// Solves `H x = −g` with `H = Σ c_e (χ_a − χ_b)(χ_a − χ_b)^T` on free nodes.
fn conjugate_gradient<T: Real>(links: &[Link<T>], weight: &[T], local: &[usize], grad: &[T], rel: T, max_iter: usize) -> Vec<T> {
    let nf = grad.len();
    let apply = |x: &[T], out: &mut [T]| {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (l, &c) in links.iter().zip(weight) {
            let (ia, ib) = (local[l.a], local[l.b]);
            let xa = if ia != usize::MAX { x[ia] } else { T::zero() };
            let xb = if ib != usize::MAX { x[ib] } else { T::zero() };
            let f = c * (xa - xb);
            if ia != usize::MAX {
                out[ia] = out[ia] + f;
            }
            if ib != usize::MAX {
                out[ib] = out[ib] - f;
            }
        }
    };
    let mut diag = vec![T::zero(); nf];
    for (l, &c) in links.iter().zip(weight) {
        if local[l.a] != usize::MAX {
            diag[local[l.a]] = diag[local[l.a]] + c;
        }
        if local[l.b] != usize::MAX {
            diag[local[l.b]] = diag[local[l.b]] + c;
        }
    }
    let mut x = vec![T::zero(); nf];
    let mut r: Vec<T> = grad.iter().map(|&g| -g).collect();
    let r0 = r.iter().map(|&v| v * v).sum::<T>().sqrt();
    let mut z: Vec<T> = r.iter().zip(&diag).map(|(&a, &d)| if d > T::zero() { a / d } else { a }).collect();
    let mut d = z.clone();
    let mut rz: T = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let mut hd = vec![T::zero(); nf];
    for _ in 0..max_iter {
        apply(&d, &mut hd);
        let dhd: T = d.iter().zip(&hd).map(|(&a, &b)| a * b).sum();
        if !(dhd > T::zero()) {
            break;
        }
        let alpha = rz / dhd;
        for i in 0..nf {
            x[i] = x[i] + alpha * d[i];
            r[i] = r[i] - alpha * hd[i];
        }
        let rn = r.iter().map(|&v| v * v).sum::<T>().sqrt();
        if rn <= rel * r0 {
            break;
        }
        for i in 0..nf {
            z[i] = if diag[i] > T::zero() { r[i] / diag[i] } else { r[i] };
        }
        let rz_new: T = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..nf {
            d[i] = z[i] + beta * d[i];
        }
    }
    x
}

/// Gauss–Seidel sweeps of exact node-wise minimization.
fn relax<T: Real>(graph: &MeasureGraph<T>, active: &[bool], globals: &[usize], u: &mut [T], p: T, tol: T, max_sweeps: usize) -> usize {
    let mut nb: Vec<(T, T)> = Vec::new();
    for sweep in 1..=max_sweeps {
        let mut moved = T::zero();
        for &v in globals {
            nb.clear();
            for &(w, e) in graph.neighbors(v) {
                if active[w] {
                    let ed = graph.edge(e);
                    nb.push((u[w], ed.energy / ed.length.powf(p)));
                }
            }
            let x = node_minimizer(&nb, u[v], p, tol);
            moved = moved.max((x - u[v]).abs());
            u[v] = x;
        }
        if moved < tol {
            return sweep;
        }
    }
    max_sweeps
}

/// argmin_x Σ k |x − v|^p.
fn node_minimizer<T: Real>(nb: &[(T, T)], start: T, p: T, tol: T) -> T {
    if nb.is_empty() {
        return start;
    }
    let one = T::one();
    let two = T::lit(2.0);
    if p == two {
        let (s, w) = nb.iter().fold((T::zero(), T::zero()), |(s, w), &(v, k)| (s + k * v, w + k));
        return s / w;
    }
    let deriv = |x: T| -> (T, T) {
        let mut f = T::zero();
        let mut df = T::zero();
        for &(v, k) in nb {
            let d = x - v;
            let a = d.abs();
            if a > T::zero() {
                f = f + k * p * a.powf(p - one) * d.signum();
                df = df + k * p * (p - one) * a.powf(p - two);
            }
        }
        (f, df)
    };
    let mut lo = nb.iter().map(|&(v, _)| v).fold(T::infinity(), T::min);
    let mut hi = nb.iter().map(|&(v, _)| v).fold(T::neg_infinity(), T::max);
    if hi - lo <= T::zero() {
        return lo;
    }
    let eps = (tol * T::lit(1e-3)).max(T::epsilon() * T::lit(4.0));
    let mut x = start.max(lo).min(hi);
    for _ in 0..200 {
        let (f, df) = deriv(x);
        if f == T::zero() {
            return x;
        }
        if f > T::zero() {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= eps {
            break;
        }
        let nx = x - f / df;
        x = if df.is_finite() && df > T::zero() && nx > lo && nx < hi { nx } else { (lo + hi) / two };
    }
    x
}
