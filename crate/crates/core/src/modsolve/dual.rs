//! Dual coordinate ascent for the finite-constraint modulus program
//!
//! ```text
//! minimize Σ_e m(e) ρ(e)^p   subject to   Σ_e w_j(e) ρ(e) ≥ 1  for every j
//! ```
//!
//! For multipliers `λ ≥ 0` the minimizing density is
//! `ρ(e) = (s(e) / (p m(e)))^{1/(p-1)}` with `s = Σ_j λ_j w_j`, and the dual
//! function is `Σ λ_j − (p−1) Σ m ρ^p`. Each coordinate step maximizes the
//! dual exactly in one `λ_j`, which amounts to a monotone scalar root find.

use crate::families::Constraint;
use crate::mmspace::MeasureGraph;
use crate::scalar::Real;

pub(crate) struct DualSolver<'g, T> {
    graph: &'g MeasureGraph<T>,
    p: T,
    /// 1/(p−1)
    r: T,
    /// 1/(p m(e))
    coef: Vec<T>,
    cons: Vec<Constraint<T>>,
    /// Σ_e w (coef w)^r per constraint, gives an upper bracket for λ_j
    reach: Vec<T>,
    lambda: Vec<T>,
    s: Vec<T>,
}

impl<'g, T: Real> DualSolver<'g, T> {
    pub fn new(graph: &'g MeasureGraph<T>, p: T) -> Self {
        let coef = graph.edges().iter().map(|e| T::one() / (p * e.energy)).collect();
        DualSolver {
            graph,
            p,
            r: T::one() / (p - T::one()),
            coef,
            cons: Vec::new(),
            reach: Vec::new(),
            lambda: Vec::new(),
            s: vec![T::zero(); graph.edge_count()],
        }
    }

    pub fn push(&mut self, c: Constraint<T>) {
        let reach = c.edges.iter().zip(&c.weights).map(|(&e, &w)| w * (self.coef[e] * w).powf(self.r)).sum();
        self.cons.push(c);
        self.reach.push(reach);
        self.lambda.push(T::zero());
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.cons
    }

    pub fn multipliers(&self) -> &[T] {
        &self.lambda
    }

    #[inline]
    fn pow_r(&self, x: T) -> T {
        if self.r == T::one() {
            x
        } else {
            x.powf(self.r)
        }
    }

    #[inline]
    fn density(&self, e: usize, s: T) -> T {
        if s > T::zero() {
            self.pow_r(self.coef[e] * s)
        } else {
            T::zero()
        }
    }

    pub fn rho(&self) -> Vec<T> {
        (0..self.s.len()).map(|e| self.density(e, self.s[e])).collect()
    }

    /// `Σ λ_j − (p−1) Σ m ρ^p`, a lower bound on the restricted optimum.
    pub fn dual_value(&self) -> T {
        let lam: T = self.lambda.iter().copied().sum();
        let energy: T = self.graph.edges().iter().enumerate().map(|(k, e)| e.energy * self.density(k, self.s[k]).powf(self.p)).sum();
        lam - (self.p - T::one()) * energy
    }

    fn rebuild_s(&mut self) {
        self.s.iter_mut().for_each(|x| *x = T::zero());
        for (c, &l) in self.cons.iter().zip(&self.lambda) {
            if l > T::zero() {
                for (&e, &w) in c.edges.iter().zip(&c.weights) {
                    self.s[e] = self.s[e] + l * w;
                }
            }
        }
    }

    /// Exact maximization in `λ_j`; returns the KKT violation before the step.
    fn step(&mut self, j: usize) -> T {
        let one = T::one();
        let lam = self.lambda[j];
        let c = &self.cons[j];
        let load: T = c.edges.iter().zip(&c.weights).map(|(&e, &w)| w * self.density(e, self.s[e])).sum();
        let gap = one - load;
        let viol = if lam > T::zero() { gap.abs() } else { gap.max(T::zero()) };
        if viol == T::zero() {
            return viol;
        }

        // φ(x) = Σ w (coef (s0 + x w))^r, s0 = s − λ_j w
        let base: Vec<T> = c.edges.iter().zip(&c.weights).map(|(&e, &w)| (self.s[e] - lam * w).max(T::zero())).collect();
        let phi = |x: T| -> (T, T) {
            let mut f = T::zero();
            let mut df = T::zero();
            for ((&e, &w), &s0) in c.edges.iter().zip(&c.weights).zip(&base) {
                let arg = self.coef[e] * (s0 + x * w);
                if arg > T::zero() {
                    let v = self.pow_r(arg);
                    f = f + w * v;
                    df = df + w * self.r * v / arg * self.coef[e] * w;
                }
            }
            (f, df)
        };
        let new = if phi(T::zero()).0 >= one {
            T::zero()
        } else {
            let (mut lo, mut hi) = (T::zero(), (one / self.reach[j]).powf(self.p - one));
            let mut x = if lam > lo && lam < hi { lam } else { hi };
            for _ in 0..200 {
                let (f, df) = phi(x);
                if f < one {
                    lo = x;
                } else {
                    hi = x;
                }
                if (f - one).abs() <= T::epsilon() * T::lit(4.0) || hi - lo <= hi * T::epsilon() * T::lit(4.0) {
                    break;
                }
                let nx = x - (f - one) / df;
                x = if df > T::zero() && nx > lo && nx < hi { nx } else { (lo + hi) * T::lit(0.5) };
            }
            x
        };
        let delta = new - lam;
        if delta != T::zero() {
            let c = &self.cons[j];
            for (&e, &w) in c.edges.iter().zip(&c.weights) {
                self.s[e] = (self.s[e] + delta * w).max(T::zero());
            }
            self.lambda[j] = new;
        }
        viol
    }

    /// Cyclic sweeps until the largest KKT violation in a full sweep is
    /// below `tol`. Between full sweeps only constraints that are active or
    /// were violated are revisited. Returns the number of sweeps and the last
    /// full-sweep violation.
    pub fn solve(&mut self, tol: T, max_sweeps: usize) -> (usize, T) {
        self.rebuild_s();
        let mut sweeps = 0;
        let mut worst = T::infinity();
        while sweeps < max_sweeps {
            sweeps += 1;
            worst = T::zero();
            let mut working = Vec::new();
            for j in 0..self.cons.len() {
                let v = self.step(j);
                worst = worst.max(v);
                if self.lambda[j] > T::zero() || v >= tol {
                    working.push(j);
                }
            }
            if worst < tol {
                break;
            }
            while sweeps < max_sweeps {
                sweeps += 1;
                let mut inner = T::zero();
                for &j in &working {
                    inner = inner.max(self.step(j));
                }
                if inner < tol {
                    break;
                }
            }
        }
        (sweeps, worst)
    }
}
