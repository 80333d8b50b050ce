//! Outer-measure behaviour of `Mod_p` on explicit families of a 3×3 grid.

mod common;

use common::rel;
use dualmod::families::{all_curve_constraints, all_cut_constraints};
use dualmod::mmspace::build_grid;
use dualmod::modsolve::{brute_force_modulus, modulus, ModulusProblem, Tolerances};
use dualmod::presets::CondenserSpec;
use dualmod::{Condenser, Constraint, ConstraintKind, MeasureGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];

fn grid() -> (MeasureGraph<f64>, Condenser) {
    let g = build_grid(1.0, 1.0, 0.5, None).unwrap();
    let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
    (g, c)
}

fn families(g: &MeasureGraph<f64>, c: &Condenser) -> [Vec<Constraint<f64>>; 2] {
    [all_curve_constraints(g, c, 10_000).unwrap(), all_cut_constraints(g, c).unwrap()]
}

fn scaled(c: &Constraint<f64>, s: f64) -> Constraint<f64> {
    let mut out = c.clone();
    out.weights.iter_mut().for_each(|w| *w *= s);
    out
}

#[test]
fn monotone_under_inclusion() {
    let (g, c) = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in families(&g, &c) {
        for p in EXPONENTS {
            for _ in 0..10 {
                let mut sub: Vec<_> = family.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                if sub.is_empty() {
                    sub.push(family[0].clone());
                }
                let small = brute_force_modulus(&g, &sub, p).unwrap();
                let big = brute_force_modulus(&g, &family, p).unwrap();
                assert!(small <= big * (1.0 + 1e-7), "p={p}: {small} > {big}");
            }
        }
    }
}

#[test]
fn subadditive_over_unions() {
    let (g, c) = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for family in families(&g, &c) {
        for p in EXPONENTS {
            for _ in 0..10 {
                let mut shuffled = family.clone();
                shuffled.shuffle(&mut rng);
                let cut = rng.gen_range(1..shuffled.len());
                let (a, b) = shuffled.split_at(cut);
                let whole = brute_force_modulus(&g, &family, p).unwrap();
                let parts = brute_force_modulus(&g, a, p).unwrap() + brute_force_modulus(&g, b, p).unwrap();
                assert!(whole <= parts * (1.0 + 1e-7), "p={p}: {whole} > {parts}");
            }
        }
    }
}

#[test]
fn continuity_from_below_along_a_finite_chain() {
    // adding the cuts one at a time climbs to the full family's value
    let (g, c) = grid();
    let cuts = all_cut_constraints(&g, &c).unwrap();
    for p in EXPONENTS {
        let full = modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Cut, p).unwrap().with_tolerances(Tolerances::strict()).unwrap())
            .unwrap()
            .value;
        let mut previous = 0.0;
        for j in 1..=cuts.len() {
            let v = brute_force_modulus(&g, &cuts[..j], p).unwrap();
            assert!(v >= previous * (1.0 - 1e-7), "p={p} j={j}: {v} < {previous}");
            previous = v;
        }
        assert!(rel(previous, full) < 1e-6, "p={p}: {previous} vs {full}");
    }
}

#[test]
fn continuity_from_below_along_an_infinite_chain() {
    // L_j = {(1 + 1/k) λ : k ≤ j, λ cut}; Mod(L_j) = (1 + 1/j)^{-p} Mod(L) ↑ Mod(⋃ L_j) = Mod(L)
    let (g, c) = grid();
    let cuts = all_cut_constraints(&g, &c).unwrap();
    for p in EXPONENTS {
        let limit = brute_force_modulus(&g, &cuts, p).unwrap();
        let mut chain: Vec<Constraint<f64>> = Vec::new();
        let mut previous = 0.0;
        for j in 1..=12usize {
            let s = 1.0 + 1.0 / j as f64;
            chain.extend(cuts.iter().map(|c| scaled(c, s)));
            let v = brute_force_modulus(&g, &chain, p).unwrap();
            assert!(v >= previous * (1.0 - 1e-7));
            assert!(rel(v, s.powf(-p) * limit) < 1e-6, "p={p} j={j}");
            previous = v;
        }
        assert!(limit - previous <= (1.0 - (1.0 + 1.0 / 12.0f64).powf(-p)) * limit * (1.0 + 1e-6));
    }
}

#[test]
fn weight_scaling_law() {
    let (g, c) = grid();
    for family in families(&g, &c) {
        for p in EXPONENTS {
            let base = brute_force_modulus(&g, &family, p).unwrap();
            for t in [0.5, 3.0] {
                let scaled: Vec<_> = family.iter().map(|c| scaled(c, t)).collect();
                let v = brute_force_modulus(&g, &scaled, p).unwrap();
                assert!(rel(v, base * t.powf(-p)) < 1e-6, "p={p} t={t}");
            }
        }
    }
}
