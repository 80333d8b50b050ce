//! Rectangle closed forms and the capacity–modulus identity at coarse spacing.

mod common;

use common::rel;
use dualmod::modsolve::{warm_modulus, ModulusProblem};
use dualmod::potential::capacity;
use dualmod::presets::{CondenserSpec, DomainPreset};
use dualmod::ConstraintKind;

const EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];
const H: f64 = 1.0 / 16.0;

fn rectangle(width: f64, height: f64) -> DomainPreset {
    DomainPreset::Rectangle { width, height, origin: [0.0, 0.0] }
}

#[test]
fn rectangle_moduli_match_closed_forms() {
    for (w, h) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        let g = rectangle(w, h).build(H).unwrap();
        let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
        for p in EXPONENTS {
            let q = p / (p - 1.0);
            let curves = warm_modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Curve, p).unwrap()).unwrap();
            let cuts = warm_modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Cut, q).unwrap()).unwrap();
            let (want_curves, want_cuts) = (h * w.powf(1.0 - p), w * h.powf(1.0 - q));
            assert!(rel(curves.value, want_curves) < 1e-3, "{w}x{h} p={p}: {} vs {want_curves}", curves.value);
            assert!(rel(cuts.value, want_cuts) < 1e-3, "{w}x{h} q={q}: {} vs {want_cuts}", cuts.value);
        }
    }
}

#[test]
fn capacity_equals_curve_modulus() {
    let cases = [
        (rectangle(1.0, 1.0), CondenserSpec::LeftRight),
        (rectangle(2.0, 1.0), CondenserSpec::TopBottom),
        (DomainPreset::Annulus { inner: 1.0, outer: std::f64::consts::E }, CondenserSpec::InnerOuter),
    ];
    for (domain, spec) in cases {
        let g = domain.build(H).unwrap();
        let c = spec.resolve(&g).unwrap();
        for p in EXPONENTS {
            let cap = capacity(&g, &c, p).unwrap();
            let m = warm_modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Curve, p).unwrap()).unwrap();
            assert!(rel(cap, m.value) < 1e-3, "{} p={p}: cap {cap} vs mod {}", domain.name(), m.value);
        }
    }
}

#[test]
fn annulus_modulus_approaches_two_pi() {
    let g = DomainPreset::Annulus { inner: 1.0, outer: std::f64::consts::E }.build(1.0 / 16.0).unwrap();
    let c = CondenserSpec::InnerOuter.resolve(&g).unwrap();
    let cap = capacity(&g, &c, 2.0).unwrap();
    assert!(rel(cap, 2.0 * std::f64::consts::PI) < 0.1, "{cap}");
}
