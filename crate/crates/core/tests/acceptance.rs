//! Acceptance run: one PASS/FAIL line per criterion. The whole evaluation is
//! performed twice and the two JSON reports must agree byte for byte.

mod common;

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use common::{corpus, random_graph, rel};
use dualmod::duality::{duality_product, DualityReport};
use dualmod::families::{all_curve_constraints, all_cut_constraints, cut_oracle};
use dualmod::mmspace::{build_grid, coarea_identity, Domain};
use dualmod::modsolve::{brute_force_modulus, modulus, warm_modulus, ModulusProblem, Tolerances};
use dualmod::potential::{capacity, condenser_potential, level_set_surfaces, lower_bound_check, LowerBoundChain};
use dualmod::presets::{CondenserSpec, DomainPreset};
use dualmod::qcheck::{interior_samples, map_zoo, qc_panel, zoo_correlation, GridMap, PanelSetup, QcPanel};
use dualmod::{Constraint, ConstraintKind, Status};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];
const FINE: f64 = 1.0 / 64.0;
const COARSE: f64 = 1.0 / 32.0;

#[derive(Serialize)]
struct Line {
    criterion: usize,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct CapacityRow {
    domain: String,
    h: f64,
    p: f64,
    capacity: f64,
    modulus: f64,
}

#[derive(Default, Serialize)]
struct Report {
    lines: Vec<Line>,
    rectangles: Vec<DualityReport<f64>>,
    capacities: Vec<CapacityRow>,
    annulus: Option<DualityReport<f64>>,
    chains: Vec<LowerBoundChain<f64>>,
    panels: Vec<QcPanel<f64>>,
}

impl Report {
    fn line(&mut self, criterion: usize, pass: bool, detail: String) {
        self.lines.push(Line { criterion, pass, detail });
    }
}

fn rectangle(width: f64) -> DomainPreset {
    DomainPreset::Rectangle { width, height: 1.0, origin: [0.0, 0.0] }
}

fn annulus() -> DomainPreset {
    DomainPreset::Annulus { inner: 1.0, outer: E }
}

/// Criteria 1 and 2 on the rectangle presets, plus their capacity rows;
/// returns the slowest cell.
fn rectangles(report: &mut Report) -> Duration {
    let mut slowest = Duration::ZERO;
    let (mut worst_product, mut worst_curve, mut worst_cut) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for w in [1.0, 2.0, 4.0] {
        let g = rectangle(w).build(FINE).unwrap();
        let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
        for p in EXPONENTS {
            let start = Instant::now();
            let r = duality_product(&g, &c, p, Tolerances::default()).unwrap();
            slowest = slowest.max(start.elapsed());
            ok &= r.curve_status == Status::Converged && r.surface_status == Status::Converged;
            worst_product = worst_product.max((r.product.unwrap_or(f64::NAN) - 1.0).abs());
            worst_curve = worst_curve.max(rel(r.mod_curves, w.powf(1.0 - p)));
            worst_cut = worst_cut.max(rel(r.mod_surfaces, w));
            let cap = capacity(&g, &c, p).unwrap();
            report.capacities.push(CapacityRow { domain: format!("rectangle {w}x1"), h: FINE, p, capacity: cap, modulus: r.mod_curves });
            report.rectangles.push(r);
        }
    }
    report.line(1, ok && worst_product <= 1e-3, format!("max |product − 1| = {worst_product:.3e} over 9 cells"));
    report.line(2, worst_curve < 1e-3 && worst_cut < 1e-3, format!("max rel error curves {worst_curve:.3e}, cuts {worst_cut:.3e}"));
    slowest
}

/// Criterion 3: annulus rows joined to the rectangle rows.
fn capacity_identity(report: &mut Report) {
    let g = annulus().build(COARSE).unwrap();
    let c = CondenserSpec::InnerOuter.resolve(&g).unwrap();
    for p in EXPONENTS {
        let cap = capacity(&g, &c, p).unwrap();
        let m = warm_modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Curve, p).unwrap()).unwrap();
        report.capacities.push(CapacityRow { domain: "annulus".into(), h: COARSE, p, capacity: cap, modulus: m.value });
    }
    let worst = report.capacities.iter().map(|r| rel(r.capacity, r.modulus)).fold(0.0, f64::max);
    report.line(3, worst < 1e-3, format!("max |cap − mod|/mod = {worst:.3e} over {} cells", report.capacities.len()));
}

fn annulus_benchmark(report: &mut Report) {
    let g = annulus().build(FINE).unwrap();
    let c = CondenserSpec::InnerOuter.resolve(&g).unwrap();
    let r = duality_product(&g, &c, 2.0, Tolerances::default()).unwrap();
    let err = rel(r.mod_curves, 2.0 * PI);
    let product = r.product.unwrap_or(f64::NAN);
    report.line(
        4,
        err < 0.05 && (product - 1.0).abs() < 0.02,
        format!("Mod_2 = {:.5} (rel {err:.3e} to 2π), product {product:.6}", r.mod_curves),
    );
    report.annulus = Some(r);
}

fn coarea(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=500);
        let extra = rng.gen_range(0..=n);
        let g = random_graph(&mut rng, n, extra);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (lhs, rhs) = coarea_identity(&g, &u, None).unwrap();
        worst = worst.max(rel(lhs, rhs));
    }
    let fast = start.elapsed() < Duration::from_secs(5);
    report.line(5, worst < 1e-10 && fast, format!("max rel error {worst:.3e} on 100 graphs, within time budget: {fast}"));
}

fn family(case: &common::Case, kind: ConstraintKind) -> Vec<Constraint<f64>> {
    match kind {
        ConstraintKind::Curve => all_curve_constraints(&case.graph, &case.cond, 100_000).unwrap(),
        ConstraintKind::Cut => all_cut_constraints(&case.graph, &case.cond).unwrap(),
    }
}

fn oracle_equivalence(report: &mut Report) {
    let mut worst = 0.0f64;
    let mut cells = 0;
    for case in corpus() {
        for kind in [ConstraintKind::Curve, ConstraintKind::Cut] {
            let all = family(&case, kind);
            for p in EXPONENTS {
                let reference = brute_force_modulus(&case.graph, &all, p).unwrap();
                let prob = ModulusProblem::new(&case.graph, &case.cond, kind, p).unwrap().with_tolerances(Tolerances::strict()).unwrap();
                worst = worst.max(rel(modulus(&prob).unwrap().value, reference));
                cells += 1;
            }
        }
    }
    report.line(6, worst < 1e-6, format!("max rel gap to enumeration {worst:.3e} over {cells} cells"));
}

fn scaled(c: &Constraint<f64>, s: f64) -> Constraint<f64> {
    let mut out = c.clone();
    out.weights.iter_mut().for_each(|w| *w *= s);
    out
}

fn outer_measure(report: &mut Report) {
    let g = build_grid(1.0, 1.0, 0.5, None).unwrap();
    let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
    let families = [all_curve_constraints(&g, &c, 10_000).unwrap(), all_cut_constraints(&g, &c).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let slack = 1.0 + 1e-7;
    let (mut monotone, mut subadditive, mut continuous) = (true, true, true);
    for all in &families {
        for p in EXPONENTS {
            let whole = brute_force_modulus(&g, all, p).unwrap();
            for _ in 0..5 {
                let mut shuffled = all.clone();
                shuffled.shuffle(&mut rng);
                let split = rng.gen_range(1..shuffled.len());
                let (a, b) = shuffled.split_at(split);
                let (ma, mb) = (brute_force_modulus(&g, a, p).unwrap(), brute_force_modulus(&g, b, p).unwrap());
                monotone &= ma <= whole * slack && mb <= whole * slack;
                subadditive &= whole <= (ma + mb) * slack;
            }
            // nested chain L_j = {(1 + 1/k)λ : k ≤ j} climbing to the whole family
            let mut chain = Vec::new();
            let mut previous = 0.0;
            for j in 1..=8usize {
                let s = 1.0 + 1.0 / j as f64;
                chain.extend(all.iter().map(|c| scaled(c, s)));
                let v = brute_force_modulus(&g, &chain, p).unwrap();
                continuous &= v >= previous / slack && rel(v, s.powf(-p) * whole) < 1e-6;
                previous = v;
            }
            chain.extend(all.iter().cloned());
            continuous &= rel(brute_force_modulus(&g, &chain, p).unwrap(), whole) < 1e-6;
        }
    }
    report.line(
        7,
        monotone && subadditive && continuous,
        format!("monotone {monotone}, subadditive {subadditive}, continuous from below {continuous}"),
    );
}

fn level_sets(report: &mut Report) {
    let presets =
        [(rectangle(1.0), CondenserSpec::LeftRight), (rectangle(2.0), CondenserSpec::TopBottom), (annulus(), CondenserSpec::InnerOuter)];
    let mut surfaces_ok = true;
    let mut links_ok = true;
    let mut worst = f64::INFINITY;
    for (domain, spec) in presets {
        let g = domain.build(COARSE).unwrap();
        let c = spec.resolve(&g).unwrap();
        for p in EXPONENTS {
            let pot = condenser_potential(&g, &c, p, 1e-10).unwrap();
            match level_set_surfaces(&g, &pot, 15) {
                Ok(levels) => surfaces_ok &= levels.iter().all(|l| c.separates(&l.set)),
                Err(_) => surfaces_ok = false,
            }
            let q = p / (p - 1.0);
            let cuts = warm_modulus(&ModulusProblem::new(&g, &c, ConstraintKind::Cut, q).unwrap()).unwrap();
            let (_, admissible) = cut_oracle(&g, &c, &cuts.rho).unwrap();
            let chain = lower_bound_check(&g, &c, p, &cuts.rho.scaled(1.0 / admissible)).unwrap();
            links_ok &= chain.holds();
            worst = worst.min(chain.holder_bound);
            report.chains.push(chain);
        }
    }
    report.line(
        8,
        surfaces_ok && links_ok && worst >= 1.0 - 1e-3,
        format!("surfaces separate {surfaces_ok}, links hold {links_ok}, min product {worst:.6}"),
    );
}

fn qc(report: &mut Report) {
    let domain = Domain::rectangle(1.0, 1.0);
    let g = build_grid(1.0, 1.0, COARSE, None).unwrap();
    let configs =
        [CondenserSpec::LeftRight, CondenserSpec::TopBottom, CondenserSpec::Rings { center: Some([0.5, 0.5]), inner: 0.15, outer: 0.4 }];
    let zoo: Vec<GridMap> = vec![
        map_zoo("identity", &[]).unwrap(),
        map_zoo("affine_stretch", &[2.0]).unwrap(),
        map_zoo("radial_power", &[2.0, 0.5, 0.5]).unwrap(),
        map_zoo("affine_stretch", &[1.5]).unwrap(),
        map_zoo("shear", &[0.5]).unwrap(),
        map_zoo("radial_power", &[1.5, 0.5, 0.5]).unwrap(),
    ];
    let contains = |p: [f64; 2]| domain.contains(p);
    for map in &zoo {
        let samples = interior_samples(map, &g, 0.25, 0.2, 2);
        let setup = PanelSetup {
            source_domain: &contains,
            source: &g,
            configs: &configs,
            p: 2.0,
            target_spacing: COARSE,
            samples: &samples,
            radii: &[2.0 * COARSE],
            tol: Tolerances::default(),
        };
        report.panels.push(qc_panel(map, &setup).unwrap());
    }
    let within = |x: f64, lo: f64, hi: f64| (lo..=hi).contains(&x);
    let id = &report.panels[0];
    let identity = within(id.c0_est, 0.99, 1.01) && within(id.k_est, 0.99, 1.01) && within(id.h_est(), 0.99, 1.01);
    let st = &report.panels[1];
    let stretch = rel(st.h_est(), 2.0) <= 0.10 && rel(st.k_est, 2.0) <= 0.05;
    let rp = &report.panels[2];
    let radial = rel(rp.h_est(), 2.0) <= 0.10;
    let rho = zoo_correlation(&report.panels).unwrap();
    report.line(
        9,
        identity && stretch && radial && rho >= 0.0,
        format!(
            "identity (C0 {:.4}, K {:.4}, H {:.4}); stretch 2 (H {:.4}, K {:.4}); radial 2 (H {:.4}); Spearman {rho:.3}",
            id.c0_est,
            id.k_est,
            id.h_est(),
            st.h_est(),
            st.k_est,
            rp.h_est()
        ),
    );
}

fn evaluate() -> (Report, Duration) {
    let mut report = Report::default();
    let slowest = rectangles(&mut report);
    capacity_identity(&mut report);
    annulus_benchmark(&mut report);
    coarea(&mut report);
    oracle_equivalence(&mut report);
    outer_measure(&mut report);
    level_sets(&mut report);
    qc(&mut report);
    report.lines.sort_by_key(|l| l.criterion);
    (report, slowest)
}

fn main() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let mut bytes = Vec::new();
    let mut first = None;
    for run in 0..2 {
        let (report, slowest) = evaluate();
        let path = dir.join(format!("report_{run}.json"));
        std::fs::write(&path, serde_json::to_vec_pretty(&report).unwrap()).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
        if first.is_none() {
            first = Some((report, slowest));
        }
    }
    let (mut report, slowest) = first.unwrap();
    if let Some(l) = report.lines.iter_mut().find(|l| l.criterion == 1) {
        l.pass &= slowest < Duration::from_secs(60);
        l.detail += &format!(", slowest cell {:.1} s", slowest.as_secs_f64());
    }
    let identical = bytes[0] == bytes[1];
    report.line(10, identical, format!("two runs, {} report bytes, identical {identical}", bytes[0].len()));

    let mut failed = 0;
    for l in &report.lines {
        let verdict = if l.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!l.pass);
        println!("criterion {:>2}: {verdict} — {}", l.criterion, l.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
