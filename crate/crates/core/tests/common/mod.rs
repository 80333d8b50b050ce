#![allow(dead_code)]

use dualmod::mmspace::{build_grid, Edge, MeasureGraph, Node};
use dualmod::presets::CondenserSpec;
use dualmod::{Condenser, NodeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// A named small instance.
pub struct Case {
    pub name: String,
    pub graph: MeasureGraph<f64>,
    pub cond: Condenser,
}

fn node() -> Node<f64> {
    Node { pos: None, mass: 1.0 }
}

fn unit(a: usize, b: usize) -> Edge<f64> {
    Edge { a, b, length: 1.0, cross: 1.0, energy: 1.0 }
}

fn random_edge(rng: &mut ChaCha8Rng, a: usize, b: usize) -> Edge<f64> {
    Edge { a, b, length: rng.gen_range(0.5..1.5), cross: rng.gen_range(0.5..1.5), energy: rng.gen_range(0.5..1.5) }
}

fn ids(n: usize, v: &[usize]) -> NodeSet {
    NodeSet::from_ids(n, v.iter().copied()).unwrap()
}

fn case(name: &str, graph: MeasureGraph<f64>, e: &[usize], f: &[usize], omega: Option<&[usize]>) -> Case {
    let n = graph.node_count();
    let omega = omega.map_or_else(|| NodeSet::full(n), |o| ids(n, o));
    let cond = Condenser::new(ids(n, e), ids(n, f), omega).unwrap();
    Case { name: name.into(), graph, cond }
}

/// Connected graph on `n` nodes: a random spanning tree plus `extra` chords,
/// all weights drawn from `[0.5, 1.5)`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> MeasureGraph<f64> {
    let mut edges = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push(random_edge(rng, u, v));
    }
    let mut tries = 0;
    while edges.len() < n - 1 + extra && tries < 1000 {
        tries += 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && seen.insert((a, b)) {
            edges.push(random_edge(rng, a, b));
        }
    }
    let nodes = (0..n).map(|_| Node { pos: None, mass: rng.gen_range(0.5..1.5) }).collect();
    MeasureGraph::new(nodes, edges, 1.0).unwrap()
}

/// Every connected graph of the small-instance corpus (at most 12 nodes),
/// each with one condenser.
pub fn corpus() -> Vec<Case> {
    let mut out = Vec::new();

    let path = MeasureGraph::new((0..5).map(|_| node()).collect(), (0..4).map(|i| unit(i, i + 1)).collect(), 1.0).unwrap();
    out.push(case("path5", path, &[0], &[4], None));

    let cycle = MeasureGraph::new((0..6).map(|_| node()).collect(), (0..6).map(|i| unit(i, (i + 1) % 6)).collect(), 1.0).unwrap();
    out.push(case("cycle6", cycle, &[0], &[3], None));

    let mut wheel: Vec<Edge<f64>> = (1..7).map(|i| unit(0, i)).collect();
    wheel.extend((1..7).map(|i| unit(i, i % 6 + 1)));
    let wheel = MeasureGraph::new((0..7).map(|_| node()).collect(), wheel, 1.0).unwrap();
    out.push(case("wheel7", wheel, &[1], &[4], None));

    let mut k5 = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for a in 0..5 {
        for b in a + 1..5 {
            k5.push(random_edge(&mut rng, a, b));
        }
    }
    let k5 = MeasureGraph::new((0..5).map(|_| node()).collect(), k5, 1.0).unwrap();
    out.push(case("k5", k5, &[0], &[4], None));

    // outer 5-cycle, inner pentagram, spokes
    let mut petersen = Vec::new();
    for i in 0..5 {
        petersen.push(unit(i, (i + 1) % 5));
        petersen.push(unit(5 + i, 5 + (i + 2) % 5));
        petersen.push(unit(i, 5 + i));
    }
    let petersen = MeasureGraph::new((0..10).map(|_| node()).collect(), petersen, 1.0).unwrap();
    out.push(case("petersen", petersen, &[0], &[7], None));

    let g = build_grid(1.0, 1.0, 0.5, None).unwrap();
    let c = CondenserSpec::LeftRight.resolve(&g).unwrap();
    out.push(Case { name: "grid3x3".into(), graph: g, cond: c });

    // rungs i–(i+4), rails along 0..4 and 4..8
    let mut ladder: Vec<Edge<f64>> = (0..4).map(|i| unit(i, i + 4)).collect();
    ladder.extend((0..3).flat_map(|i| [unit(i, i + 1), unit(i + 4, i + 5)]));
    let ladder = MeasureGraph::new((0..8).map(|_| node()).collect(), ladder, 1.0).unwrap();
    out.push(case("ladder2x4", ladder, &[0, 4], &[3, 7], None));

    let g = build_grid(1.0, 1.5, 0.5, None).unwrap();
    let c = CondenserSpec::TopBottom.resolve(&g).unwrap();
    out.push(Case { name: "grid3x4".into(), graph: g, cond: c });

    // 3x3 grid with the centre removed from Ω
    let g = build_grid(1.0, 1.0, 0.5, None).unwrap();
    out.push(case("grid3x3_holed", g, &[0, 3, 6], &[2, 5, 8], Some(&[0, 1, 2, 3, 5, 6, 7, 8])));

    let mut rng = ChaCha8Rng::seed_from_u64(20240);
    for (k, n) in [6usize, 7, 8, 9, 10, 11, 12, 12].into_iter().enumerate() {
        let g = random_graph(&mut rng, n, n / 2);
        let (e, f): (Vec<usize>, Vec<usize>) = if k % 2 == 0 { (vec![0], vec![n - 1]) } else { (vec![0, 1], vec![n - 2, n - 1]) };
        out.push(case(&format!("random{k}_n{n}"), g, &e, &f, None));
    }
    out
}
