//! One runner per command. Runners only compute; nothing is written until
//! every row has succeeded.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dualmod::duality::{duality_product, loewner_profile, refinement_study, DualityReport, RefinementStudy};
use dualmod::mmspace::{coarea_identity, read_graph, Edge, Node};
use dualmod::modsolve::{warm_modulus, ModulusProblem, ModulusReport};
use dualmod::potential::{thinness_index, ThinnessReport};
use dualmod::presets::{CondenserSpec, DomainPreset};
use dualmod::qcheck::{interior_samples, map_zoo, qc_panel, zoo_correlation, PanelSetup, QcPanel};
use dualmod::{ConstraintKind, MeasureGraph, NodeSet, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, DomainConfig, ExperimentConfig, Family};
use crate::error::CliError;

/// Everything a run produces, serialized in memory.
pub struct Outcome {
    pub csv: Vec<u8>,
    pub json: Vec<u8>,
    /// One line per result row.
    pub summary: Vec<String>,
    /// Some row stopped at the iteration cap.
    pub capped: bool,
}

/// Maps `f` over `items` on up to `workers` threads, keeping input order.
/// The first error in input order wins.
pub fn par_map<I, O, F>(items: &[I], workers: usize, f: F) -> Result<Vec<O>, CliError>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O, CliError> + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<O, CliError>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let out = f(&items[i]);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot is filled")).collect()
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Precondition(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Precondition(format!("csv: {e}")))
}

fn json_bytes<J: Serialize>(value: &J) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Precondition(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct Json<'a, R> {
    command: &'static str,
    rows: &'a [R],
}

/// The graphs of a run: one per spacing for presets, the file's own graph
/// otherwise.
fn graphs(cfg: &ExperimentConfig) -> Result<Vec<(f64, MeasureGraph<f64>)>, CliError> {
    match cfg.domain.as_ref() {
        Some(DomainConfig::GraphFile { path }) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            let g: MeasureGraph<f64> = read_graph(&text)?;
            Ok(vec![(g.spacing(), g)])
        }
        Some(d) => {
            let preset = d.preset().expect("non-file domains are presets");
            cfg.spacings.iter().map(|&h| Ok((h, preset.build(h)?))).collect()
        }
        None => Ok(Vec::new()),
    }
}

fn preset_domain(cfg: &ExperimentConfig) -> Result<DomainPreset, CliError> {
    cfg.domain
        .as_ref()
        .and_then(DomainConfig::preset)
        .ok_or_else(|| CliError::Precondition(format!("`{}` needs a preset domain, not a graph file", cfg.command.name())))
}

fn condenser(cfg: &ExperimentConfig) -> &CondenserSpec {
    cfg.condenser.as_ref().expect("validated")
}

pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Modulus => modulus(cfg, workers),
        Command::Duality => duality(cfg, workers),
        Command::Refine => refine(cfg, workers),
        Command::Coarea => coarea(cfg),
        Command::Loewner => loewner(cfg, workers),
        Command::Qc => qc(cfg, workers),
        Command::Thinness => thinness(cfg, workers),
    }
}

fn finish<R: Serialize, J: Serialize>(rows: &[R], json: &J, summary: Vec<String>, capped: bool) -> Result<Outcome, CliError> {
    Ok(Outcome { csv: csv_bytes(rows)?, json: json_bytes(json)?, summary, capped })
}

#[derive(Serialize)]
struct ModulusRow {
    h: f64,
    family: ConstraintKind,
    p: f64,
    value: f64,
    lower_bound: f64,
    upper_bound: f64,
    residual: f64,
    status: Status,
    iterations: usize,
}

#[derive(Serialize)]
struct ModulusJson {
    h: f64,
    #[serde(flatten)]
    report: ModulusReport<f64>,
}

fn modulus(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let graphs = graphs(cfg)?;
    let kinds: &[ConstraintKind] = match cfg.family {
        Family::Curve => &[ConstraintKind::Curve],
        Family::Cut => &[ConstraintKind::Cut],
        Family::Both => &[ConstraintKind::Curve, ConstraintKind::Cut],
    };
    let tol = cfg.tolerances();
    let mut cells = Vec::new();
    for (gi, _) in graphs.iter().enumerate() {
        for &p in &cfg.exponents {
            for &kind in kinds {
                cells.push((gi, p, kind));
            }
        }
    }
    let results = par_map(&cells, workers, |&(gi, p, kind)| {
        let (h, g) = &graphs[gi];
        let c = condenser(cfg).resolve(g)?;
        let res = warm_modulus(&ModulusProblem::new(g, &c, kind, p)?.with_tolerances(tol)?)?;
        Ok(ModulusJson { h: *h, report: res.report(false) })
    })?;
    let rows: Vec<ModulusRow> = results
        .iter()
        .map(|r| ModulusRow {
            h: r.h,
            family: r.report.kind,
            p: r.report.p,
            value: r.report.value,
            lower_bound: r.report.lower_bound,
            upper_bound: r.report.upper_bound,
            residual: r.report.residual,
            status: r.report.status,
            iterations: r.report.iterations,
        })
        .collect();
    let summary = rows.iter().map(|r| format!("h={} {:?} p={}: Mod = {:.6} [{:?}]", r.h, r.family, r.p, r.value, r.status)).collect();
    let capped = rows.iter().any(|r| r.status == Status::IterationCap);
    finish(&rows, &Json { command: "modulus", rows: &results }, summary, capped)
}

#[derive(Serialize)]
struct DualityRow {
    h: f64,
    p: f64,
    q: f64,
    mod_curves: f64,
    mod_surfaces: f64,
    product: Option<f64>,
    product_lower: Option<f64>,
    product_upper: Option<f64>,
    residual_curves: f64,
    residual_surfaces: f64,
    curve_status: Status,
    surface_status: Status,
}

impl From<&DualityReport<f64>> for DualityRow {
    fn from(r: &DualityReport<f64>) -> Self {
        DualityRow {
            h: r.h,
            p: r.p,
            q: r.q,
            mod_curves: r.mod_curves,
            mod_surfaces: r.mod_surfaces,
            product: r.product,
            product_lower: r.product_lower,
            product_upper: r.product_upper,
            residual_curves: r.residual_curves,
            residual_surfaces: r.residual_surfaces,
            curve_status: r.curve_status,
            surface_status: r.surface_status,
        }
    }
}

fn product_text(p: Option<f64>) -> String {
    p.map_or_else(|| "degenerate".into(), |x| format!("{x:.6}"))
}

fn duality(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let graphs = graphs(cfg)?;
    let tol = cfg.tolerances();
    let cells: Vec<(usize, f64)> = (0..graphs.len()).flat_map(|gi| cfg.exponents.iter().map(move |&p| (gi, p))).collect();
    let reports = par_map(&cells, workers, |&(gi, p)| {
        let g = &graphs[gi].1;
        let c = condenser(cfg).resolve(g)?;
        Ok(duality_product(g, &c, p, tol)?)
    })?;
    let rows: Vec<DualityRow> = reports.iter().map(DualityRow::from).collect();
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "h={} p={}: Mod_p = {:.6}, Mod_q = {:.6}, product = {}",
                r.h,
                r.p,
                r.mod_curves,
                r.mod_surfaces,
                product_text(r.product)
            )
        })
        .collect();
    finish(&rows, &Json { command: "duality", rows: &reports }, summary, false)
}

#[derive(Serialize)]
struct RefineRow {
    p: f64,
    h: f64,
    product: Option<f64>,
    mod_curves: Option<f64>,
    mod_surfaces: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct RefineJson {
    p: f64,
    study: RefinementStudy<f64>,
}

fn refine(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let domain = preset_domain(cfg)?;
    let tol = cfg.tolerances();
    let studies = par_map(&cfg.exponents, workers, |&p| {
        Ok(RefineJson { p, study: refinement_study(&domain, condenser(cfg), p, &cfg.spacings, tol)? })
    })?;
    let mut rows = Vec::new();
    for s in &studies {
        for r in &s.study.rows {
            rows.push(RefineRow {
                p: s.p,
                h: r.h,
                product: r.report.as_ref().and_then(|d| d.product),
                mod_curves: r.report.as_ref().map(|d| d.mod_curves),
                mod_surfaces: r.report.as_ref().map(|d| d.mod_surfaces),
                error: r.error.clone(),
            });
        }
    }
    let summary = rows
        .iter()
        .map(|r| match &r.error {
            Some(e) => format!("p={} h={}: failed ({e})", r.p, r.h),
            None => format!("p={} h={}: product = {}", r.p, r.h, product_text(r.product)),
        })
        .collect();
    finish(&rows, &Json { command: "refine", rows: &studies }, summary, false)
}

#[derive(Serialize)]
struct CoareaRow {
    graph: usize,
    nodes: usize,
    edges: usize,
    level_integral: f64,
    total_variation: f64,
    rel_error: f64,
}

/// Connected graph: random spanning tree plus up to `extra` chords.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Result<MeasureGraph<f64>, CliError> {
    let edge = |rng: &mut ChaCha8Rng, a, b| Edge {
        a,
        b,
        length: rng.gen_range(0.5..1.5),
        cross: rng.gen_range(0.5..1.5),
        energy: rng.gen_range(0.5..1.5),
    };
    let mut seen = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        seen.insert((u, v));
        edges.push(edge(rng, u, v));
    }
    for _ in 0..4 * extra {
        if edges.len() >= n - 1 + extra {
            break;
        }
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && seen.insert((a, b)) {
            edges.push(edge(rng, a, b));
        }
    }
    let nodes = (0..n).map(|_| Node { pos: None, mass: rng.gen_range(0.5..1.5) }).collect();
    Ok(MeasureGraph::new(nodes, edges, 1.0)?)
}

fn coarea(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.expect("validated"));
    let mut graphs: Vec<MeasureGraph<f64>> = graphs(cfg)?.into_iter().map(|(_, g)| g).collect();
    if graphs.is_empty() {
        let (count, max_nodes) = cfg.coarea.as_ref().map_or((100, 500), |c| (c.graphs, c.max_nodes));
        if max_nodes < 2 {
            return Err(CliError::Precondition("random graphs need at least two nodes".into()));
        }
        for _ in 0..count {
            let n = rng.gen_range(2..=max_nodes);
            let extra = rng.gen_range(0..=n);
            graphs.push(random_graph(&mut rng, n, extra)?);
        }
    }
    let mut rows = Vec::with_capacity(graphs.len());
    for (k, g) in graphs.iter().enumerate() {
        let u: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (lhs, rhs) = coarea_identity(g, &u, None)?;
        let rel_error = if lhs == rhs { 0.0 } else { (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE) };
        rows.push(CoareaRow {
            graph: k,
            nodes: g.node_count(),
            edges: g.edge_count(),
            level_integral: lhs,
            total_variation: rhs,
            rel_error,
        });
    }
    let summary = rows.iter().map(|r| format!("graph {} ({} nodes): relative error {:.3e}", r.graph, r.nodes, r.rel_error)).collect();
    finish(&rows, &Json { command: "coarea", rows: &rows }, summary, false)
}

#[derive(Serialize)]
struct LoewnerCsv {
    h: f64,
    p: f64,
    pair: usize,
    distance: f64,
    diam_e: f64,
    diam_f: f64,
    delta: f64,
    modulus: f64,
    status: Status,
}

fn loewner(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let graphs = graphs(cfg)?;
    let tol = cfg.tolerances();
    let pairs = &cfg.loewner.as_ref().expect("validated").pairs;
    let cells: Vec<(usize, f64)> = (0..graphs.len()).flat_map(|gi| cfg.exponents.iter().map(move |&p| (gi, p))).collect();
    let blocks = par_map(&cells, workers, |&(gi, p)| {
        let (h, g) = &graphs[gi];
        let sets =
            pairs.iter().map(|pc| Ok((pc.e.resolve(g)?, pc.f.resolve(g)?))).collect::<Result<Vec<(NodeSet, NodeSet)>, CliError>>()?;
        let rows = loewner_profile(g, &sets, p, tol)?;
        Ok(rows
            .into_iter()
            .map(|r| LoewnerCsv {
                h: *h,
                p,
                pair: r.pair,
                distance: r.distance,
                diam_e: r.diam_e,
                diam_f: r.diam_f,
                delta: r.delta,
                modulus: r.modulus,
                status: r.status,
            })
            .collect::<Vec<_>>())
    })?;
    let rows: Vec<LoewnerCsv> = blocks.into_iter().flatten().collect();
    let summary = rows.iter().map(|r| format!("h={} p={} pair {}: δ = {:.4}, Mod = {:.6}", r.h, r.p, r.pair, r.delta, r.modulus)).collect();
    let capped = rows.iter().any(|r| r.status == Status::IterationCap);
    finish(&rows, &Json { command: "loewner", rows: &rows }, summary, capped)
}

#[derive(Serialize)]
struct QcCsv {
    map: String,
    /// Space-separated map parameters.
    params: String,
    config: String,
    p: f64,
    /// Per-configuration surface and curve distortion.
    c0: f64,
    k: f64,
    /// Panel estimates: maxima over configurations, and the metric dilatation.
    c0_est: f64,
    k_est: f64,
    h_est: f64,
    h_source: f64,
    h_target: f64,
    image_product: Option<f64>,
}

#[derive(Serialize)]
struct QcJson {
    panels: Vec<QcPanel<f64>>,
    /// Spearman correlation of surface distortion against dilatation over
    /// all panels (absent with fewer than two panels).
    correlation: Option<f64>,
}

fn default_configs(g: &MeasureGraph<f64>) -> Result<Vec<CondenserSpec>, CliError> {
    let (lo, hi) = g.bbox().ok_or_else(|| CliError::Precondition("qc needs node positions".into()))?;
    let side = (hi[0] - lo[0]).min(hi[1] - lo[1]);
    Ok(vec![
        CondenserSpec::LeftRight,
        CondenserSpec::TopBottom,
        CondenserSpec::Rings { center: None, inner: 0.15 * side, outer: 0.4 * side },
    ])
}

fn qc(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let domain = preset_domain(cfg)?;
    let region = domain.domain::<f64>();
    let contains = |p: [f64; 2]| region.contains(p);
    let graphs = graphs(cfg)?;
    let tol = cfg.tolerances();
    let maps = cfg.maps.iter().map(|m| Ok(map_zoo(&m.name, &m.params)?)).collect::<Result<Vec<_>, CliError>>()?;
    let qcfg = cfg.qc.as_ref();
    let mut cells = Vec::new();
    for gi in 0..graphs.len() {
        for &p in &cfg.exponents {
            for mi in 0..maps.len() {
                cells.push((gi, p, mi));
            }
        }
    }
    let panels = par_map(&cells, workers, |&(gi, p, mi)| {
        let (h, g) = &graphs[gi];
        let map = &maps[mi];
        let configs = match qcfg.and_then(|q| q.configs.clone()) {
            Some(c) => c,
            None => default_configs(g)?,
        };
        let radii = qcfg.and_then(|q| q.radii.clone()).unwrap_or_else(|| vec![2.0 * h]);
        let (margin, min_center, stride) = qcfg.map_or((0.25, 0.2, 2), |q| (q.margin, q.min_center, q.stride));
        let samples = interior_samples(map, g, margin, min_center, stride);
        if samples.is_empty() {
            return Err(CliError::Precondition(format!("no dilatation samples for {} (reduce `margin` or `min_center`)", map.name())));
        }
        let setup = PanelSetup {
            source_domain: &contains,
            source: g,
            configs: &configs,
            p,
            target_spacing: qcfg.and_then(|q| q.target_spacing).unwrap_or(*h),
            samples: &samples,
            radii: &radii,
            tol,
        };
        Ok(qc_panel(map, &setup)?)
    })?;
    let mut rows = Vec::new();
    for (panel, &(_, _, mi)) in panels.iter().zip(&cells) {
        let params = cfg.maps[mi].params.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        for r in &panel.rows {
            rows.push(QcCsv {
                map: panel.map.clone(),
                params: params.clone(),
                config: r.config.clone(),
                p: panel.p,
                c0: r.c0,
                k: r.k,
                c0_est: panel.c0_est,
                k_est: panel.k_est,
                h_est: panel.h_est(),
                h_source: panel.h_source,
                h_target: panel.h_target,
                image_product: r.image_duality.product,
            });
        }
    }
    let correlation = if panels.len() >= 2 { Some(zoo_correlation(&panels)?) } else { None };
    let mut summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{} h={} p={} {}: K = {:.4}, C0 = {:.4}, H = {:.4}", r.map, r.h_source, r.p, r.config, r.k, r.c0, r.h_est))
        .collect();
    if let Some(c) = correlation {
        summary.push(format!("rank correlation of C0 against H: {c:.4}"));
    }
    finish(&rows, &QcJson { panels, correlation }, summary, false)
}

#[derive(Serialize)]
struct ThinnessCsv {
    h: f64,
    p: f64,
    node: usize,
    t: f64,
    cap_set: f64,
    cap_ball: f64,
    ratio: f64,
    log_weight: f64,
    index: f64,
}

#[derive(Serialize)]
struct ThinnessJson {
    h: f64,
    p: f64,
    node: usize,
    report: ThinnessReport<f64>,
}

fn nearest_node(g: &MeasureGraph<f64>, x: [f64; 2]) -> Result<usize, CliError> {
    let mut best: Option<(f64, usize)> = None;
    for v in 0..g.node_count() {
        let p = g.pos(v).ok_or_else(|| CliError::Precondition("thinness needs node positions".into()))?;
        let d = (p[0] - x[0]).hypot(p[1] - x[1]);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, v));
        }
    }
    Ok(best.expect("graphs are non-empty").1)
}

fn thinness(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let graphs = graphs(cfg)?;
    let t = cfg.thinness.as_ref().expect("validated");
    let cells: Vec<(usize, f64)> = (0..graphs.len()).flat_map(|gi| cfg.exponents.iter().map(move |&p| (gi, p))).collect();
    let reports = par_map(&cells, workers, |&(gi, p)| {
        let (h, g) = &graphs[gi];
        let set = t.set.resolve(g)?;
        let node = nearest_node(g, t.point)?;
        Ok(ThinnessJson { h: *h, p, node, report: thinness_index(g, &set, node, p, &t.scales)? })
    })?;
    let mut rows = Vec::new();
    for r in &reports {
        for row in &r.report.rows {
            rows.push(ThinnessCsv {
                h: r.h,
                p: r.p,
                node: r.node,
                t: row.t,
                cap_set: row.cap_set,
                cap_ball: row.cap_ball,
                ratio: row.ratio,
                log_weight: row.log_weight,
                index: r.report.index,
            });
        }
    }
    let summary = rows.iter().map(|r| format!("h={} p={} t={}: ratio = {:.6}, index = {:.6}", r.h, r.p, r.t, r.ratio, r.index)).collect();
    finish(&rows, &Json { command: "thinness", rows: &reports }, summary, false)
}

/// Available domains, condensers, maps and commands, in a fixed order.
pub fn list_presets() -> String {
    let mut out = String::new();
    out.push_str("domains:\n");
    for d in
        ["rectangle (width, height, origin)", "annulus (inner, outer)", "weighted_grid (width, height, alpha, center)", "graph_file (path)"]
    {
        out.push_str(&format!("  {d}\n"));
    }
    out.push_str("condensers:\n");
    for c in ["left_right", "top_bottom", "inner_outer", "rings (center, inner, outer)", "custom (e, f, omega)"] {
        out.push_str(&format!("  {c}\n"));
    }
    out.push_str("maps:\n");
    for m in ["identity", "affine_stretch [a]", "radial_power [s] or [s, cx, cy]", "shear [k]"] {
        out.push_str(&format!("  {m}\n"));
    }
    out.push_str("commands:\n");
    for c in Command::ALL {
        out.push_str(&format!("  {}\n", c.name()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order_and_first_error() {
        let items: Vec<usize> = (0..20).collect();
        let out = par_map(&items, 4, |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
        let err = par_map(&items, 4, |&i| if i % 7 == 3 { Err(CliError::Precondition(format!("{i}"))) } else { Ok(i) }).unwrap_err();
        assert!(matches!(err, CliError::Precondition(m) if m == "3"));
    }

    #[test]
    fn presets_listing_is_complete() {
        let text = list_presets();
        for word in ["rectangle", "annulus", "identity", "affine_stretch", "radial_power", "shear", "thinness"] {
            assert!(text.contains(word), "{word}");
        }
        assert_eq!(text, list_presets());
    }
}
