use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dualmod::mmspace::{build_grid, write_graph};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn dualmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmod")).args(args).env_remove("DUALMOD_OUT_DIR").output().unwrap()
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dualmod(&args)
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).map(|it| it.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()).unwrap_or_default();
    names.sort();
    names
}

#[test]
fn duality_rows_have_unit_product() {
    let out = TempDir::new().unwrap();
    let res = run_config(&configs().join("rectangle_duality.toml"), out.path(), &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(String::from_utf8_lossy(&res.stdout).lines().count(), 3);
    let mut reader = csv::Reader::from_path(out.path().join("duality.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "product").unwrap();
    let mut rows = 0;
    for rec in reader.records() {
        let product: f64 = rec.unwrap()[col].parse().unwrap();
        assert!((product - 1.0).abs() < 1e-3, "{product}");
        rows += 1;
    }
    assert_eq!(rows, 3);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("duality.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn reruns_are_byte_identical_for_every_config() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let config = entry.unwrap().path();
        let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
        assert!(run_config(&config, a.path(), &[]).status.success(), "{}", config.display());
        assert!(run_config(&config, b.path(), &[]).status.success());
        assert!(run_config(&config, c.path(), &["--workers", "3"]).status.success());
        let names = files_in(a.path());
        assert_eq!(names.len(), 2, "{}", config.display());
        for name in &names {
            let first = std::fs::read(a.path().join(name)).unwrap();
            assert_eq!(first, std::fs::read(b.path().join(name)).unwrap(), "{name}");
            assert_eq!(first, std::fs::read(c.path().join(name)).unwrap(), "{name} with workers");
        }
    }
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("syntax.toml", "command = \"duality\"\nexponents = [2.0"),
        ("unknown.toml", "command = \"coarea\"\nseed = 1\nseeds = 2\n"),
        ("command.toml", "command = \"plot\"\n"),
    ] {
        let res = run_config(&write_config(&dir, name, text), &out, &[]);
        assert_eq!(res.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = TempDir::new().unwrap();
    let graph = dir.path().join("g.txt");
    std::fs::write(&graph, write_graph(&build_grid(1.0, 1.0, 0.25, None).unwrap())).unwrap();

    // qc needs a preset domain
    let qc =
        format!("command = \"qc\"\nexponents = [2.0]\n[domain]\nkind = \"graph_file\"\npath = {graph:?}\n[[maps]]\nname = \"identity\"\n");
    let res = run_config(&write_config(&dir, "qc.toml", &qc), &dir.path().join("a"), &[]);
    assert_eq!(res.status.code(), Some(3));

    let capped = std::fs::read_to_string(configs().join("annulus_modulus.toml"))
        .unwrap()
        .replace("feasibility = 1e-5\nobjective = 1e-5", "feasibility = 1e-12\nobjective = 1e-12\nmax_iterations = 1")
        .replace("family = \"both\"", "family = \"cut\"");
    let res = run_config(&write_config(&dir, "capped.toml", &capped), &dir.path().join("b"), &[]);
    assert_eq!(res.status.code(), Some(4));

    let res = run_config(&dir.path().join("missing.toml"), &dir.path().join("c"), &[]);
    assert_eq!(res.status.code(), Some(5));

    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let res = run_config(&configs().join("coarea.toml"), &blocker, &[]);
    assert_eq!(res.status.code(), Some(5));
}

#[test]
fn graph_file_domain_runs_modulus() {
    let dir = TempDir::new().unwrap();
    let graph = dir.path().join("grid.txt");
    std::fs::write(&graph, write_graph(&build_grid(1.0, 1.0, 0.25, None).unwrap())).unwrap();
    let text = format!(
        "command = \"modulus\"\nexponents = [2.0]\n[domain]\nkind = \"graph_file\"\npath = {graph:?}\n[condenser]\npreset = \"left_right\"\n[output]\ncsv = \"m.csv\"\njson = \"m.json\"\n"
    );
    let out = dir.path().join("out");
    let res = run_config(&write_config(&dir, "m.toml", &text), &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(files_in(&out), ["m.csv", "m.json"]);
    let csv = std::fs::read_to_string(out.join("m.csv")).unwrap();
    assert!(csv.starts_with("h,family,p,value"));
    let value: f64 = csv.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-3, "{value}");
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_dualmod"))
        .args(["run", configs().join("coarea.toml").to_str().unwrap()])
        .env("DUALMOD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(res.status.success());
    assert_eq!(files_in(dir.path()), ["coarea.csv", "coarea.json"]);
}

#[test]
fn presets_listing_is_stable() {
    let a = dualmod(&["presets"]);
    let b = dualmod(&["presets"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for word in ["rectangle", "annulus", "identity", "affine_stretch", "radial_power", "shear"] {
        assert!(text.contains(word), "{word}");
    }
}
