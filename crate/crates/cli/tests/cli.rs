use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn casimir(problem: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .arg(problem)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

fn floats(csv: &str, name: &str) -> Vec<f64> {
    column(csv, name).iter().map(|v| v.parse().unwrap()).collect()
}

const CP_SWEEP: &str = r#"{
    "problem": "cp-sphere",
    "species": {"A": {"omega": 1.0, "static_polarizability": 1.0}},
    "media": {"glass": {"eps": [{"omega_p": 2.0, "omega_t": 1.5}]}},
    "atom": {"species": "A", "position": [0, 0, 1]},
    "sphere": {"radius": 5e-4, "medium": "glass"},
    "sweep": {"variable": "distance", "min": 1e-2, "max": 1e2, "points": 17}
}"#;

#[test]
fn cp_sphere_sweep_crosses_over_from_six_to_seven() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cp.json");
    let out = dir.path().join("cp.csv");
    fs::write(&cfg, CP_SWEEP).unwrap();
    let run = casimir("cp-sphere", &cfg, &out, &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let r = floats(&csv, "distance");
    let u = floats(&csv, "energy");
    assert_eq!(r.len(), 17);
    assert!(u.iter().all(|v| *v < 0.0));
    let slope = |i: usize, j: usize| (u[j].abs().ln() - u[i].abs().ln()) / (r[j].ln() - r[i].ln());
    // first and last half decade
    let near = slope(0, 2);
    let far = slope(14, 16);
    assert!((near + 6.0).abs() < 0.1, "near slope {near}");
    assert!((far + 7.0).abs() < 0.1, "far slope {far}");
    let regimes = column(&csv, "regime");
    assert_eq!(regimes.first().unwrap(), "nonretarded");
    assert_eq!(regimes.last().unwrap(), "retarded");

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cp.meta.json")).unwrap()).unwrap();
    assert_eq!(sidecar["problem"], "cp-sphere");
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(sidecar["config"]["sphere"]["radius"], 5e-4);
    assert!(sidecar["tolerances"]["quadrature"]["rel_tol"].is_number());
}

#[test]
fn negative_radius_is_rejected_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let out = dir.path().join("bad.csv");
    fs::write(&cfg, CP_SWEEP.replace("5e-4", "-1.0")).unwrap();
    let run = casimir("cp-sphere", &cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("sphere.radius"), "{err}");
    assert!(!out.exists());
    assert!(!dir.path().join("bad.meta.json").exists());
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    let out = dir.path().join("typo.csv");
    fs::write(&cfg, CP_SWEEP.replace("\"points\": 17", "\"points\": \"many\"")).unwrap();
    let run = casimir("cp-sphere", &cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("sweep.points"));
    // problem named in the file must match the subcommand
    fs::write(&cfg, CP_SWEEP).unwrap();
    let run = casimir("vdw-pair", &cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dense.json");
    let out = dir.path().join("dense.csv");
    let text = r#"{
        "species": {"B": {"omega": 1.0, "static_polarizability": 1.0}},
        "atom": {"species": "B", "position": [0, 0, 2]},
        "body": {"geometry": {"shape": "sphere", "radius": 1.0}, "composition": [{"species": "B", "density": 1.6}]},
        "volume": {"grid": 4}
    }"#;
    fs::write(&cfg, text).unwrap();
    let run = casimir("verify", &cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("error[ConvergenceGateFailed]"));
    assert!(!out.exists());
}

#[test]
fn verify_writes_report_and_status_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("verify.json");
    let out = dir.path().join("verify.csv");
    let text = r#"{
        "species": {"B": {"omega": 1.0, "static_polarizability": 1.0}},
        "atom": {"species": "B", "position": [0, 0, 2]},
        "body": {"geometry": {"shape": "sphere", "radius": 1.0}, "composition": [{"species": "B", "density": 0.05}]},
        "orders": {"k": 2, "l": 2},
        "refinements": [6, 8]
    }"#;
    fs::write(&cfg, text).unwrap();
    let run = casimir("verify", &cfg, &out, &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with("verify: PASS"), "{stdout}");
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("quantity,order,grid,nodes,value\n"));
    assert!(csv.contains("\npasses,,,,1\n"));
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.meta.json")).unwrap()).unwrap();
    assert_eq!(sidecar["report"]["passes"], true);
    assert_eq!(sidecar["report"]["refinements"].as_array().unwrap().len(), 2);
}

#[test]
fn grid_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("born.json");
    let out = dir.path().join("born.csv");
    let text = r#"{
        "species": {"B": {"omega": 1.0, "static_polarizability": 1.0}},
        "atom": {"species": "B", "position": [0, 0, 2]},
        "body": {"geometry": {"shape": "box", "corner": [-1, -1, -1], "extents": [2, 2, 1]},
                 "composition": [{"species": "B", "density": 0.1}]},
        "order": 1,
        "volume": {"grid": 4}
    }"#;
    fs::write(&cfg, text).unwrap();
    let run = casimir("born", &cfg, &out, &["--grid", "5"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(column(&csv, "grid"), vec!["5"]);
    assert!(floats(&csv, "energy")[0] < 0.0);
}

#[test]
fn sidecar_never_replaces_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.meta.json");
    fs::write(&cfg, CP_SWEEP).unwrap();
    let run = casimir("cp-sphere", &cfg, &dir.path().join("run.csv"), &[]);
    assert_eq!(run.status.code(), Some(2));
    assert_eq!(fs::read_to_string(&cfg).unwrap(), CP_SWEEP);
}

#[test]
fn check_reports_gate_and_packing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("check.json");
    let out = dir.path().join("check.csv");
    let text = r#"{
        "species": {"B": {"omega": 1.0, "static_polarizability": 1.0}},
        "body": {"geometry": {"shape": "sphere", "radius": 1.0}, "composition": [{"species": "B", "density": 0.3}]},
        "packing_factor": 2.0
    }"#;
    fs::write(&cfg, text).unwrap();
    let run = casimir("check", &cfg, &out, &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let names = column(&csv, "quantity");
    let values = column(&csv, "value");
    let get = |k: &str| values[names.iter().position(|n| n == k).unwrap()].clone();
    assert_eq!(get("gate_passes"), "1");
    assert!((get("gate_value").parse::<f64>().unwrap() - 0.2).abs() < 1e-15);
    assert!((get("packing_threshold").parse::<f64>().unwrap() - 16.0 / 3.0).abs() < 1e-15);
}
