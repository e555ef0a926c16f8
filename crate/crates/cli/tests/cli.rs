use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxshape_cli::{validate_config, DiagnosticKind};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxshape"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], config: &Path, out: &Path, threads: Option<&str>) -> Output {
    let mut c = exe();
    c.args(args).arg("--quiet").arg("--config").arg(config).arg("--out").arg(out);
    if let Some(t) = threads {
        c.env("MAXSHAPE_THREADS", t);
    }
    c.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn empty_file_is_one_fatal_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = validate_config(&write(tmp.path(), "empty.json", ""), None);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].kind, DiagnosticKind::Fatal);
}

#[test]
fn shipped_configs_are_clean() {
    for name in ["mdp", "ch_lambda1", "quick_torsion", "evaluate_plus", "properties", "fixtures"] {
        let d = validate_config(&configs().join(format!("{name}.json")), None);
        assert!(d.is_empty(), "{name}: {d:?}");
    }
}

#[test]
fn huge_length_is_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "big.json",
        r#"{"command": "solve",
            "domain": {"boundary": [[0,0],[1,0],[1,1],[0,1]]},
            "optimizer": {"length": 1e6, "functional": {"kind": "inradius"}, "grid_h": 0.0078125}}"#,
    );
    let d = validate_config(&cfg, None);
    assert_eq!(d.len(), 1, "{d:?}");
    assert_eq!(d[0].kind, DiagnosticKind::InfeasibleLength);
    assert_eq!(d[0].path, "optimizer.length");
}

#[test]
fn unknown_and_missing_keys_are_all_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "typos.json",
        r#"{"command": "solve", "domian": "x.json", "redner": true,
            "optimizer": {"functional": {"kind": "eigenvalue", "kk": 2}, "grid_h": 0.1,
                          "schedule": {"iters": 5}}}"#,
    );
    let d = validate_config(&cfg, None);
    let has = |kind: DiagnosticKind, path: &str| d.iter().any(|x| x.kind == kind && x.path == path);
    assert!(has(DiagnosticKind::UnknownKey, "domian"), "{d:?}");
    assert!(has(DiagnosticKind::UnknownKey, "redner"));
    assert!(has(DiagnosticKind::UnknownKey, "optimizer.schedule.iters"));
    assert!(has(DiagnosticKind::UnknownKey, "optimizer.functional.kk"));
    assert!(has(DiagnosticKind::MissingField, "optimizer.functional.k"));
    assert!(has(DiagnosticKind::MissingField, "optimizer.length"));
    assert!(has(DiagnosticKind::MissingField, "domain"));
    assert_eq!(d.len(), 7, "{d:?}");
}

#[test]
fn validate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "empty.json", "");
    assert_eq!(exe().args(["validate", "--config"]).arg(&empty).status().unwrap().code(), Some(1));
    let ok = configs().join("quick_torsion.json");
    assert_eq!(exe().args(["validate", "--config"]).arg(&ok).status().unwrap().code(), Some(0));
}

#[test]
fn solve_writes_outputs_and_audit_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("solve");
    let o = run(&["solve"], &configs().join("quick_torsion.json"), &out, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["result.json", "trace.csv", "density.csv", "network.svg", "field.svg", "density.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let result: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    assert!(result["best_value"].as_f64().unwrap() <= result["initial_value"].as_f64().unwrap());

    // Re-audit the saved result at the solver's spacing.
    let cfg = write(
        tmp.path(),
        "audit.json",
        &format!(r#"{{"command": "audit", "network": {:?}, "grid_h": 0.0625}}"#, out.join("result.json")),
    );
    let again = tmp.path().join("audit");
    let o = run(&["run"], &cfg, &again, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let audit: serde_json::Value = serde_json::from_slice(&fs::read(again.join("audit.json")).unwrap()).unwrap();
    assert_eq!(audit, result["audit"]);
    assert_eq!(fs::read(again.join("density.csv")).unwrap(), fs::read(out.join("density.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_config_and_threads_do_not_matter() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("quick_torsion.json");
    let read = |d: &str| fs::read(tmp.path().join(d).join("result.json")).unwrap();
    run(&["solve"], &cfg, &tmp.path().join("a"), Some("1"));
    run(&["solve"], &cfg, &tmp.path().join("b"), Some("3"));
    assert_eq!(read("a"), read("b"));
    assert_eq!(
        fs::read(tmp.path().join("a/trace.csv")).unwrap(),
        fs::read(tmp.path().join("b/trace.csv")).unwrap()
    );
    let mut c = exe();
    c.args(["solve", "--quiet", "--seed", "99", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("c"));
    assert!(c.status().unwrap().success());
    let r: serde_json::Value = serde_json::from_slice(&read("c")).unwrap();
    assert_ne!(read("a"), read("c"));
    assert!(r["trace"].as_array().unwrap().len() > 0);
}

#[test]
fn bad_thread_count_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["solve"], &configs().join("quick_torsion.json"), tmp.path(), Some("zero"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MAXSHAPE_THREADS"));
}

#[test]
fn missing_config_entry_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"command": "solve"}"#);
    let o = run(&["run"], &cfg, tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn failing_audit_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // A tight comb: densities far above 2π at small radii.
    let mut verts = vec![[0.0, 0.0], [1.0, 0.0]];
    let mut edges = vec![[0usize, 1usize]];
    for i in 0..40 {
        let x = 0.4 + 0.005 * i as f64;
        verts.push([x, 0.0]);
        verts.push([x, 0.3]);
        edges.push([verts.len() - 2, verts.len() - 1]);
    }
    // Split the base at each tooth so the graph is connected through vertices.
    let mut base: Vec<usize> = (0..verts.len()).filter(|&k| k == 0 || k == 1 || (k >= 2 && k % 2 == 0)).collect();
    base.sort_by(|&a, &b| verts[a][0].partial_cmp(&verts[b][0]).unwrap());
    edges.retain(|e| *e != [0, 1]);
    for w in base.windows(2) {
        edges.push([w[0], w[1]]);
    }
    let net = serde_json::json!({ "vertices": verts, "edges": edges });
    let cfg = write(
        tmp.path(),
        "comb.json",
        &serde_json::json!({ "command": "audit", "network": net, "grid_h": 0.0 }).to_string(),
    );
    let o = run(&["audit"], &cfg, &tmp.path().join("o"), None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fixtures_command_reproduces_star_densities() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["fixtures"], &configs().join("fixtures.json"), tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("dyadic_star_depth_62_density.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert_eq!(last, "0,0.0009765625,12,false");
    let left = fs::read_to_string(tmp.path().join("regular_star_density.csv")).unwrap();
    assert!(left.lines().skip(1).all(|l| l.ends_with("true")));
    assert!(tmp.path().join("regular_star.svg").is_file());
}

#[test]
fn evaluate_reports_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["evaluate"], &configs().join("evaluate_plus.json"), tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("evaluate.json")).unwrap()).unwrap();
    assert_eq!(v["functional"], "eigenvalue_1");
    assert!((v["length"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // The plus splits nothing off; λ₁ sits between the empty square's 2π² and
    // the value of a quarter square.
    let lam = v["value"].as_f64().unwrap();
    assert!(lam > 2.0 * std::f64::consts::PI.powi(2) && lam < 8.0 * std::f64::consts::PI.powi(2), "{lam}");
}

#[test]
fn properties_battery_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["properties"], &configs().join("properties.json"), tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("properties.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert!(reports.len() > 50);
    assert!(reports.iter().all(|r| r["pass"] == true));
    for key in ["check", "functional", "fixture", "gap", "tolerance"] {
        assert!(reports[0].get(key).is_some(), "{key}");
    }
}
