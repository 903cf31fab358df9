use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poisson-chaos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn data_rows(stdout: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn product_check_passes_on_random_kernels() {
    let out = run(&[
        "product-check",
        "--orders",
        "2,2",
        "--atoms",
        "2",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&out.stdout);
    let pathwise = rows
        .iter()
        .find(|r| r.starts_with("pathwise_identity"))
        .unwrap();
    let value: f64 = pathwise.split(',').nth(1).unwrap().parse().unwrap();
    assert!(value <= 1e-8);
    assert!(rows.iter().skip(1).all(|r| r.ends_with("pass")));
}

#[test]
fn identity_failure_exit_code() {
    // A tolerance below rounding level cannot be met.
    let out = run(&[
        "product-check",
        "--orders",
        "3,2",
        "--atoms",
        "3",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn diagnose_uniform_family_has_fifty_rows() {
    let out = run(&["diagnose", "--family", "uniform", "--indices", "1..50"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 51);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# overall: consistent with convergence"));
    assert!(text.contains("Uniform integrability"));
    assert!(text.contains("# tool: poisson-chaos"));
}

#[test]
fn diagnose_json_embeds_seed_and_formulas() {
    let out = run(&[
        "diagnose",
        "--family",
        "block-tensor",
        "--param",
        "2",
        "--indices",
        "1..4",
        "--samples",
        "1000",
        "--seed",
        "5",
        "--format",
        "json-doc",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["run"]["seed"], 5);
    assert!(v["run"]["rng"].as_str().unwrap().contains("ChaCha8"));
    assert!(v["columns"]["var_gamma"].as_str().unwrap().contains("m^2"));
    assert_eq!(v["reports"].as_array().unwrap().len(), 4);
    assert!(v["reports"][0]["mc_ks_distance"].is_number());
}

#[test]
fn decompose_refuses_truncated_order() {
    let dir = tempfile::tempdir().unwrap();
    let space = write(
        dir.path(),
        "space.json",
        r#"{"atoms": 2, "masses": [1, 2]}"#,
    );
    let func = write(
        dir.path(),
        "f.json",
        r#"{"functional": {"kind": "chaos", "kernels": [{"order": 2, "multiset": {"0,1": 1.0}}]}}"#,
    );
    let out = run(&[
        "decompose",
        "--space",
        &space,
        "--kernels",
        &func,
        "--max-order",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual chaos beyond max order"));
}

#[test]
fn decompose_recovers_declared_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let space = write(
        dir.path(),
        "space.json",
        r#"{"atoms": 2, "masses": [1, 2]}"#,
    );
    let func = write(
        dir.path(),
        "f.json",
        r#"{"functional": {"kind": "chaos", "kernels": [{"order": 2, "multiset": {"0,1": 1.5}}]}}"#,
    );
    let out = run(&["decompose", "--space", &space, "--kernels", &func]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&out.stdout);
    for r in &rows[1..] {
        let cols: Vec<&str> = r.split(',').collect();
        let v: f64 = cols[2].parse().unwrap();
        let want = if cols[0] == "2" && cols[1] == "0 1" {
            1.5
        } else {
            0.0
        };
        assert!((v - want).abs() < 1e-8, "{r}");
    }
}

#[test]
fn budget_exit_code_names_budget() {
    let dir = tempfile::tempdir().unwrap();
    let space = write(
        dir.path(),
        "space.json",
        r#"{"atoms": 2, "masses": [1, 2]}"#,
    );
    let func = write(
        dir.path(),
        "f.json",
        r#"{"functional": {"kind": "polynomial", "terms": [{"coefficient": 1, "powers": [3, 1]}]}}"#,
    );
    let out = run(&[
        "decompose",
        "--space",
        &space,
        "--kernels",
        &func,
        "--budget",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn validation_errors_name_the_field() {
    let out = run(&["diagnose", "--family", "uniform", "--indices", "9..2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("indices"));

    let dir = tempfile::tempdir().unwrap();
    let space = write(
        dir.path(),
        "space.json",
        r#"{"atoms": 2, "masses": [1, -2]}"#,
    );
    let out = run(&["product-check", "--space", &space]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["product-check", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
}

#[test]
fn explicit_family_document() {
    let dir = tempfile::tempdir().unwrap();
    let doc = write(
        dir.path(),
        "family.json",
        r#"{"sequence": [
            {"index": 1, "space": {"atoms": 1, "masses": [1]}, "kernel": {"order": 1, "dense": [1]}},
            {"index": 2, "space": {"atoms": 2, "masses": [1, 1]}, "kernel": {"order": 1, "dense": [0.7071067811865476, 0.7071067811865476]}}
        ]}"#,
    );
    let out = run(&["diagnose", "--kernels", &doc, "--indices", "1..2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data_rows(&out.stdout).len(), 3);
}

#[test]
fn multivariate_mixed_orders() {
    let out = run(&[
        "diagnose-mv",
        "--family",
        "uniform",
        "--family",
        "block-tensor",
        "--indices",
        "1..5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    for r in data_rows(&out.stdout).iter().skip(1).take(5) {
        let cols: Vec<&str> = r.split(',').collect();
        assert_eq!(cols[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn multivariate_dimension_mismatch() {
    let out = run(&[
        "diagnose-mv",
        "--family",
        "uniform",
        "--indices",
        "1..3",
        "--target",
        "[[1,0],[0,1]]",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_writes_requested_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run(&[
        "simulate",
        "--family",
        "uniform",
        "--indices",
        "3..3",
        "--samples",
        "25",
        "--seed",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(out_path).unwrap();
    assert_eq!(data_rows(text.as_bytes()).len(), 26);
}
