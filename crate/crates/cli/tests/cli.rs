use std::path::Path;
use std::process::{Command, Output};

fn peierls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peierls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = peierls(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Rows of a CSV document as maps from header to field.
fn records(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().map(String::from).zip(r.iter().map(String::from)).collect()
        })
        .collect()
}

fn num(field: &str) -> f64 {
    field.parse().unwrap()
}

#[test]
fn counts_table_has_the_walk_bound_column() {
    let text = stdout(&["counts", "--k-max", "8"]);
    assert!(text.starts_with("k,exact,sa_walk,walk_bound\n"));
    assert!(!text.contains('\r'));
    let rows = records(&text);
    let bounds: Vec<&str> = rows.iter().map(|r| r["walk_bound"].as_str()).collect();
    assert_eq!(bounds, ["300", "2000", "12500", "75000", "437500"]);
    for r in &rows {
        let exact: u64 = r["exact"].parse().unwrap();
        let sa: u64 = r["sa_walk"].parse().unwrap();
        let bound: u64 = r["walk_bound"].parse().unwrap();
        assert!(exact <= sa && sa <= bound);
    }
    assert_eq!(rows[0]["exact"], "1");
}

#[test]
fn counts_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        stdout(&["counts", "--k-max", "9", "--out", d.to_str().unwrap()]);
    }
    for name in ["counts.csv", "classes.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let classes = records(&std::fs::read_to_string(a.path().join("classes.csv")).unwrap());
    let counts = records(&std::fs::read_to_string(a.path().join("counts.csv")).unwrap());
    for row in &counts {
        let total: u64 = classes
            .iter()
            .filter(|c| c["k"] == row["k"])
            .map(|c| c["count"].parse::<u64>().unwrap())
            .sum();
        assert_eq!(total.to_string(), row["exact"]);
    }
}

#[test]
fn counts_json_carries_metadata() {
    let text = stdout(&["counts", "--k-max", "8", "--rule", "seven", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["metadata"]["rule"], "seven");
    assert_eq!(doc["metadata"]["k_max"], 8);
    assert_eq!(doc["rows"][0]["walk_bound"], "300");
    assert!(!doc["classes"].as_array().unwrap().is_empty());
}

#[test]
fn analytic_tail_at_point_nine() {
    let rows = records(&stdout(&["bounds", "--c", "0.9", "--r", "4", "--mode", "analytic"]));
    assert_eq!(rows.len(), 1);
    assert!((num(&rows[0]["tail"]) - 0.08).abs() < 1e-12);
    assert_eq!(rows[0]["guarantee"], "guaranteed");
    assert_eq!(num(&rows[0]["threshold_bound"]), 0.8);
}

#[test]
fn self_avoiding_threshold_is_below_four_fifths() {
    let rows = records(&stdout(&["bounds", "--c", "0.9", "--mode", "sa", "--k-max", "10"]));
    let t = num(&rows[0]["threshold_bound"]);
    assert!(t > 1.0 / 3.0 && t < 0.8, "{t}");
}

#[test]
fn boundary_concentration_is_flagged_not_fatal() {
    let rows = records(&stdout(&["bounds", "--c", "0.8"]));
    assert_eq!(rows[0]["guarantee"], "none");
    assert_eq!(rows[0]["tail"], "");
}

#[test]
fn sweep_emits_one_row_per_concentration() {
    let rows = records(&stdout(&["bounds", "--sweep", "0.82:0.9:0.02", "--r", "6"]));
    let cs: Vec<f64> = rows.iter().map(|r| num(&r["c"])).collect();
    assert_eq!(cs, [0.82, 0.84, 0.86, 0.88, 0.9]);
    let tails: Vec<f64> = rows.iter().map(|r| num(&r["tail"])).collect();
    assert!(tails.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn small_window_simulation_matches_exact_value() {
    for c in [0.3, 0.5, 0.7] {
        let cs = c.to_string();
        let rows = records(&stdout(&["simulate", "--L", "1", "--c", &cs, "--trials", "200000", "--seed", "5"]));
        let exact = c * (1.0 - (1.0f64 - c).powi(4));
        let sigma = (exact * (1.0 - exact) / 200_000.0).sqrt();
        assert!((num(&rows[0]["value"]) - exact).abs() <= 4.0 * sigma);
        assert_eq!(rows[0]["L"], "1");
    }
}

#[test]
fn simulation_output_is_reproducible() {
    let args = ["simulate", "--L", "10", "--c", "0.55,0.6", "--trials", "3000", "--seed", "7"];
    assert_eq!(stdout(&args), stdout(&args));
    let header = stdout(&args).lines().next().unwrap().to_string();
    assert_eq!(header, "L,c,trials,value,std_error,seed");
}

#[test]
fn bisection_lands_in_the_theorem_interval() {
    let args = ["simulate", "--bisect", "--L", "16", "--trials", "1000", "--seed", "7", "--format", "json"];
    let text = stdout(&args);
    assert_eq!(text, stdout(&args));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let t = doc["threshold"]["value"].as_f64().unwrap();
    assert!(t > 1.0 / 3.0 && t < 0.8, "{t}");
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| peierls(args).status.code().unwrap();
    assert_eq!(code(&["counts"]), 2);
    assert_eq!(code(&["counts", "--k-max", "3"]), 2);
    assert_eq!(code(&["bounds", "--c", "1.5"]), 2);
    assert_eq!(code(&["bounds", "--sweep", "0.9:0.8:0.1"]), 2);
    assert_eq!(code(&["simulate", "--L", "4", "--c", "0.5", "--trials", "0"]), 2);
    assert_eq!(code(&["simulate", "--L", "4", "--bisect", "--tol", "0.0001"]), 2);
    assert_eq!(code(&["counts", "--k-max", "12", "--max-clusters", "1000"]), 3);
}

#[test]
fn every_subcommand_has_help_and_json() {
    for sub in ["counts", "bounds", "simulate", "manifest"] {
        let out = peierls(&[sub, "--help"]);
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("--format"), "{sub}");
    }
    for args in [
        &["bounds", "--c", "0.9", "--format", "json"][..],
        &["simulate", "--L", "3", "--c", "0.5", "--trials", "10", "--format", "json"][..],
    ] {
        let doc: serde_json::Value = serde_json::from_str(&stdout(args)).unwrap();
        assert!(doc["metadata"].is_object());
    }
}

fn manifest_files(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn manifest_verifies_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    stdout(&["simulate", "--L", "6", "--c", "0.6", "--trials", "500", "--seed", "3", "--out", d]);
    let m = manifest_files(dir.path());
    assert_eq!(m["seeds"], serde_json::json!([3]));
    assert_eq!(m["files"][0]["name"], "simulate.csv");

    let verify = peierls(&["manifest", d, "--verify"]);
    assert!(verify.status.success());
    let rerun = peierls(&["manifest", d, "--rerun"]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    assert!(String::from_utf8_lossy(&rerun.stdout).contains(",ok"));

    std::fs::write(dir.path().join("simulate.csv"), "tampered\n").unwrap();
    let verify = peierls(&["manifest", d, "--verify"]);
    assert_eq!(verify.status.code(), Some(1));
}
