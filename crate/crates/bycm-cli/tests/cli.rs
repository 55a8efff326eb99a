use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bycm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bycm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn header_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key} ")))
        .unwrap_or_else(|| panic!("no {key} header in {text}"))
        .to_string()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn fig_1b(dir: &Path) -> PathBuf {
    let path = dir.join("cycle.csv");
    std::fs::write(&path, "side1,side2\n0,0\n0,1\n1,1\n1,2\n2,2\n2,0\n").unwrap();
    path
}

#[test]
fn region_sweep_has_one_nonincreasing_row_per_budget() {
    let o = bycm(&["region", "--dsbs", "0.2", "--d", "0,0.05,0.1,0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# bycm "));
    assert_eq!(header_value(&text, "seed"), "0");
    assert_eq!(header_value(&text, "config_hash").len(), 64);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    let rates: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{rates:?}");
    assert!((rates[3] - 1.0).abs() < 0.02);
}

#[test]
fn zero_trials_is_a_config_error() {
    let o = bycm(&["simulate", "--dsbs", "0.25", "--n", "8", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--trials"));
}

#[test]
fn simulate_runs_each_block_length() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sim");
    let o = bycm(&["simulate", "--dsbs", "0.25", "--n", "6,8", "--trials", "20", "--eps-prime", "0.8", "--out", prefix.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim.json")).unwrap()).unwrap();
    let runs = doc["result"]["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[1]["summary"]["n"], 8);
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert_eq!(header_value(&csv, "config_hash"), doc["meta"]["config_hash"].as_str().unwrap());
    let rows = data_rows(&csv);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["6", "8"]);

    let o = bycm(&["graphcheck", "--induced", "--dsbs", "0.25", "--n", "6,8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n"));
}

#[test]
fn bad_fields_are_named_with_exit_two() {
    let o = bycm(&["simulate", "--dsbs", "0.25", "--aux", "bsc:x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--aux"));
    let o = bycm(&["region", "--d", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--dsbs"));
}

#[test]
fn infeasible_and_capacity_exit_codes() {
    let o = bycm(&["region", "--dsbs", "0.2", "--d", "0", "--aux-size", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = bycm(&["simulate", "--dsbs", "0.25", "--n", "40", "--eps-prime", "1", "--trials", "1"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn graphcheck_accepts_the_six_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let edges = fig_1b(dir.path());
    let o = bycm(&["graphcheck", "--edges", edges.to_str().unwrap(), "--n1", "3", "--n2", "3", "--params", "3,3,2,2,1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("nearly semi-regular: true"));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["result"]["verdict"], "nearly semi-regular: true");
    assert_eq!(doc["result"]["summary"]["edges"], 6);

    let o = bycm(&["graphcheck", "--edges", edges.to_str().unwrap(), "--n1", "3", "--n2", "3", "--params", "3,3,3,3,1"]);
    assert!(stderr(&o).contains("nearly semi-regular: false"));
}

#[test]
fn duality_report_passes_on_the_reference_instance() {
    let o = bycm(&["duality", "--dsbs", "0.25", "--d", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let report = &doc["result"]["report"];
    assert_eq!(report["passed"], true);
    assert!(report["gap"].as_f64().unwrap() < 0.03);
    assert_eq!(report["byp_graph"], report["sbc_graph"]);

    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("dual");
    let o = bycm(&["duality", "--dsbs", "0.25", "--d", "0.1", "--out", prefix.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("dual.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4);
    let mass: f64 = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-9);
}

/// Every file written under `name`, keyed by extension.
fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<(String, Vec<u8>)> {
    let prefix = dir.join(name);
    let mut full = args.to_vec();
    full.extend(["--out", prefix.to_str().unwrap()]);
    let o = bycm(&full);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_stem().unwrap() == name)
        .map(|p| (p.extension().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    assert!(!files.is_empty(), "no output for {args:?}");
    files.sort();
    files
}

#[test]
fn every_subcommand_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let edges = fig_1b(dir.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["region", "--dsbs", "0.2", "--d", "0,0.1", "--grid", "16"],
        vec!["simulate", "--dsbs", "0.25", "--n", "8", "--trials", "40", "--seed", "11"],
        vec!["graphcheck", "--induced", "--dsbs", "0.25", "--n", "8", "--trials", "2", "--seed", "3"],
        vec!["graphcheck", "--edges", edges.to_str().unwrap(), "--n1", "3", "--n2", "3", "--params", "3,3,2,2,1"],
        vec!["duality", "--dsbs", "0.25", "--d", "0.1", "--grid", "16"],
    ];
    for (k, args) in cases.iter().enumerate() {
        let a = run_to(dir.path(), &format!("a{k}"), args);
        let b = run_to(dir.path(), &format!("b{k}"), args);
        assert!(a == b, "{args:?} differs between runs");
    }
}

#[test]
fn config_hash_tracks_semantic_fields_only() {
    let hash = |args: &[&str]| header_value(&stdout(&bycm(args)), "config_hash");
    let base = hash(&["region", "--dsbs", "0.2", "--d", "0.1", "--grid", "8"]);
    assert_eq!(base, hash(&["region", "--dsbs", "0.2", "--d", "0.1", "--grid", "8"]));
    assert_ne!(base, hash(&["region", "--dsbs", "0.2", "--d", "0.05", "--grid", "8"]));
    assert_ne!(base, hash(&["region", "--dsbs", "0.2", "--d", "0.1", "--grid", "16"]));
    assert_ne!(base, hash(&["region", "--dsbs", "0.2", "--d", "0.1", "--grid", "8", "--seed", "1"]));

    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"axes": [["0","1"],["0","1"]], "mass": [[0.4,0.1],[0.1,0.4]]}"#;
    let (p1, p2) = (dir.path().join("one.json"), dir.path().join("two.json"));
    std::fs::write(&p1, text).unwrap();
    std::fs::write(&p2, text).unwrap();
    let h1 = hash(&["region", "--source", p1.to_str().unwrap(), "--grid", "8"]);
    let h2 = hash(&["region", "--source", p2.to_str().unwrap(), "--grid", "8"]);
    assert_eq!(h1, h2);
}
