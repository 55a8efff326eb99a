use std::path::PathBuf;
use std::process::Command;

use jsonschema::JSONSchema;
use serde_json::Value;

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn compile(name: &str) -> JSONSchema {
    let mut opts = JSONSchema::options();
    for dep in ["pmf.schema.json", "cond-pmf.schema.json", "codec-config.schema.json"] {
        opts.with_document(format!("https://bycm.example/schemas/{dep}"), load(dep));
    }
    opts.compile(&load(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_valid(schema: &JSONSchema, doc: &Value, what: &str) {
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{what}: {msgs:#?}");
    }
}

fn run_json(args: &[&str]) -> Value {
    let o = Command::new(env!("CARGO_BIN_EXE_bycm")).args(args).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn every_schema_is_well_formed() {
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        compile(&name);
    }
}

#[test]
fn library_pmfs_match_the_pmf_schema() {
    let schema = compile("pmf.schema.json");
    for p in [bycm::prob::JointPmf::dsbs(0.2).unwrap(), bycm::prob::JointPmf::bernoulli(0.3).unwrap()] {
        assert_valid(&schema, &serde_json::to_value(&p).unwrap(), "pmf");
    }
    let bad = serde_json::json!({ "axes": [["0", "1"]], "mass": [-0.5, 1.5] });
    assert!(!schema.is_valid(&bad));
}

#[test]
fn command_outputs_match_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("cycle.csv");
    std::fs::write(&edges, "side1,side2\n0,0\n0,1\n1,1\n1,2\n2,2\n2,0\n").unwrap();
    let envelope = compile("output.schema.json");
    let cases: [(&str, Vec<&str>); 4] = [
        ("simulate.schema.json", vec!["simulate", "--dsbs", "0.25", "--n", "6,8", "--trials", "10", "--eps-prime", "0.8"]),
        ("simulate.schema.json", vec!["simulate", "--dsbs", "0.25", "--n", "8", "--trials", "3", "--eps-prime", "0.5"]),
        ("graphcheck.schema.json", vec!["graphcheck", "--edges", edges.to_str().unwrap(), "--n1", "3", "--n2", "3", "--params", "3,3,2,2,1"]),
        ("duality.schema.json", vec!["duality", "--dsbs", "0.25", "--d", "0.1", "--grid", "16"]),
    ];
    for (schema, args) in cases {
        let doc = run_json(&args);
        assert_valid(&envelope, &doc, args[0]);
        assert_valid(&compile(schema), &doc["result"], schema);
    }
}
