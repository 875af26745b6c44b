use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_holo-rmt"));
    c.env_remove("HOLO_RMT_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn small_holographic() -> Value {
    serde_json::json!({
        "schema": 1,
        "geometry": { "side_wavelengths": 1.5 },
        "channel": { "rician_k": 5.0 },
        "snr_db": [0.0, 10.0],
        "mc": { "samples": 300, "seed": 11 }
    })
}

fn iid_weichselberger() -> Value {
    serde_json::json!({
        "schema": 1,
        "channel": { "model": "weichselberger", "profile": "iid", "dims": [6, 4], "los": "none" },
        "snr_db": [5.0]
    })
}

fn assert_schema(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    if let Err(errors) = compiled.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{schema} rejected document: {msgs:?}");
    };
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn configs_match_the_config_schema() {
    for v in [small_holographic(), iid_weichselberger(), serde_json::json!({ "schema": 1 })] {
        assert_schema("config.schema.json", &v);
    }
}

#[test]
fn analyze_writes_schema_valid_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_holographic());
    let out = dir.path().join("out");
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("analyze.json"));
    assert_schema("analyze.schema.json", &doc);
    assert_eq!(doc["results"].as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(out.join("outage_snr10.csv")).unwrap();
    assert!(csv.starts_with("rate,p_outage\n"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn mc_is_deterministic_and_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_holographic());
    let mut csvs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = bin()
            .env("HOLO_RMT_THREADS", threads)
            .args(["mc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--snr-db", "10"])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_schema("mc_summary.schema.json", &read_json(&out.join("mc_summary.json")));
        csvs.push(fs::read(out.join("samples_snr10.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(String::from_utf8_lossy(&csvs[0]).lines().count(), 301);
}

#[test]
fn few_samples_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_holographic());
    let out = dir.path().join("out");
    let o = run(&["mc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--samples", "20"]);
    assert_eq!(code(&o), 0);
    let doc = read_json(&out.join("mc_summary.json"));
    assert_schema("mc_summary.schema.json", &doc);
    let s = &doc["results"][0]["summary"];
    assert_eq!(s["flags"], serde_json::json!(["low-sample"]));
    assert!(s["ks"].is_null());
}

#[test]
fn profile_writes_reloadable_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &serde_json::json!({ "schema": 1, "geometry": { "side_wavelengths": 0.5 } }));
    let out = dir.path().join("out");
    let o = run(&["profile", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("n_R = 1 (ceiling estimate 1)"));
    let summary = read_json(&out.join("profile_summary.json"));
    assert_schema("profile_summary.schema.json", &summary);
    let profile = read_json(&out.join("profile.json"));
    assert_schema("real_matrix.schema.json", &profile);
    assert_eq!(profile, serde_json::json!({ "rows": 1, "cols": 1, "data": [1.0] }));
    assert_eq!(fs::read_to_string(out.join("lattice_rx.csv")).unwrap(), "index,m_x,m_y\n0,0,0\n");
}

#[test]
fn validate_passes_then_flips_when_tightened() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &iid_weichselberger());
    let out = dir.path().join("out");
    let args = ["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let doc = read_json(&out.join("validate.json"));
    assert_schema("validate.schema.json", &doc);
    assert_eq!(doc["passed"], Value::Bool(true));

    let mut tight = args.to_vec();
    tight.extend(["--threshold-scale", "1e-9"]);
    let o = run(&tight);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn zero_profile_entry_fails_preflight() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sigma.json"),
        r#"{"rows":2,"cols":2,"data":[1.0,0.0,1.0,1.0]}"#,
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &serde_json::json!({
            "schema": 1,
            "channel": { "model": "weichselberger", "profile": { "file": "sigma.json" } }
        }),
    );
    let out = dir.path().join("out");
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let doc = read_json(&out.join("validate.json"));
    assert_schema("validate.schema.json", &doc);
    assert!(doc["preflight"].as_str().unwrap().contains("A.2"));
    assert!(doc["criteria"].as_array().unwrap().is_empty());

    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", &serde_json::json!({ "schema": 1, "snr": [3] }));
    let wrong_version = write_config(dir.path(), "v.json", &serde_json::json!({ "schema": 2 }));
    let out = dir.path().join("out");
    for cfg in [bad.clone(), wrong_version, dir.path().join("missing.json")] {
        let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{}", cfg.display());
    }
    assert_eq!(code(&run(&["analyze"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let good = write_config(dir.path(), "good.json", &iid_weichselberger());
    let o = bin()
        .env("HOLO_RMT_THREADS", "zero")
        .args(["analyze", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = iid_weichselberger();
    v["solver"] = serde_json::json!({ "max_iter": 2 });
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("last updates"));
}
