use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fairattn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairattn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fairattn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    fairattn(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Synthetic data `name.csv` plus `name.schema.json`.
    fn synth(&self, name: &str, n: usize, seed: u64, variant: &str) -> (PathBuf, PathBuf) {
        let csv = self.path(&format!("{name}.csv"));
        ok(&["synth", "--n", &n.to_string(), "--seed", &seed.to_string(), "--variant", variant, "--out", s(&csv)]);
        (csv, self.path(&format!("{name}.schema.json")))
    }

    fn train(&self, data: &Path, schema: &Path, out: &str, extra: &[&str]) -> PathBuf {
        let model = self.path(out);
        let mut args = vec![
            "train", "--data", s(data), "--schema", s(schema), "--epochs", "2", "--batch", "64",
            "--lr", "0.01", "--out", s(&model),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        model
    }
}

fn sha256(p: &Path) -> String {
    Sha256::digest(std::fs::read(p).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

fn assert_manifest(path: &Path, command: &str) {
    let m = json(path);
    assert_eq!(m["command"], command);
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for entry in outputs.iter().chain(m["inputs"].as_array().unwrap()) {
        let file = Path::new(entry["path"].as_str().unwrap());
        assert_eq!(entry["sha256"].as_str().unwrap(), sha256(file), "{file:?}");
    }
}

#[test]
fn synth_is_reproducible_and_marks_the_sensitive_feature() {
    let f = Fixture::new();
    let (a, schema) = f.synth("a", 1000, 7, "main");
    let (b, _) = f.synth("b", 1000, 7, "main");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let schema = json(&schema);
    assert_eq!(schema["features"][0]["name"], "X_1");
    assert_eq!(schema["features"][0]["sensitive"], true);
    assert_manifest(&f.path("a.manifest.json"), "synth");
}

#[test]
fn synth_positive_rate() {
    let f = Fixture::new();
    let (csv, _) = f.synth("big", 100_000, 3, "main");
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    let positives = rows.iter().filter(|r| r.ends_with(",1")).count();
    let rate = positives as f64 / rows.len() as f64;
    assert!((rate - 0.35).abs() <= 0.01, "{rate}");
}

#[test]
fn train_eval_round_trip() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 1500, 1, "main");
    let model = f.train(&csv, &schema, "off.json", &["--car", "off"]);
    assert_manifest(&f.path("off.manifest.json"), "train");
    let log = std::fs::read_to_string(f.path("off.epochs.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
    let record: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    for key in ["epoch", "L_perf", "L_CAR", "lambda", "L_total"] {
        assert!(record.get(key).is_some(), "{key}");
    }

    let report = f.path("perf.json");
    ok(&["eval", "--model", s(&model), "--data", s(&csv), "--schema", s(&schema), "--out", s(&report)]);
    let r = json(&report);
    assert!(r["AUROC"].as_f64().unwrap() > 0.5);
    let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(
        keys,
        ["AUPRC", "AUROC", "Accuracy", "F1", "FNR", "FPR", "annotations", "rows", "task", "threshold"]
    );
    assert_manifest(&f.path("perf.manifest.json"), "eval");

    // evaluating twice gives identical reports
    let again = f.path("perf2.json");
    ok(&["eval", "--model", s(&model), "--data", s(&csv), "--out", s(&again)]);
    assert_eq!(std::fs::read(report).unwrap(), std::fs::read(again).unwrap());
}

#[test]
fn same_flags_give_identical_models_and_lambda_zero_matches_off() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 600, 2, "main");
    let a = f.train(&csv, &schema, "a.json", &["--seed", "5"]);
    let b = f.train(&csv, &schema, "b.json", &["--seed", "5"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());

    let off = json(&f.train(&csv, &schema, "off.json", &["--car", "off"]));
    let zero = json(&f.train(&csv, &schema, "zero.json", &["--lambda", "0"]));
    assert_eq!(off["params"], zero["params"]);
    assert_eq!(off["threshold"], zero["threshold"]);
}

#[test]
fn usage_errors_exit_2() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 200, 2, "main");
    let out = f.path("m.json");
    let base = ["train", "--data", s(&csv), "--schema", s(&schema), "--out", s(&out)];
    let with = |extra: &[&str]| {
        let mut v = base.to_vec();
        v.extend_from_slice(extra);
        code(&v)
    };
    assert_eq!(with(&["--car", "aug", "--remove-sensitive"]), 2);
    assert_eq!(with(&["--car", "cda", "--remove-sensitive"]), 2);
    assert_eq!(with(&["--lambda", "-1"]), 2);
    assert_eq!(with(&["--car", "off", "--lambda", "3"]), 2);
    assert_eq!(with(&["--task", "regression"]), 2);
    assert_eq!(with(&["--epochs", "0"]), 2);
    assert_eq!(code(&["train", "--data", s(&csv)]), 2);
    assert!(!out.exists());
}

#[test]
fn data_and_numeric_failures() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 300, 2, "main");
    let (proxy, _) = f.synth("p", 50, 2, "proxy");
    let model = f.train(&csv, &schema, "m.json", &["--car", "off"]);
    let out = fairattn(&["eval", "--model", s(&model), "--data", s(&proxy), "--out", s(&f.path("r.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("X_4"));
    assert_eq!(
        code(&["eval", "--model", s(&f.path("missing.json")), "--data", s(&csv), "--out", s(&f.path("r.json"))]),
        3
    );
    let x = f.path("x.json");
    let diverging = [
        "train", "--data", s(&csv), "--schema", s(&schema), "--car", "off", "--lr", "1e300",
        "--batch", "64", "--out", s(&x),
    ];
    assert_eq!(code(&diverging), 4);
}

#[test]
fn audit_of_removal_model_is_sensitivity_free() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 400, 4, "main");
    let model = f.train(&csv, &schema, "rm.json", &["--remove-sensitive"]);

    // 40/60 split of the sensitive feature
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let mut skewed = format!("{}\n", lines.next().unwrap());
    for (i, line) in lines.take(100).enumerate() {
        let rest = line.split_once(',').unwrap().1;
        skewed.push_str(&format!("{},{rest}\n", if i < 40 { 0 } else { 1 }));
    }
    let skewed_path = f.path("skewed.csv");
    std::fs::write(&skewed_path, skewed).unwrap();

    let report = f.path("audit.json");
    ok(&["audit", "--model", s(&model), "--data", s(&skewed_path), "--out", s(&report)]);
    let r = json(&report);
    for key in ["AvgIF", "F1_Gap", "AUROC_Gap", "AUPRC_Gap"] {
        assert!(r[key].as_f64().unwrap() < 1e-6, "{key}: {}", r[key]);
    }
    let sizes: Vec<u64> = r["partitions"].as_array().unwrap().iter().map(|p| p["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [40, 40, 60, 60]);
    assert_manifest(&f.path("audit.manifest.json"), "audit");
}

#[test]
fn attention_export() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 300, 5, "main");
    let model = f.train(&csv, &schema, "m.json", &["--layers", "2", "--lambda", "10"]);
    let dir = f.path("attn");
    ok(&["attention", "--model", s(&model), "--data", s(&csv), "--out", s(&dir), "--all-layers"]);

    let text = std::fs::read_to_string(dir.join("pre_softmax.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "X_1,X_2,X_3");
    let m: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(m.len(), 3);
    for i in 0..3 {
        assert_eq!(m[i].len(), 3);
        for j in 0..3 {
            assert!((m[i][j] - m[j][i]).abs() <= 1e-9);
        }
    }
    let post = std::fs::read_to_string(dir.join("post_softmax.csv")).unwrap();
    for line in post.lines().skip(1) {
        let sum: f64 = line.split(',').map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }
    for l in 1..=2 {
        assert!(dir.join(format!("layer{l}_pre_softmax.csv")).exists());
        assert!(dir.join(format!("layer{l}_post_softmax.csv")).exists());
    }
    let profile = json(&dir.join("significance.json"));
    assert_eq!(profile["ranking"].as_array().unwrap().len(), 3);
    assert_manifest(&dir.join("manifest.json"), "attention");
}

#[test]
fn sweep_table() {
    let f = Fixture::new();
    let (csv, schema) = f.synth("d", 400, 6, "main");
    let out = f.path("sweep.csv");
    let args = [
        "sweep", "--data", s(&csv), "--schema", s(&schema), "--lambdas", "10,0,1", "--epochs", "1",
        "--batch", "64", "--out", s(&out),
    ];
    let run = Command::new(env!("CARGO_BIN_EXE_fairattn"))
        .args(args)
        .env("FAIRATTN_THREADS", "2")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,DPD,EqOdd,EqOpp,AvgIF,F1_Gap,AUROC_Gap,AUPRC_Gap");
    let lambdas: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(lambdas, ["10", "0", "1"]);
    assert_manifest(&f.path("sweep.manifest.json"), "sweep");

    // thread count does not change the table
    let serial = f.path("serial.csv");
    let mut args1 = args;
    args1[args1.len() - 1] = s(&serial);
    let run = Command::new(env!("CARGO_BIN_EXE_fairattn"))
        .args(args1)
        .env("FAIRATTN_THREADS", "1")
        .output()
        .unwrap();
    assert!(run.status.success());
    assert_eq!(text, std::fs::read_to_string(serial).unwrap());

    let bad = Command::new(env!("CARGO_BIN_EXE_fairattn"))
        .args(args)
        .env("FAIRATTN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let mut single = args;
    single[6] = "1";
    assert_eq!(code(&single), 2);
}
