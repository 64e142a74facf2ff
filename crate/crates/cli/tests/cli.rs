use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sketchlab::SketchOperator;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn manifest(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

#[test]
fn verify_lemma_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify-lemma", "--dims", "1x1", "--frobenius-cap", "0.6", "--samples", "100000", "--matrices", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = jsonl(&dir.path().join("verify-lemma.jsonl"));
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert!((r["exact"].as_f64().unwrap() - 1.25).abs() < 1e-12);
        assert_eq!(r["pass"], Value::Bool(true));
    }
}

#[test]
fn verify_lemma_zero_cap_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify-lemma", "--frobenius-cap", "0", "--samples", "1000", "--matrices", "2"]);
    assert_eq!(code(&o), 0);
    for r in jsonl(&dir.path().join("verify-lemma.jsonl")) {
        assert_eq!(r["exact"].as_f64(), Some(1.0));
        assert_eq!(r["estimate"].as_f64(), Some(1.0));
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify-lemma", "--samples", "10"][..],
        &["xi", "--norm-sq", "0"],
        &["gap", "--instance", "kyfan", "--trials", "0"],
        &["gap", "--instance", "nonsense"],
        &["detect", "--k-grid", "0,4"],
        &["detect", "--n", "4", "--k-grid", "17"],
        &["detect", "--statistic", "likelihood"],
        &["no-such-command"],
    ] {
        assert_eq!(code(&run(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn xi_mean_matches() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["xi", "--k-grid", "16", "--norm-sq", "0.05", "--trials", "10000"]);
    assert_eq!(code(&o), 0);
    let r = &jsonl(&dir.path().join("xi.jsonl"))[0];
    assert!((r["expected"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    let (mean, se) = (r["mean_xi"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
    assert!((mean - 0.8).abs() <= 4.0 * se);
}

#[test]
fn chi2_bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["chi2", "--k-grid", "100", "--norm-sq", "0.01", "--trials", "5000", "--c-grid", "0.001,0.05"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = jsonl(&dir.path().join("tv-bounds.jsonl"));
    assert_eq!(rows.len(), 2);
    for r in rows {
        let (kappa, c) = (r["k_norm4"].as_f64().unwrap(), r["c"].as_f64().unwrap());
        let want = (kappa / (1.0 - 2.0 * c)).sqrt() + 2.0 * c / (1.0 - 2.0 * c);
        assert!((r["tv_bound"].as_f64().unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn chi2_acceptance_floor_has_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["chi2", "--k-grid", "16", "--norm-sq", "3", "--trials", "1000"]);
    assert_eq!(code(&o), 4);
    assert_eq!(manifest(dir.path(), "chi2")["exit_code"], 4);
}

#[test]
fn detect_kyfan_thresholds_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["detect", "--instance", "kyfan", "--n", "256", "--s", "1", "--k-grid", "1", "--trials", "50", "--gap-trials", "10"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let gap = &manifest(dir.path(), "detect")["instance"]["resolved"]["gap"];
    assert!((gap["null_upper"].as_f64().unwrap() - 33.6).abs() < 1e-9);
    assert!((gap["spiked_lower"].as_f64().unwrap() - 38.4).abs() < 1e-9);
}

#[test]
fn detect_rect_gap_and_single_row_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["detect", "--instance", "eps-operator-rect", "--d", "64", "--eps", "0.25", "--k-grid", "1", "--trials", "50"],
    );
    assert_eq!(code(&o), 0);
    let g = &jsonl(&dir.path().join("gap.jsonl"))[0];
    assert!(g["null_rate"].as_f64().unwrap() >= 0.9);
    assert!(g["spiked_rate"].as_f64().unwrap() >= 0.9);
    let csv = fs::read_to_string(dir.path().join("detect.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# manifest=detect.manifest.json");
    assert_eq!(lines[1], "k,side-null-rate,side-spiked-rate,advantage,ci-lo,ci-hi,statistic,seed");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1,"));
}

#[test]
fn gap_alpha_operator_separates() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["gap", "--instance", "alpha-operator", "--n", "256", "--alpha", "4", "--constant", "5", "--trials", "100"],
    );
    assert_eq!(code(&o), 0);
    let g = &jsonl(&dir.path().join("gap.jsonl"))[0];
    assert!(g["spiked_min"].as_f64().unwrap() > g["null_max"].as_f64().unwrap());
}

#[test]
fn gap_schatten_reports_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gap", "--instance", "schatten-p", "--n", "64", "--p", "4", "--trials", "50"]);
    assert!(matches!(code(&o), 0 | 1));
    let g = &jsonl(&dir.path().join("gap.jsonl"))[0];
    assert!(g["median_ratio"].as_f64().unwrap() > 1.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("median ratio"));
}

#[test]
fn sweep_unreachable_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sweep", "--n", "8", "--norm-sq", "0.1", "--k-grid", "1,8,64", "--trials", "60"]);
    assert_eq!(code(&o), 3);
    let rows = jsonl(&dir.path().join("sweep.jsonl"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["regime"], "sub-critical");
    let notes = manifest(dir.path(), "sweep")["notes"].to_string();
    assert!(notes.contains("unreachable"));
}

#[test]
fn sweep_super_critical_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep", "--n", "16", "--norm-sq", "0.5", "--k-grid", "logspace:1:256:3", "--trials", "200", "--super-level", "60"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rows = jsonl(&dir.path().join("sweep.jsonl"));
    assert_eq!(rows.last().unwrap()["regime"], "super-critical");
}

#[test]
fn outputs_are_byte_identical_and_reference_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "detect", "--n", "8", "--norm-sq", "0.3", "--k-grid", "1,4,16", "--trials", "80"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    let m = manifest(a.path(), "detect");
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for name in outputs {
        let name = name.as_str().unwrap();
        let x = fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
        assert!(String::from_utf8(x).unwrap().contains("detect.manifest.json"), "{name}");
    }
    assert_eq!(m["seed"], 7);
    assert!(m["started"].is_string() && m["finished"].is_string());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# xi grid\nk-grid = 4\nnorm-sq = 0.1\ntrials = 500\nseed = 3\n").unwrap();
    let o = run(dir.path(), &["--config", conf.to_str().unwrap(), "xi", "--trials", "600"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(dir.path(), "xi");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config"]["global"]["trials"], 600);
    let r = &jsonl(&dir.path().join("xi.jsonl"))[0];
    assert_eq!(r["k"], 4);
}

#[test]
fn env_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .env("SKETCHLAB_OUT_DIR", dir.path())
        .args(["dump-sketch", "--k", "3", "--m", "2", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("dump-sketch.manifest.json").exists());
}

#[test]
fn dumped_sketch_loads() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dump-sketch", "--k", "6", "--m", "3", "--n", "4"]);
    assert_eq!(code(&o), 0);
    let s = SketchOperator::load(fs::File::open(dir.path().join("sketch.bin")).unwrap()).unwrap();
    assert_eq!((s.k(), s.shape()), (6, (3, 4)));
    assert!(s.gram_residual() <= 1e-10);
}
