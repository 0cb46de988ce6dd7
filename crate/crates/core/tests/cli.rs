use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_genbench"))
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn grid_gap_config() -> Value {
    json!({
        "schema_version": 1,
        "name": "grid",
        "env": {"family": "goal_gridworld", "width": 4, "height": 4, "start": [0, 0], "key": 5},
        "agent": {"kind": "q_learning", "alpha": 0.5, "epsilon": 0.2},
        "n_train": 4,
        "n_eval": 20,
        "episodes": 300,
        "master_seed": 11,
        "repeats": 3
    })
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn check_exit_codes_follow_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let conflict = run("check", &shipped("hidden_conflict.json"), tmp.path(), &[]);
    assert_eq!(conflict.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&conflict.stdout).contains("Conflict"));
    let cert: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("certificate.json")).unwrap())
            .unwrap();
    assert_eq!(cert["verdict"], "conflict");

    for name in ["hidden_conflict_theta.json", "hidden_vertical.json"] {
        let tmp = tempfile::tempdir().unwrap();
        let out = run("check", &shipped(name), tmp.path(), &[]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn missing_master_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = grid_gap_config();
    cfg.as_object_mut().unwrap().remove("master_seed");
    let path = write_config(tmp.path(), &cfg);
    let out_dir = tmp.path().join("out");
    let out = run("gap", &path, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("master_seed"));
    assert!(!out_dir.join("gap.csv").exists());
}

#[test]
fn unknown_key_and_bad_json_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = grid_gap_config();
    cfg["n_trian"] = json!(3);
    let path = write_config(tmp.path(), &cfg);
    assert_eq!(run("gap", &path, tmp.path(), &[]).status.code(), Some(2));

    std::fs::write(&path, "{ \"schema_version\": 1,").unwrap();
    assert_eq!(run("check", &path, tmp.path(), &[]).status.code(), Some(2));

    let missing = tmp.path().join("nope.json");
    assert_eq!(
        run("check", &missing, tmp.path(), &[]).status.code(),
        Some(2)
    );
}

#[test]
fn gap_repeats_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &grid_gap_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run("gap", &path, &a, &[]).status.success());
    assert!(run("gap", &path, &b, &[]).status.success());
    let bytes = std::fs::read(a.join("gap.csv")).unwrap();
    assert_eq!(bytes, std::fs::read(b.join("gap.csv")).unwrap());
    let rows = csv_rows(&a.join("gap.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r[7].as_str()).collect::<Vec<_>>(),
        ["0", "1", "2"]
    );
    // Timing is off by default, so the last column stays empty.
    assert!(rows.iter().all(|r| r[15].is_empty()));
}

#[test]
fn header_matches_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &grid_gap_config());
    assert!(run("gap", &path, tmp.path(), &["--timing"])
        .status
        .success());
    let text = std::fs::read_to_string(tmp.path().join("gap.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        genbench::bench::CSV_COLUMNS.join(",")
    );
    let rows = csv_rows(&tmp.path().join("gap.csv"));
    assert!(rows.iter().all(|r| r[15].parse::<f64>().is_ok()));
}

#[test]
fn evaluating_on_the_training_sample_gives_zero_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = grid_gap_config();
    cfg["eval_equals_train"] = json!(true);
    let path = write_config(tmp.path(), &cfg);
    assert!(run("gap", &path, tmp.path(), &[]).status.success());
    for row in csv_rows(&tmp.path().join("gap.csv")) {
        assert_eq!(row[8], row[9]);
        assert_eq!(row[10], "0");
    }
}

#[test]
fn one_point_sweep_matches_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = grid_gap_config();
    cfg["sweep"] = json!({"axis": "n_train", "values": [4]});
    let path = write_config(tmp.path(), &cfg);
    assert!(run("gap", &path, tmp.path(), &[]).status.success());
    assert!(run("sweep", &path, tmp.path(), &[]).status.success());
    let gap = csv_rows(&tmp.path().join("gap.csv"));
    let sweep = csv_rows(&tmp.path().join("sweep.csv"));
    assert_eq!(gap.len(), sweep.len());
    for (g, s) in gap.iter().zip(&sweep) {
        // Same numbers; only the run id carries the sweep point.
        assert_eq!(g[1..], s[1..]);
    }
    let summary: Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 1);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("w1"), tmp.path().join("w8"));
    let cfg = shipped("wrapper_sweep.json");
    assert!(run("sweep", &cfg, &a, &["--workers", "1"]).status.success());
    assert!(run("sweep", &cfg, &b, &["--workers", "8"]).status.success());
    for f in ["sweep.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn oracle_writes_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["oracle", "--seed", "0", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in [
        "dp_enumeration.json",
        "backward_induction.json",
        "gradients.json",
        "prf_reachability.json",
    ] {
        assert_eq!(
            std::fs::read(tmp.path().join(name)).unwrap(),
            std::fs::read(golden.join(name)).unwrap()
        );
    }
}

#[test]
fn shipped_configs_load_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = genbench::bench::RunConfig::load(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        let again = genbench::bench::RunConfig::from_json(&cfg.to_json(), "roundtrip").unwrap();
        assert_eq!(again.to_json(), cfg.to_json());
        n += 1;
    }
    assert_eq!(n, 9);
}
