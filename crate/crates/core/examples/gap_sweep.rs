//! Generalization gap of tabular Q-learning against the number of training goals,
//! driven through the bench runner. Writes sweep.csv and summary.json to a temp dir.
//!
//! cargo run --release --example gap_sweep

use genbench::bench::{run_sweep, RunConfig, RunOptions};

const CONFIG: &str = r#"{
  "schema_version": 1,
  "name": "goal-grid",
  "env": {"family": "goal_gridworld", "width": 5, "height": 5, "start": [0, 0], "key": 21},
  "agent": {"kind": "q_learning", "alpha": 0.5, "epsilon": 0.2},
  "n_train": 4,
  "n_eval": 200,
  "episodes": 4000,
  "master_seed": 3,
  "repeats": 10,
  "sweep": {"axis": "n_train", "values": [1, 4, 16, 64]}
}"#;

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::from_json(CONFIG, "inline")?;
    let dir = std::env::temp_dir().join("genbench-gap-sweep");
    let (_, summary) = run_sweep(
        &cfg,
        &RunOptions {
            out: Some(dir.clone()),
            ..RunOptions::default()
        },
    )?;
    println!(
        "{:>8} {:>10} {:>10} {:>10}",
        "n_train", "J_train", "J_pop", "median gap"
    );
    for p in &summary.points {
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>10.4}",
            p.value, p.mean_j_train, p.mean_j_population, p.median_gap
        );
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
