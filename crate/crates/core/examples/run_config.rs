//! Load a run config, validate it, and run the optimality check it describes.
//!
//! cargo run --example run_config -- crates/core/configs/hidden_conflict_theta.json

use genbench::bench::{run_check, RunConfig, RunOptions};

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/hidden_conflict.json").to_string()
    });
    let cfg = RunConfig::load(path.as_ref())?;
    cfg.validate()?;
    println!("{}", cfg.to_json());
    let out = std::env::temp_dir().join("genbench-run-config");
    let (cert, file) = run_check(
        &cfg,
        &RunOptions {
            out: Some(out),
            ..RunOptions::default()
        },
    )?;
    println!("{} -> {}", cert.verdict.name(), file.display());
    Ok(())
}
