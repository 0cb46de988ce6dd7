//! Hash observations: memorizing per-seed action sequences is train-perfect and
//! useless on fresh seeds; learning the observation map from reward events
//! transfers in proportion to how much of it was seen.
//!
//! cargo run --release --example hash_separation

use genbench::agents::{evaluate, train, MemorizerAgent, TableInverterAgent, TrainOptions};
use genbench::family::{sample_split, EvalOptions};
use genbench::zoo::make_hash_family;

fn main() -> anyhow::Result<()> {
    let m = 8;
    let family = make_hash_family(m, 11, 64)?;
    let (train_set, eval_set) = sample_split(family.params(), 32, 2000, 1)?;
    let opts = TrainOptions::default();
    let eval = EvalOptions::default();

    let mut memo = MemorizerAgent::new(family.num_actions(), 1 << 10);
    let curve = train(&mut memo, &family, &train_set, 32 << 10, 7, &opts)?;
    let fresh = evaluate(&memo, &family, &eval_set, &eval)?;
    println!(
        "memorizer: {} keys, train {:.4}, fresh {:.4} ± {:.4}",
        memo.len(),
        curve.last().map_or(0.0, |p| p.j_train.mean),
        fresh.mean,
        fresh.stderr
    );

    let mut inverter = TableInverterAgent::new(family.num_actions());
    let curve = train(&mut inverter, &family, &train_set, 32 << 8, 7, &opts)?;
    let fresh = evaluate(&inverter, &family, &eval_set, &eval)?;
    let coverage = inverter.coverage();
    let se = (coverage * (1.0 - coverage) / eval_set.len() as f64).sqrt();
    println!(
        "table inverter: {} goals, train {:.4}, fresh {:.4}, coverage {:.4} (3se = {:.4})",
        inverter.table().len(),
        curve.last().map_or(0.0, |p| p.j_train.mean),
        fresh.mean,
        coverage,
        3.0 * se
    );
    Ok(())
}
