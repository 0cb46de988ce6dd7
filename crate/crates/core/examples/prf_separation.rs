//! Pseudorandom dynamics: a learned dynamics model carries over to fresh seeds,
//! a per-seed memorizer does not.
//!
//! cargo run --release --example prf_separation

use std::time::Instant;

use genbench::agents::{evaluate, train, MemorizerAgent, ModelLearnerAgent, TrainOptions};
use genbench::family::{sample_split, EvalOptions};
use genbench::zoo::make_prf_family;

fn main() -> anyhow::Result<()> {
    let m = 8;
    let horizon = 2;
    let family = make_prf_family(m, 17, m, horizon)?;
    let (train_set, eval_set) = sample_split(family.params(), 1024, 2000, 3)?;
    let opts = TrainOptions::default();
    let eval = EvalOptions::default();

    let clock = Instant::now();
    let mut learner = ModelLearnerAgent::new(family.num_actions());
    let curve = train(&mut learner, &family, &train_set, 120_000, 5, &opts)?;
    let fresh = evaluate(&learner, &family, &eval_set, &eval)?;
    println!(
        "model learner: coverage {:.4}, train {:.4}, fresh {:.4} ({:.1?})",
        learner.coverage().unwrap_or(0.0),
        curve.last().map_or(0.0, |p| p.j_train.mean),
        fresh.mean,
        clock.elapsed()
    );

    let clock = Instant::now();
    let (small_train, _) = sample_split(family.params(), 32, 0, 3)?;
    let mut memo = MemorizerAgent::new(family.num_actions(), 4096);
    let curve = train(&mut memo, &family, &small_train, 32 * 4096, 5, &opts)?;
    let fresh = evaluate(&memo, &family, &eval_set, &eval)?;
    println!(
        "memorizer: {} keys, train {:.4}, fresh {:.4} ({:.1?})",
        memo.len(),
        curve.last().map_or(0.0, |p| p.j_train.mean),
        fresh.mean,
        clock.elapsed()
    );
    Ok(())
}
