//! A hidden left/right mirror flag makes the horizontal gridworld unsolvable by one
//! policy; showing θ to the agent fixes it. A goal straight above the start needs
//! no fix at all.
//!
//! cargo run --example gridworld_conflict

use genbench::optimality::{exact_check, DEFAULT_BUDGET, DEFAULT_TIE_TOL};
use genbench::wrappers::augment_with_theta;
use genbench::zoo::make_hidden_param_gridworld;
use genbench::EmpiricalSample;

fn main() -> anyhow::Result<()> {
    let horizontal = make_hidden_param_gridworld(3, 3, (1, 1), (0, 1))?;
    let both = EmpiricalSample::new(
        horizontal.params().all().unwrap_or_default().to_vec(),
        0,
        "all",
    );

    let cert = exact_check(&horizontal, &both, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)?;
    println!("horizontal goal: {}", cert.verdict.name());
    if let Some(w) = cert.witness() {
        println!("  disagreement at state {}", w.state);
    }

    let augmented = augment_with_theta(&horizontal, &both)?;
    let cert = exact_check(&augmented, &both, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)?;
    println!("with θ observed: {}", cert.verdict.name());

    let vertical = make_hidden_param_gridworld(3, 3, (1, 2), (1, 0))?;
    let cert = exact_check(&vertical, &both, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)?;
    println!("vertical goal: {}", cert.verdict.name());
    Ok(())
}
