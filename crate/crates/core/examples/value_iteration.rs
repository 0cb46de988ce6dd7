//! Solve a small MDP three ways: value iteration, exact policy evaluation of the
//! greedy policy, and brute-force enumeration of every deterministic policy.
//!
//! cargo run --example value_iteration

use genbench::mdp::{policy_evaluation, value_iteration, DeterministicPolicy, Horizon, TabularMdp};
use genbench::oracle;

fn main() -> anyhow::Result<()> {
    // Two states. Action 1 in state 0 pays 1 and moves to state 1, which pays 2 per step for action 0.
    let mdp = TabularMdp::deterministic(
        2,
        2,
        vec![0.0, 1.0, 2.0, 0.0],
        vec![0, 1, 1, 0],
        vec![1.0, 0.0],
        0.9,
        Horizon::Unbounded,
    )?;
    let tables = value_iteration(&mdp, 1e-12)?;
    println!("V* = {:?}, residual {:.1e}", tables.values, tables.residual);

    let greedy = DeterministicPolicy::new(tables.greedy_actions(), mdp.num_actions())?;
    let v = policy_evaluation(&mdp, &greedy)?;
    println!(
        "greedy {:?} earns {:.6}",
        greedy.actions(),
        v.episode_reward
    );

    let (best, policy) = oracle::enumerate_optimal(&mdp);
    println!("enumeration: {best:.6} with {:?}", policy.actions());
    Ok(())
}
