//! Gradient cosine similarity between train and held-out members for a REINFORCE
//! policy, before and after training.
//!
//! cargo run --release --example gcs_diagnostic

use genbench::agents::{gcs, train, Agent, Baseline, ReinforceAgent, TrainOptions};
use genbench::family::sample_split;
use genbench::mdp::SoftmaxPolicy;
use genbench::zoo::make_goal_gridworld;

fn main() -> anyhow::Result<()> {
    let family = make_goal_gridworld(4, 4, (0, 0), 2, false)?;
    let (train_set, test_set) = sample_split(family.params(), 4, 8, 1)?;
    let ns = family.member(&train_set.thetas[0])?.mdp.num_states();
    let na = family.num_actions();
    let mut agent = ReinforceAgent::new(na, 0.1, 0.01, Baseline::MeanReturn)?
        .with_policy(SoftmaxPolicy::uniform(ns, na));

    let report = |agent: &ReinforceAgent, when: &str| match agent.softmax_policy() {
        Some(p) => match gcs(p, &family, &train_set, &test_set) {
            Ok(c) => println!("{when}: GCS {c:.4}"),
            Err(e) => println!("{when}: {e}"),
        },
        None => println!("{when}: no softmax policy"),
    };
    report(&agent, "uniform policy");
    train(
        &mut agent,
        &family,
        &train_set,
        500,
        3,
        &TrainOptions::default(),
    )?;
    report(&agent, "after 500 episodes");
    Ok(())
}
