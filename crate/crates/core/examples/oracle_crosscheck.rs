//! Cross-checks the solvers against brute force on random MDPs: value iteration
//! vs policy enumeration, exact gradients vs central differences, and exact
//! policy values vs Monte-Carlo rollouts.
//!
//! cargo run --release --example oracle_crosscheck

use genbench::mdp::{exact_policy_gradient, value_iteration, SoftmaxPolicy};
use genbench::oracle::{self, RandomMdpSpec};
use genbench::rng;
use rand::Rng;

fn main() -> anyhow::Result<()> {
    let mut r = rng::stream(0, "crosscheck", 0);
    let spec = RandomMdpSpec {
        stochastic_start: true,
        ..RandomMdpSpec::default()
    };
    let (mut dp, mut grad, mut mc) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let mdp = oracle::random_mdp(&mut r, &spec)?;
        let vi = value_iteration(&mdp, 1e-12)?.start_value(&mdp);
        dp = dp.max((vi - oracle::enumerate_optimal(&mdp).0).abs());

        let n = mdp.num_states() * mdp.num_actions();
        let logits: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let pol = SoftmaxPolicy::new(logits.clone(), mdp.num_states(), mdp.num_actions())?;
        let exact = exact_policy_gradient(&mdp, &pol)?;
        let fd = oracle::finite_difference_gradient(&mdp, &logits, 1e-5);
        grad = exact
            .iter()
            .zip(&fd)
            .fold(grad, |m, (a, b)| m.max((a - b).abs()));

        let probs: Vec<f64> = (0..mdp.num_states())
            .flat_map(|s| pol.probs(s).to_vec())
            .collect();
        let v = oracle::evaluate_table(&mdp, &probs);
        let est = oracle::rollout_value(&mdp, &probs, 4000, i, 400);
        mc = mc.max((v - est.mean).abs() / est.stderr.max(1e-12));
    }
    println!("max |VI − enumeration|      {dp:.2e}");
    println!("max |exact − finite diff|   {grad:.2e}");
    println!("max |exact − rollout| / se  {mc:.2}");
    Ok(())
}
