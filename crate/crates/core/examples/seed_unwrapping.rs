//! A stochastic-start MDP becomes a family of deterministic-start members, one per
//! seed. The original optimal policy stays optimal for every member, so the
//! checker certifies a shared optimum.
//!
//! cargo run --example seed_unwrapping

use genbench::family::{unwrap_seeds, UnwrapDepth};
use genbench::mdp::{policy_evaluation, value_iteration, DeterministicPolicy};
use genbench::optimality::{exact_check, DEFAULT_BUDGET, DEFAULT_TIE_TOL};
use genbench::oracle::{random_mdp, RandomMdpSpec};
use genbench::{rng, EmpiricalSample, Theta};

fn main() -> anyhow::Result<()> {
    let spec = RandomMdpSpec {
        stochastic_start: true,
        deterministic: true,
        ..RandomMdpSpec::default()
    };
    let mdp = random_mdp(&mut rng::stream(4, "example", 0), &spec)?;
    println!(
        "{} states, start distribution {:?}",
        mdp.num_states(),
        mdp.start_dist()
    );

    let tables = value_iteration(&mdp, 1e-12)?;
    let pi_star = DeterministicPolicy::new(tables.greedy_actions(), mdp.num_actions())?;

    let seeds: Vec<u64> = (0..8).collect();
    let family = unwrap_seeds(&mdp, &seeds, UnwrapDepth::InitialOnly)?;
    let sample = EmpiricalSample::new(seeds.iter().map(|&s| Theta::seed(s)).collect(), 0, "seeds");
    for theta in &sample.thetas {
        let member = family.member(theta)?;
        let v_star = value_iteration(&member.mdp, 1e-12)?.start_value(&member.mdp);
        let v = policy_evaluation(&member.mdp, &pi_star)?.episode_reward;
        println!("{theta}: V* {v_star:.6}, original π* {v:.6}");
    }
    let cert = exact_check(&family, &sample, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)?;
    println!("checker: {}", cert.verdict.name());
    Ok(())
}
