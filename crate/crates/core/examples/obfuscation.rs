//! Renaming states with a keyed permutation leaves every value unchanged; only the
//! labels move.
//!
//! cargo run --example obfuscation

use genbench::family::sample_split;
use genbench::mdp::value_iteration;
use genbench::wrappers::obfuscate_observations;
use genbench::zoo::{make_goal_gridworld, KeyedPermutation};

fn main() -> anyhow::Result<()> {
    let family = make_goal_gridworld(3, 3, (0, 0), 1, true)?;
    let (one, _) = sample_split(family.params(), 1, 0, 0)?;
    let mdp = family.member(&one.thetas[0])?.mdp;
    let w = KeyedPermutation::over(99, mdp.num_states());
    let renamed = obfuscate_observations(&mdp, w.forward())?;

    let a = value_iteration(&mdp, 1e-12)?;
    let b = value_iteration(&renamed, 1e-12)?;
    for s in 0..mdp.num_states() {
        println!(
            "state {s} -> {}: V* {:.6} / {:.6}",
            w.apply(s),
            a.values[s],
            b.values[w.apply(s)]
        );
    }
    Ok(())
}
