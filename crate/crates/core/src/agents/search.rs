use rand::RngCore;

use super::random_action;
use crate::family::{replay, step_limit, Simulator};
use crate::rng;

/// Uniform random action sequences until one earns reward; the winning prefix is
/// replayed on a fresh episode before it is returned. `None` after `budget` episodes.
pub fn solve_by_random_search(sim: &dyn Simulator, budget: u64, seed: u64) -> Option<Vec<usize>> {
    let limit = step_limit(sim.horizon(), 200);
    let na = sim.num_actions();
    for episode in 0..budget {
        let mut env = rng::stream(seed, "search-env", episode);
        let mut pick = rng::stream(seed, "search-actions", episode);
        let (mut state, _) = sim.reset(&mut env);
        let mut actions = Vec::new();
        for _ in 0..limit {
            let a = random_action(na, &mut pick as &mut dyn RngCore);
            actions.push(a);
            let out = sim.step(state, a, &mut env);
            state = out.state;
            if out.reward > 0.0 {
                let check = replay(sim, &actions, &mut rng::stream(seed, "search-env", episode));
                if check.undiscounted_return() > 0.0 {
                    return Some(actions);
                }
                break;
            }
            if out.done {
                break;
            }
        }
    }
    None
}
