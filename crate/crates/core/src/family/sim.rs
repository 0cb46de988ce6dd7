//! Episodic interface shared by every family member.

use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::mdp::{Horizon, TabularMdp};

/// What an agent sees at one step: the observation word and, for goal-conditioned
/// families, the goal channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    pub obs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<u64>,
}

impl Observation {
    /// Fully observed tabular state.
    pub fn state(s: usize) -> Self {
        Self {
            obs: s as u64,
            goal: None,
        }
    }

    pub fn with_goal(obs: u64, goal: u64) -> Self {
        Self {
            obs,
            goal: Some(goal),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: u64,
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// A member's step function. Episode state is owned by the caller, so one
/// simulator can serve many concurrent episodes.
pub trait Simulator: Send + Sync {
    fn num_actions(&self) -> usize;
    fn discount(&self) -> f64;
    fn horizon(&self) -> Horizon;
    fn is_deterministic(&self) -> bool;
    fn reset(&self, rng: &mut dyn RngCore) -> (u64, Observation);
    fn step(&self, state: u64, action: usize, rng: &mut dyn RngCore) -> StepOutcome;
}

/// Draws an index from a probability vector by inverse-CDF lookup at `u ∈ [0, 1)`.
pub fn inverse_cdf(probs: impl IntoIterator<Item = (usize, f64)>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Simulator backed by a tabular MDP. Episodes end on entering a zero-reward absorbing state.
#[derive(Debug, Clone)]
pub struct TabularSimulator {
    mdp: Arc<TabularMdp>,
    observations: Arc<Vec<Observation>>,
    absorbing: Vec<bool>,
    deterministic: bool,
}

impl TabularSimulator {
    pub fn new(mdp: Arc<TabularMdp>, observations: Arc<Vec<Observation>>) -> Self {
        let absorbing = mdp.absorbing_states();
        let deterministic = mdp.is_deterministic() && mdp.start_support().len() == 1;
        Self {
            mdp,
            observations,
            absorbing,
            deterministic,
        }
    }
}

impl Simulator for TabularSimulator {
    fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    fn discount(&self) -> f64 {
        self.mdp.discount()
    }

    fn horizon(&self) -> Horizon {
        self.mdp.horizon()
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn reset(&self, rng: &mut dyn RngCore) -> (u64, Observation) {
        let u: f64 = rng.gen();
        let s = inverse_cdf(self.mdp.start_dist().iter().cloned().enumerate(), u);
        (s as u64, self.observations[s])
    }

    fn step(&self, state: u64, action: usize, rng: &mut dyn RngCore) -> StepOutcome {
        let s = state as usize;
        let row = self.mdp.row(s, action);
        let next = if row.len() == 1 {
            row[0].0
        } else {
            inverse_cdf(row.iter().cloned(), rng.gen())
        };
        StepOutcome {
            state: next as u64,
            observation: self.observations[next],
            reward: self.mdp.reward(s, action),
            done: self.absorbing[next],
        }
    }
}

/// Something that picks actions during one episode at a time.
pub trait Actor {
    /// Called with the first observation of every episode.
    fn begin(&mut self, _first: &Observation) {}
    fn act(&mut self, obs: &Observation, t: usize, rng: &mut dyn RngCore) -> usize;
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeRecord {
    /// `observations[t]` precedes `actions[t]`; one extra trailing observation.
    pub observations: Vec<Observation>,
    pub states: Vec<u64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub discounted_return: f64,
    pub terminated: bool,
}

impl EpisodeRecord {
    pub fn undiscounted_return(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Step limit for one episode: the finite horizon, else `max_steps`.
pub fn step_limit(horizon: Horizon, max_steps: usize) -> usize {
    match horizon {
        Horizon::Finite(h) => h,
        Horizon::Unbounded => max_steps,
    }
}

/// Runs one episode. `env_rng` drives the dynamics, `actor_rng` the actor.
pub fn run_episode(
    sim: &dyn Simulator,
    actor: &mut dyn Actor,
    env_rng: &mut dyn RngCore,
    actor_rng: &mut dyn RngCore,
    max_steps: usize,
) -> EpisodeRecord {
    let limit = step_limit(sim.horizon(), max_steps);
    let (mut state, first) = sim.reset(env_rng);
    actor.begin(&first);
    let mut record = EpisodeRecord {
        observations: vec![first],
        states: vec![state],
        ..Default::default()
    };
    let mut discount = 1.0;
    for t in 0..limit {
        let obs = record.observations[t];
        let action = actor.act(&obs, t, actor_rng);
        let out = sim.step(state, action, env_rng);
        record.actions.push(action);
        record.rewards.push(out.reward);
        record.discounted_return += discount * out.reward;
        record.observations.push(out.observation);
        record.states.push(out.state);
        discount *= sim.discount();
        state = out.state;
        if out.done {
            record.terminated = true;
            break;
        }
    }
    record
}

/// Replays a fixed action sequence from a fresh reset. Stops at the end of the
/// sequence, the step limit, or termination, whichever comes first.
pub fn replay(sim: &dyn Simulator, actions: &[usize], env_rng: &mut dyn RngCore) -> EpisodeRecord {
    let limit = step_limit(sim.horizon(), actions.len()).min(actions.len());
    let (mut state, first) = sim.reset(env_rng);
    let mut record = EpisodeRecord {
        observations: vec![first],
        states: vec![state],
        ..Default::default()
    };
    let mut discount = 1.0;
    for &action in &actions[..limit] {
        let out = sim.step(state, action, env_rng);
        record.actions.push(action);
        record.rewards.push(out.reward);
        record.discounted_return += discount * out.reward;
        record.observations.push(out.observation);
        record.states.push(out.state);
        discount *= sim.discount();
        state = out.state;
        if out.done {
            record.terminated = true;
            break;
        }
    }
    record
}
