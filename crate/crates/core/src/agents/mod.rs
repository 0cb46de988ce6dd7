//! Learners, memorizing baselines and the gradient cosine similarity diagnostic.

mod gcs;
mod inverter;
mod memorizer;
mod model;
mod qlearning;
mod reinforce;
mod search;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{
    empirical_reward, replay, step_limit, EmpiricalSample, EpisodeRecord, Estimate, EvalOptions,
    EvalPolicy, FamilyError, MdpFamily, Observation,
};
use crate::mdp::{MdpError, SoftmaxPolicy};
use crate::rng;

pub use gcs::{cosine, gcs, mean_gradient};
pub use inverter::TableInverterAgent;
pub use memorizer::{MemoKey, MemorizerAgent};
pub use model::{
    plan_nonempty_path, plan_shortest_path, LearnedModel, ModelLearnerAgent, TransitionModel,
};
pub use qlearning::QLearningAgent;
pub use reinforce::{Baseline, ReinforceAgent};
pub use search::solve_by_random_search;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("agent cannot act in this family: {0}")]
    IncompatibleAgent(String),
    #[error("gradient norm below 1e-12 on the {0} sample")]
    DegenerateGradient(&'static str),
    #[error("sample is empty")]
    EmptySample,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// One environment step as seen by a learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    pub next: Observation,
    pub done: bool,
    pub t: usize,
}

/// A learner. Training drives the episode hooks; evaluation goes through the
/// frozen [`EvalPolicy`] view.
pub trait Agent: EvalPolicy + Send {
    fn name(&self) -> &'static str;

    /// Inspects the family before training; rejects families the agent cannot handle.
    fn prepare(&mut self, _family: &MdpFamily, _train: &EmpiricalSample) -> Result<(), AgentError> {
        Ok(())
    }

    fn begin_episode(&mut self, _first: &Observation) {}

    /// Training-time action (may explore).
    fn act(&mut self, obs: &Observation, t: usize, rng: &mut dyn RngCore) -> usize;

    fn feedback(&mut self, _step: &Transition) {}

    /// Called once per episode with the full record and a way to replay fixed
    /// action sequences on the same member.
    fn finish_episode(
        &mut self,
        _record: &EpisodeRecord,
        _replay: &mut dyn FnMut(&[usize]) -> EpisodeRecord,
    ) {
    }

    /// Learned tables for inspection and golden files.
    fn to_json(&self) -> serde_json::Value;

    /// The softmax-tabular policy behind the agent, when there is one.
    fn softmax_policy(&self) -> Option<&SoftmaxPolicy> {
        None
    }
}

/// Picks a uniformly random action.
pub(crate) fn random_action(num_actions: usize, rng: &mut dyn RngCore) -> usize {
    rng.gen_range(0..num_actions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Episodes after which the train-sample objective is recorded. The final
    /// episode count is always included.
    pub checkpoints: Vec<usize>,
    /// Step cap for unbounded-horizon episodes.
    pub max_steps: usize,
    pub eval: EvalOptions,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            checkpoints: Vec::new(),
            max_steps: 200,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub j_train: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    /// Episodes that earned positive reward.
    pub successes: usize,
}

impl LearningCurve {
    pub fn last(&self) -> Option<&CurvePoint> {
        self.points.last()
    }
}

/// Trains on episodes whose θ is drawn uniformly from `train` by a stream keyed on
/// `master_seed`. The result depends only on its inputs.
pub fn train(
    agent: &mut dyn Agent,
    family: &MdpFamily,
    train: &EmpiricalSample,
    episodes: usize,
    master_seed: u64,
    opts: &TrainOptions,
) -> Result<LearningCurve, AgentError> {
    if train.is_empty() {
        return Err(AgentError::EmptySample);
    }
    agent.prepare(family, train)?;
    let sims = train
        .thetas
        .iter()
        .map(|t| family.simulator(t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut pick = rng::stream(master_seed, "train-theta", 0);
    let mut agent_rng = rng::stream(master_seed, "train-agent", 0);
    let mut checkpoints: Vec<usize> = opts
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c <= episodes)
        .collect();
    checkpoints.push(episodes);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut next_checkpoint = 0;
    let mut curve = LearningCurve {
        points: Vec::new(),
        successes: 0,
    };
    let eval_opts = EvalOptions {
        max_steps: opts.max_steps,
        ..opts.eval
    };

    for ep in 0..=episodes {
        while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == ep {
            let j_train = empirical_reward(&*agent, train, family, &eval_opts)?;
            curve.points.push(CurvePoint {
                episode: ep,
                j_train,
            });
            next_checkpoint += 1;
        }
        if ep == episodes {
            break;
        }
        let sim = sims[pick.gen_range(0..sims.len())].as_ref();
        let mut env_rng = rng::stream(master_seed, "train-env", ep as u64);
        let limit = step_limit(sim.horizon(), opts.max_steps);
        let (mut state, first) = sim.reset(&mut env_rng);
        agent.begin_episode(&first);
        let mut record = EpisodeRecord {
            observations: vec![first],
            states: vec![state],
            ..Default::default()
        };
        let mut discount = 1.0;
        for t in 0..limit {
            let obs = record.observations[t];
            let action = agent.act(&obs, t, &mut agent_rng);
            let out = sim.step(state, action, &mut env_rng);
            agent.feedback(&Transition {
                obs,
                action,
                reward: out.reward,
                next: out.observation,
                done: out.done,
                t,
            });
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
        if record.undiscounted_return() > 0.0 {
            curve.successes += 1;
        }
        let mut replay_fn = |actions: &[usize]| {
            let mut r = rng::stream(master_seed, "train-env", ep as u64);
            replay(sim, actions, &mut r)
        };
        agent.finish_episode(&record, &mut replay_fn);
    }
    Ok(curve)
}

/// Mean reward of a frozen agent over a sample, exact where possible.
pub fn evaluate(
    policy: &dyn EvalPolicy,
    family: &MdpFamily,
    sample: &EmpiricalSample,
    opts: &EvalOptions,
) -> Result<Estimate, AgentError> {
    if sample.is_empty() {
        return Err(AgentError::EmptySample);
    }
    Ok(empirical_reward(policy, sample, family, opts)?)
}

/// Agent selection as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    QLearning {
        alpha: f64,
        epsilon: f64,
        /// Defaults to the family's discount.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Reinforce {
        learning_rate: f64,
        #[serde(default)]
        entropy: f64,
        #[serde(default)]
        baseline: Baseline,
    },
    Memorizer {
        budget: u64,
    },
    TableInverter {},
    ModelLearner {},
}

impl AgentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AgentSpec::QLearning { .. } => "q_learning",
            AgentSpec::Reinforce { .. } => "reinforce",
            AgentSpec::Memorizer { .. } => "memorizer",
            AgentSpec::TableInverter {} => "table_inverter",
            AgentSpec::ModelLearner {} => "model_learner",
        }
    }

    pub fn build(&self, family: &MdpFamily) -> Result<Box<dyn Agent>, AgentError> {
        let na = family.num_actions();
        Ok(match *self {
            AgentSpec::QLearning {
                alpha,
                epsilon,
                gamma,
            } => Box::new(QLearningAgent::new(na, alpha, epsilon, gamma)?),
            AgentSpec::Reinforce {
                learning_rate,
                entropy,
                baseline,
            } => Box::new(ReinforceAgent::new(na, learning_rate, entropy, baseline)?),
            AgentSpec::Memorizer { budget } => Box::new(MemorizerAgent::new(na, budget)),
            AgentSpec::TableInverter {} => Box::new(TableInverterAgent::new(na)),
            AgentSpec::ModelLearner {} => Box::new(ModelLearnerAgent::new(na)),
        })
    }
}
