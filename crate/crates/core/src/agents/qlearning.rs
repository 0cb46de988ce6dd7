use std::collections::{BTreeMap, HashMap};

use rand::{Rng, RngCore};

use super::{random_action, Agent, AgentError, Transition};
use crate::family::{
    Actor, EmpiricalSample, EvalPolicy, MdpFamily, Observation, ObservationPolicy, StationaryActor,
};

/// Tabular Q-learning keyed on the raw observation (including the goal channel).
///
/// Evaluation is greedy with lowest-index ties; unseen observations have an
/// all-zero row and therefore take action 0.
#[derive(Debug, Clone)]
pub struct QLearningAgent {
    q: HashMap<Observation, Vec<f64>>,
    num_actions: usize,
    alpha: f64,
    epsilon: f64,
    gamma: Option<f64>,
}

impl QLearningAgent {
    pub fn new(
        num_actions: usize,
        alpha: f64,
        epsilon: f64,
        gamma: Option<f64>,
    ) -> Result<Self, AgentError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(AgentError::InvalidHyperparameter(format!(
                "alpha {alpha} outside (0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(AgentError::InvalidHyperparameter(format!(
                "epsilon {epsilon} outside [0, 1]"
            )));
        }
        if let Some(g) = gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(AgentError::InvalidHyperparameter(format!(
                    "gamma {g} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            q: HashMap::new(),
            num_actions,
            alpha,
            epsilon,
            gamma,
        })
    }

    pub fn q_row(&self, obs: &Observation) -> Option<&[f64]> {
        self.q.get(obs).map(|v| v.as_slice())
    }

    pub fn num_keys(&self) -> usize {
        self.q.len()
    }

    fn greedy(row: &[f64]) -> usize {
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }
}

impl ObservationPolicy for QLearningAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, obs: &Observation, out: &mut [f64]) -> Option<()> {
        out.fill(0.0);
        out[self.q.get(obs).map_or(0, |row| Self::greedy(row))] = 1.0;
        Some(())
    }
}

impl EvalPolicy for QLearningAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn stationary(&self) -> Option<&dyn ObservationPolicy> {
        Some(self)
    }

    fn actor(&self) -> Box<dyn Actor + '_> {
        Box::new(StationaryActor::new(self))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl Agent for QLearningAgent {
    fn name(&self) -> &'static str {
        "q_learning"
    }

    fn prepare(&mut self, family: &MdpFamily, train: &EmpiricalSample) -> Result<(), AgentError> {
        if self.gamma.is_none() {
            let sim = family.simulator(&train.thetas[0])?;
            self.gamma = Some(sim.discount());
        }
        Ok(())
    }

    fn act(&mut self, obs: &Observation, _t: usize, rng: &mut dyn RngCore) -> usize {
        if rng.gen::<f64>() < self.epsilon {
            return random_action(self.num_actions, rng);
        }
        let Some(row) = self.q.get(obs) else {
            return random_action(self.num_actions, rng);
        };
        // Random tie-breaking while learning.
        let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..row.len()).filter(|&a| row[a] == best).collect();
        ties[rng.gen_range(0..ties.len())]
    }

    fn feedback(&mut self, step: &Transition) {
        let gamma = self.gamma.unwrap_or(1.0);
        let target = if step.done {
            step.reward
        } else {
            let next = self
                .q
                .get(&step.next)
                .map_or(0.0, |r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            step.reward + gamma * next
        };
        let row = self
            .q
            .entry(step.obs)
            .or_insert_with(|| vec![0.0; self.num_actions]);
        row[step.action] += self.alpha * (target - row[step.action]);
    }

    fn to_json(&self) -> serde_json::Value {
        let table: BTreeMap<String, &Vec<f64>> = self
            .q
            .iter()
            .map(|(o, row)| {
                let key = match o.goal {
                    Some(g) => format!("{}|{}", o.obs, g),
                    None => o.obs.to_string(),
                };
                (key, row)
            })
            .collect();
        serde_json::json!({ "agent": "q_learning", "q": table })
    }
}
