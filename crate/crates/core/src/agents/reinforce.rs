use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Agent, AgentError};
use crate::family::{
    inverse_cdf, Actor, EmpiricalSample, EpisodeRecord, EvalPolicy, MdpFamily, Observation,
    ObservationPolicy, StationaryActor,
};
use crate::mdp::{Policy, SoftmaxPolicy};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    /// Running mean of past episode returns.
    MeanReturn,
}

/// Monte-Carlo policy gradient on a softmax-tabular policy over observation indices:
/// `logits += lr · ((G − b) Σ_t ∇ log π(a_t|s_t) + β Σ_t ∇ H(π(·|s_t)))`.
#[derive(Debug, Clone)]
pub struct ReinforceAgent {
    policy: SoftmaxPolicy,
    num_actions: usize,
    learning_rate: f64,
    entropy: f64,
    baseline: Baseline,
    mean_return: f64,
    episodes_seen: u64,
}

impl ReinforceAgent {
    pub fn new(
        num_actions: usize,
        learning_rate: f64,
        entropy: f64,
        baseline: Baseline,
    ) -> Result<Self, AgentError> {
        if !learning_rate.is_finite() || learning_rate < 0.0 {
            return Err(AgentError::InvalidHyperparameter(format!(
                "learning rate {learning_rate}"
            )));
        }
        if !entropy.is_finite() || entropy < 0.0 {
            return Err(AgentError::InvalidHyperparameter(format!(
                "entropy coefficient {entropy}"
            )));
        }
        Ok(Self {
            policy: SoftmaxPolicy::uniform(1, num_actions),
            num_actions,
            learning_rate,
            entropy,
            baseline,
            mean_return: 0.0,
            episodes_seen: 0,
        })
    }

    /// Starts from explicit logits instead of the uniform policy.
    pub fn with_policy(mut self, policy: SoftmaxPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> &SoftmaxPolicy {
        &self.policy
    }

    fn state_of(&self, obs: &Observation) -> usize {
        obs.obs as usize
    }
}

impl ObservationPolicy for ReinforceAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, obs: &Observation, out: &mut [f64]) -> Option<()> {
        ObservationPolicy::action_probs(&self.policy, obs, out)
    }
}

impl EvalPolicy for ReinforceAgent {
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
        false
    }
}

impl Agent for ReinforceAgent {
    fn name(&self) -> &'static str {
        "reinforce"
    }

    /// Sizes the logit table from the family's state count. Needs fully observed members.
    fn prepare(&mut self, family: &MdpFamily, train: &EmpiricalSample) -> Result<(), AgentError> {
        let member = family.member(&train.thetas[0])?;
        let n = member.mdp.num_states();
        if member
            .observations
            .iter()
            .any(|o| o.goal.is_some() || o.obs as usize >= n)
        {
            return Err(AgentError::IncompatibleAgent(
                "softmax-tabular policies need observations that index states".into(),
            ));
        }
        if self.policy.num_states() != n {
            self.policy = SoftmaxPolicy::uniform(n, self.num_actions);
        }
        Ok(())
    }

    fn act(&mut self, obs: &Observation, _t: usize, rng: &mut dyn RngCore) -> usize {
        let probs = self.policy.probs(self.state_of(obs));
        inverse_cdf(probs.into_iter().enumerate(), rng.gen())
    }

    fn finish_episode(
        &mut self,
        record: &EpisodeRecord,
        _replay: &mut dyn FnMut(&[usize]) -> EpisodeRecord,
    ) {
        let g = record.discounted_return;
        let b = match self.baseline {
            Baseline::None => 0.0,
            Baseline::MeanReturn => self.mean_return,
        };
        self.episodes_seen += 1;
        self.mean_return += (g - self.mean_return) / self.episodes_seen as f64;
        if self.learning_rate == 0.0 {
            return;
        }
        let na = self.num_actions;
        let mut step = vec![0.0; self.policy.logits().len()];
        for (t, &a) in record.actions.iter().enumerate() {
            let s = self.state_of(&record.observations[t]);
            let p = self.policy.probs(s);
            let h: f64 = -p
                .iter()
                .filter(|&&x| x > 0.0)
                .map(|x| x * x.ln())
                .sum::<f64>();
            for (bi, &pb) in p.iter().enumerate() {
                let indicator = if bi == a { 1.0 } else { 0.0 };
                let mut d = (g - b) * (indicator - pb);
                if self.entropy > 0.0 && pb > 0.0 {
                    d += self.entropy * (-pb * (pb.ln() + h));
                }
                step[s * na + bi] += d;
            }
        }
        for (l, d) in self.policy.logits_mut().iter_mut().zip(step) {
            *l += self.learning_rate * d;
        }
    }

    fn softmax_policy(&self) -> Option<&SoftmaxPolicy> {
        Some(&self.policy)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "agent": "reinforce",
            "num_states": self.policy.num_states(),
            "num_actions": self.num_actions,
            "logits": self.policy.logits(),
        })
    }
}
