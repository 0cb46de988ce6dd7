use serde::{Deserialize, Serialize};

use super::MdpError;

/// A stationary policy over the states of a tabular MDP.
pub trait Policy {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Writes π(·|s) into `out` (length `num_actions`).
    fn action_probs(&self, s: usize, out: &mut [f64]);

    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<(), MdpError> {
        if self.num_states() != num_states || self.num_actions() != num_actions {
            return Err(MdpError::DimensionMismatch(format!(
                "policy is {}x{}, MDP is {}x{}",
                self.num_states(),
                self.num_actions(),
                num_states,
                num_actions
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicPolicy {
    actions: Vec<usize>,
    num_actions: usize,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Result<Self, MdpError> {
        if let Some(s) = actions.iter().position(|&a| a >= num_actions) {
            return Err(MdpError::DimensionMismatch(format!(
                "state {s} maps to action {} but only {num_actions} actions exist",
                actions[s]
            )));
        }
        Ok(Self {
            actions,
            num_actions,
        })
    }

    /// Every state takes action 0.
    pub fn constant(
        num_states: usize,
        num_actions: usize,
        action: usize,
    ) -> Result<Self, MdpError> {
        Self::new(vec![action; num_states], num_actions)
    }

    #[inline]
    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// Enumerates all `A^S` deterministic policies in lexicographic order (state 0 slowest).
    pub fn enumerate(
        num_states: usize,
        num_actions: usize,
    ) -> impl Iterator<Item = DeterministicPolicy> {
        let total = (num_actions as u128)
            .checked_pow(num_states as u32)
            .unwrap_or(u128::MAX);
        (0..total).map(move |mut code| {
            let mut actions = vec![0; num_states];
            for slot in actions.iter_mut().rev() {
                *slot = (code % num_actions as u128) as usize;
                code /= num_actions as u128;
            }
            DeterministicPolicy {
                actions,
                num_actions,
            }
        })
    }
}

impl Policy for DeterministicPolicy {
    fn num_states(&self) -> usize {
        self.actions.len()
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, s: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.actions[s]] = 1.0;
    }
}

/// Softmax-tabular policy: π(a|s) ∝ exp(logit(s, a)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    logits: Vec<f64>,
    num_states: usize,
    num_actions: usize,
}

impl SoftmaxPolicy {
    pub fn new(logits: Vec<f64>, num_states: usize, num_actions: usize) -> Result<Self, MdpError> {
        if logits.len() != num_states * num_actions || num_actions == 0 {
            return Err(MdpError::DimensionMismatch(format!(
                "{} logits for a {num_states}x{num_actions} table",
                logits.len()
            )));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(MdpError::InvalidMdp("non-finite logit".into()));
        }
        Ok(Self {
            logits,
            num_states,
            num_actions,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            logits: vec![0.0; num_states * num_actions],
            num_states,
            num_actions,
        }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn logit(&self, s: usize, a: usize) -> f64 {
        self.logits[s * self.num_actions + a]
    }

    /// π(·|s) as an owned vector.
    pub fn probs(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_actions];
        self.action_probs(s, &mut out);
        out
    }
}

impl Policy for SoftmaxPolicy {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, s: usize, out: &mut [f64]) {
        let row = &self.logits[s * self.num_actions..(s + 1) * self.num_actions];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, l) in out.iter_mut().zip(row) {
            *o = (l - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }
}

/// Explicit probability table, e.g. the policy an agent induces on one family member.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    probs: Vec<f64>,
    num_states: usize,
    num_actions: usize,
}

impl StochasticPolicy {
    pub fn new(probs: Vec<f64>, num_states: usize, num_actions: usize) -> Result<Self, MdpError> {
        if probs.len() != num_states * num_actions {
            return Err(MdpError::DimensionMismatch(format!(
                "{} probabilities for a {num_states}x{num_actions} table",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(num_actions).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > super::PROB_TOL {
                return Err(MdpError::InvalidMdp(format!(
                    "policy row {s} is not a distribution"
                )));
            }
        }
        Ok(Self {
            probs,
            num_states,
            num_actions,
        })
    }
}

impl Policy for StochasticPolicy {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, s: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.probs[s * self.num_actions..(s + 1) * self.num_actions]);
    }
}
