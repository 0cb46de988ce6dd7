use std::collections::HashMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{random_action, Agent, AgentError};
use crate::family::{
    Actor, EmpiricalSample, EpisodeRecord, EvalPolicy, FamilyKind, MdpFamily, Observation,
};

/// Action taken first in anchor mode.
pub const ANCHOR_ACTION: usize = 0;

/// What the memorizer recognises an episode by: the first observation (with
/// goal) and, in anchor mode, the observation after the anchor action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MemoKey {
    pub first: Observation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<u64>,
}

/// Stores one successful action sequence per episode key, found by random search
/// and re-verified by replay before it is kept. Unknown keys get action 0.
///
/// On pseudorandom-dynamics families it plays a fixed anchor action first and
/// keys on the observation that follows, since the start state alone does not
/// reveal which member it is in.
#[derive(Debug, Clone)]
pub struct MemorizerAgent {
    bank: HashMap<MemoKey, Vec<usize>>,
    attempts: HashMap<MemoKey, u64>,
    num_actions: usize,
    budget: u64,
    anchor: bool,
    // Episode state.
    first: Option<Observation>,
    current: Option<MemoKey>,
}

impl MemorizerAgent {
    pub fn new(num_actions: usize, budget: u64) -> Self {
        Self {
            bank: HashMap::new(),
            attempts: HashMap::new(),
            num_actions,
            budget,
            anchor: false,
            first: None,
            current: None,
        }
    }

    pub fn with_anchor(mut self, anchor: bool) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn bank(&self) -> &HashMap<MemoKey, Vec<usize>> {
        &self.bank
    }

    pub fn len(&self) -> usize {
        self.bank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bank.is_empty()
    }

    fn key_from(&self, record: &EpisodeRecord) -> Option<MemoKey> {
        let first = *record.observations.first()?;
        if self.anchor {
            let after = record.observations.get(1)?;
            (record.actions.first() == Some(&ANCHOR_ACTION)).then_some(MemoKey {
                first,
                anchor: Some(after.obs),
            })
        } else {
            Some(MemoKey {
                first,
                anchor: None,
            })
        }
    }
}

struct MemoActor<'a> {
    agent: &'a MemorizerAgent,
    first: Option<Observation>,
    plan: Option<&'a Vec<usize>>,
}

impl Actor for MemoActor<'_> {
    fn begin(&mut self, first: &Observation) {
        self.first = Some(*first);
        self.plan = if self.agent.anchor {
            None
        } else {
            self.agent.bank.get(&MemoKey {
                first: *first,
                anchor: None,
            })
        };
    }

    fn act(&mut self, obs: &Observation, t: usize, _rng: &mut dyn RngCore) -> usize {
        if self.agent.anchor {
            if t == 0 {
                return ANCHOR_ACTION;
            }
            if t == 1 {
                let first = self.first.unwrap_or(*obs);
                self.plan = self.agent.bank.get(&MemoKey {
                    first,
                    anchor: Some(obs.obs),
                });
            }
        }
        self.plan.and_then(|p| p.get(t).copied()).unwrap_or(0)
    }
}

impl EvalPolicy for MemorizerAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn actor(&self) -> Box<dyn Actor + '_> {
        Box::new(MemoActor {
            agent: self,
            first: None,
            plan: None,
        })
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl Agent for MemorizerAgent {
    fn name(&self) -> &'static str {
        "memorizer"
    }

    fn prepare(&mut self, family: &MdpFamily, _train: &EmpiricalSample) -> Result<(), AgentError> {
        self.anchor = matches!(family.kind(), FamilyKind::PseudorandomDynamics { .. });
        Ok(())
    }

    fn begin_episode(&mut self, first: &Observation) {
        self.first = Some(*first);
        self.current = if self.anchor {
            None
        } else {
            Some(MemoKey {
                first: *first,
                anchor: None,
            })
        };
    }

    fn act(&mut self, obs: &Observation, t: usize, rng: &mut dyn RngCore) -> usize {
        if self.anchor {
            if t == 0 {
                return ANCHOR_ACTION;
            }
            if t == 1 {
                self.current = self.first.map(|first| MemoKey {
                    first,
                    anchor: Some(obs.obs),
                });
            }
        }
        let Some(key) = self.current else { return 0 };
        if let Some(plan) = self.bank.get(&key) {
            return plan.get(t).copied().unwrap_or(0);
        }
        if self.attempts.get(&key).copied().unwrap_or(0) < self.budget {
            random_action(self.num_actions, rng)
        } else {
            0
        }
    }

    fn finish_episode(
        &mut self,
        record: &EpisodeRecord,
        replay: &mut dyn FnMut(&[usize]) -> EpisodeRecord,
    ) {
        let Some(key) = self.key_from(record) else {
            return;
        };
        if self.bank.contains_key(&key) {
            return;
        }
        let tries = self.attempts.entry(key).or_insert(0);
        if *tries >= self.budget {
            return;
        }
        *tries += 1;
        if record.undiscounted_return() > 0.0 && replay(&record.actions).undiscounted_return() > 0.0
        {
            self.bank.insert(key, record.actions.clone());
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let mut entries: Vec<(&MemoKey, &Vec<usize>)> = self.bank.iter().collect();
        entries.sort();
        let bank: Vec<serde_json::Value> = entries
            .into_iter()
            .map(|(k, v)| serde_json::json!({ "key": k, "actions": v }))
            .collect();
        serde_json::json!({ "agent": "memorizer", "anchor": self.anchor, "bank": bank })
    }
}
