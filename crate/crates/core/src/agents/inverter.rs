use std::collections::{BTreeMap, HashMap};

use rand::RngCore;

use super::{random_action, Agent, AgentError, Transition};
use crate::family::{
    Actor, EmpiricalSample, EpisodeRecord, EvalPolicy, FamilyKind, MdpFamily, Observation,
};

/// Learns the goal-to-observation map `c ↦ w(c)` on hash-observation families.
///
/// When reward fires the agent has just entered the goal, so the observation it
/// sees is `w(c)`. With that entry known, `a = o₀ ⊕ w(c)` reaches the goal in one
/// step. Unknown goals get action 0.
#[derive(Debug, Clone)]
pub struct TableInverterAgent {
    table: HashMap<u64, u64>,
    num_actions: usize,
    // Candidate pair from the current episode, confirmed in `finish_episode`.
    pending: Option<(u64, u64)>,
}

impl TableInverterAgent {
    pub fn new(num_actions: usize) -> Self {
        Self {
            table: HashMap::new(),
            num_actions,
            pending: None,
        }
    }

    /// Starts from a known table (goal word → observation word).
    pub fn with_table(num_actions: usize, table: HashMap<u64, u64>) -> Self {
        Self {
            table,
            num_actions,
            pending: None,
        }
    }

    pub fn table(&self) -> &HashMap<u64, u64> {
        &self.table
    }

    /// Fraction of the `2^m` goals covered.
    pub fn coverage(&self) -> f64 {
        self.table.len() as f64 / self.num_actions as f64
    }

    fn one_step(&self, first: &Observation) -> Option<usize> {
        let wc = self.table.get(&first.goal?)?;
        Some((first.obs ^ wc) as usize)
    }
}

struct InverterActor<'a> {
    agent: &'a TableInverterAgent,
    first_action: usize,
}

impl Actor for InverterActor<'_> {
    fn begin(&mut self, first: &Observation) {
        self.first_action = self.agent.one_step(first).unwrap_or(0);
    }

    fn act(&mut self, _obs: &Observation, t: usize, _rng: &mut dyn RngCore) -> usize {
        if t == 0 {
            self.first_action
        } else {
            0
        }
    }
}

impl EvalPolicy for TableInverterAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn actor(&self) -> Box<dyn Actor + '_> {
        Box::new(InverterActor {
            agent: self,
            first_action: 0,
        })
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl Agent for TableInverterAgent {
    fn name(&self) -> &'static str {
        "table_inverter"
    }

    fn prepare(&mut self, family: &MdpFamily, _train: &EmpiricalSample) -> Result<(), AgentError> {
        match family.kind() {
            FamilyKind::HashObservation { .. } => Ok(()),
            other => Err(AgentError::IncompatibleAgent(format!(
                "table inverter needs a hash family, got {other:?}"
            ))),
        }
    }

    fn begin_episode(&mut self, _first: &Observation) {
        self.pending = None;
    }

    fn act(&mut self, obs: &Observation, t: usize, rng: &mut dyn RngCore) -> usize {
        if t == 0 {
            if let Some(a) = self.one_step(obs) {
                return a;
            }
        }
        random_action(self.num_actions, rng)
    }

    fn feedback(&mut self, step: &Transition) {
        if step.reward > 0.0 {
            if let Some(goal) = step.next.goal {
                self.pending = Some((goal, step.next.obs));
            }
        }
    }

    fn finish_episode(
        &mut self,
        record: &EpisodeRecord,
        replay: &mut dyn FnMut(&[usize]) -> EpisodeRecord,
    ) {
        let Some((goal, wc)) = self.pending.take() else {
            return;
        };
        if self.table.contains_key(&goal) {
            return;
        }
        let o0 = record.observations[0].obs;
        if replay(&[(o0 ^ wc) as usize]).undiscounted_return() > 0.0 {
            self.table.insert(goal, wc);
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let table: BTreeMap<u64, u64> = self.table.iter().map(|(k, v)| (*k, *v)).collect();
        serde_json::json!({ "agent": "table_inverter", "table": table })
    }
}
