use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::RngCore;

use super::{random_action, Agent, AgentError, Transition};
use crate::family::{
    step_limit, Actor, EmpiricalSample, EvalPolicy, FamilyKind, MdpFamily, Observation,
};

/// Deterministic transition lookup, possibly partial.
pub trait TransitionModel {
    fn num_actions(&self) -> usize;
    fn next(&self, s: u64, a: usize) -> Option<u64>;
}

/// Edges observed so far, keyed by `(s, a)`.
#[derive(Debug, Clone, Default)]
pub struct LearnedModel {
    edges: HashMap<(u64, usize), u64>,
    tried: HashMap<u64, usize>,
    num_actions: usize,
}

impl LearnedModel {
    pub fn new(num_actions: usize) -> Self {
        Self {
            edges: HashMap::new(),
            tried: HashMap::new(),
            num_actions,
        }
    }

    pub fn insert(&mut self, s: u64, a: usize, next: u64) {
        if self.edges.insert((s, a), next).is_none() {
            *self.tried.entry(s).or_insert(0) += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Whether every action has been tried from `s`.
    pub fn is_complete_at(&self, s: u64) -> bool {
        self.tried.get(&s).copied().unwrap_or(0) >= self.num_actions
    }

    fn first_untried(&self, s: u64) -> Option<usize> {
        (0..self.num_actions).find(|&a| !self.edges.contains_key(&(s, a)))
    }
}

impl TransitionModel for LearnedModel {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn next(&self, s: u64, a: usize) -> Option<u64> {
        self.edges.get(&(s, a)).copied()
    }
}

// Breadth-first search over known edges. Returns the action path to the first
// state satisfying `stop` at depth ≥ `min_depth`, within `horizon` steps.
fn bfs(
    model: &dyn TransitionModel,
    s0: u64,
    horizon: usize,
    min_depth: usize,
    stop: impl Fn(u64) -> bool,
) -> Option<Vec<usize>> {
    if min_depth == 0 && stop(s0) {
        return Some(Vec::new());
    }
    // Arena of (state, parent index, action); index 0 is the root. The root is
    // only marked visited when the empty path is allowed, so it can be re-entered.
    let mut nodes: Vec<(u64, usize, usize)> = vec![(s0, usize::MAX, usize::MAX)];
    let mut depth = vec![0usize];
    let mut seen: HashSet<u64> = HashSet::new();
    if min_depth == 0 {
        seen.insert(s0);
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (s, d) = (nodes[i].0, depth[i]);
        if d >= horizon {
            continue;
        }
        for a in 0..model.num_actions() {
            let Some(t) = model.next(s, a) else { continue };
            if !seen.insert(t) {
                continue;
            }
            nodes.push((t, i, a));
            depth.push(d + 1);
            let j = nodes.len() - 1;
            if d + 1 >= min_depth && stop(t) {
                let mut path = Vec::with_capacity(d + 1);
                let mut k = j;
                while k != 0 {
                    path.push(nodes[k].2);
                    k = nodes[k].1;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(j);
        }
    }
    None
}

/// Shortest known-edge path from `s0` to `goal` of at most `horizon` steps, ties
/// broken toward lower actions. `goal == s0` gives the empty path.
pub fn plan_shortest_path(
    model: &dyn TransitionModel,
    s0: u64,
    goal: u64,
    horizon: usize,
) -> Option<Vec<usize>> {
    bfs(model, s0, horizon, 0, |s| s == goal)
}

/// As [`plan_shortest_path`] but at least one step long, for goals that pay on entry.
pub fn plan_nonempty_path(
    model: &dyn TransitionModel,
    s0: u64,
    goal: u64,
    horizon: usize,
) -> Option<Vec<usize>> {
    bfs(model, s0, horizon, 1, |s| s == goal)
}

/// Learns the shared dynamics of a pseudorandom-dynamics family from ordinary
/// episodes and plans to the goal over the learned edges.
///
/// Exploration: the lowest untried action at the current state, else the first
/// step toward the nearest state with untried actions, else a random action.
#[derive(Debug, Clone)]
pub struct ModelLearnerAgent {
    model: LearnedModel,
    num_actions: usize,
    horizon: usize,
    table_size: Option<usize>,
}

impl ModelLearnerAgent {
    pub fn new(num_actions: usize) -> Self {
        Self {
            model: LearnedModel::new(num_actions),
            num_actions,
            horizon: 0,
            table_size: None,
        }
    }

    pub fn model(&self) -> &LearnedModel {
        &self.model
    }

    /// Fraction of the `(s, a)` table observed, once the family is known.
    pub fn coverage(&self) -> Option<f64> {
        self.table_size.map(|n| self.model.len() as f64 / n as f64)
    }

    pub fn plan(&self, first: &Observation) -> Option<Vec<usize>> {
        plan_nonempty_path(&self.model, first.obs, first.goal?, self.horizon)
    }
}

struct PlanActor<'a> {
    agent: &'a ModelLearnerAgent,
    plan: Vec<usize>,
}

impl Actor for PlanActor<'_> {
    fn begin(&mut self, first: &Observation) {
        self.plan = self.agent.plan(first).unwrap_or_default();
    }

    fn act(&mut self, _obs: &Observation, t: usize, _rng: &mut dyn RngCore) -> usize {
        self.plan.get(t).copied().unwrap_or(0)
    }
}

impl EvalPolicy for ModelLearnerAgent {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn actor(&self) -> Box<dyn Actor + '_> {
        Box::new(PlanActor {
            agent: self,
            plan: Vec::new(),
        })
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl Agent for ModelLearnerAgent {
    fn name(&self) -> &'static str {
        "model_learner"
    }

    fn prepare(&mut self, family: &MdpFamily, train: &EmpiricalSample) -> Result<(), AgentError> {
        let FamilyKind::PseudorandomDynamics { m, .. } = family.kind() else {
            return Err(AgentError::IncompatibleAgent(format!(
                "model learner needs a pseudorandom-dynamics family, got {:?}",
                family.kind()
            )));
        };
        let sim = family.simulator(&train.thetas[0])?;
        self.horizon = step_limit(sim.horizon(), 200);
        self.table_size = Some((1usize << m) * self.num_actions);
        Ok(())
    }

    fn act(&mut self, obs: &Observation, t: usize, rng: &mut dyn RngCore) -> usize {
        let s = obs.obs;
        if let Some(a) = self.model.first_untried(s) {
            return a;
        }
        let left = self.horizon.saturating_sub(t);
        // Arrive with at least one step to spare.
        if left > 1 {
            let model = &self.model;
            if let Some(path) = bfs(model, s, left - 1, 1, |x| !model.is_complete_at(x)) {
                return path[0];
            }
        }
        random_action(self.num_actions, rng)
    }

    fn feedback(&mut self, step: &Transition) {
        self.model.insert(step.obs.obs, step.action, step.next.obs);
    }

    fn to_json(&self) -> serde_json::Value {
        let edges: BTreeMap<String, u64> = self
            .model
            .edges
            .iter()
            .map(|(&(s, a), &n)| (format!("{s}:{a}"), n))
            .collect();
        serde_json::json!({ "agent": "model_learner", "horizon": self.horizon, "edges": edges })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> LearnedModel {
        // 0 -a0-> 1 -a0-> 2 -a1-> 3, plus 0 -a1-> 2.
        let mut m = LearnedModel::new(2);
        m.insert(0, 0, 1);
        m.insert(1, 0, 2);
        m.insert(2, 1, 3);
        m.insert(0, 1, 2);
        m.insert(2, 0, 0);
        m
    }

    #[test]
    fn shortest_path_and_ties() {
        let m = chain();
        assert_eq!(plan_shortest_path(&m, 0, 0, 5), Some(vec![]));
        assert_eq!(plan_shortest_path(&m, 0, 3, 5), Some(vec![1, 1]));
        assert_eq!(plan_shortest_path(&m, 0, 3, 1), None);
        assert_eq!(plan_shortest_path(&m, 3, 0, 5), None);
    }

    #[test]
    fn nonempty_path_returns_to_start() {
        let m = chain();
        assert_eq!(plan_nonempty_path(&m, 0, 0, 5), Some(vec![1, 0]));
        assert_eq!(plan_nonempty_path(&m, 0, 0, 1), None);
        assert_eq!(plan_nonempty_path(&m, 0, 2, 5), Some(vec![1]));
    }
}
