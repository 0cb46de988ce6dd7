//! Exact finite-MDP machinery.

mod action_set;
mod gradient;
mod policy;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use action_set::{optimal_action_sets, ActionSet};
pub use gradient::{exact_policy_gradient, exact_policy_gradient_capped, DEFAULT_GRADIENT_CAP};
pub use policy::{DeterministicPolicy, Policy, SoftmaxPolicy, StochasticPolicy};
pub use solve::{policy_evaluation, value_iteration, PolicyValue, ValueTables, DEFAULT_VI_TOL};

/// Tolerance on probability vectors (transition rows and the start distribution).
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem too large for an exact solve: {size} > cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Episode length. `Unbounded` needs γ < 1 unless the chain is acyclic apart from
/// zero-reward absorbing states (the shape produced by time folding).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Unbounded,
    Finite(usize),
}

/// A finite MDP `(S, A, r, T, S0, γ, horizon)` with action-dependent rewards.
///
/// Transition rows are stored sparsely; each row is sorted by successor and has
/// no zero entries. Instances are immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    reward: Vec<f64>,
    row_start: Vec<usize>,
    entries: Vec<(usize, f64)>,
    start: Vec<f64>,
    discount: f64,
    horizon: Horizon,
}

impl TabularMdp {
    /// Builds and validates an MDP. `reward` and `rows` are indexed by `s * num_actions + a`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        reward: Vec<f64>,
        rows: Vec<Vec<(usize, f64)>>,
        start: Vec<f64>,
        discount: f64,
        horizon: Horizon,
    ) -> Result<Self, MdpError> {
        let invalid = |msg: String| Err(MdpError::InvalidMdp(msg));
        if num_states == 0 || num_actions == 0 {
            return invalid("state and action counts must be positive".into());
        }
        let pairs = num_states * num_actions;
        if reward.len() != pairs || rows.len() != pairs {
            return invalid(format!(
                "expected {pairs} reward entries and transition rows, got {} and {}",
                reward.len(),
                rows.len()
            ));
        }
        if let Some(i) = reward.iter().position(|r| !r.is_finite()) {
            return invalid(format!("non-finite reward at pair {i}"));
        }
        if !(0.0..=1.0).contains(&discount) {
            return invalid(format!("discount {discount} outside [0, 1]"));
        }
        if horizon == Horizon::Finite(0) {
            return invalid("finite horizon must be at least one step".into());
        }

        let mut row_start = Vec::with_capacity(pairs + 1);
        let mut entries = Vec::with_capacity(pairs);
        for (i, mut row) in rows.into_iter().enumerate() {
            row_start.push(entries.len());
            row.sort_by_key(|&(s, _)| s);
            let mut sum = 0.0;
            let begin = entries.len();
            for (next, p) in row {
                if next >= num_states {
                    return invalid(format!("pair {i}: successor {next} out of range"));
                }
                if !(p.is_finite() && p >= 0.0) {
                    return invalid(format!("pair {i}: bad probability {p}"));
                }
                sum += p;
                if p == 0.0 {
                    continue;
                }
                match entries[begin..].last_mut() {
                    Some((last, q)) if *last == next => *q += p,
                    _ => entries.push((next, p)),
                }
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return invalid(format!("pair {i}: transition row sums to {sum}"));
            }
        }
        row_start.push(entries.len());

        if start.len() != num_states {
            return invalid(format!(
                "start distribution has {} entries, expected {num_states}",
                start.len()
            ));
        }
        if start.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("start distribution has a negative or non-finite entry".into());
        }
        let start_sum: f64 = start.iter().sum();
        if (start_sum - 1.0).abs() > PROB_TOL {
            return invalid(format!("start distribution sums to {start_sum}"));
        }

        let mdp = Self {
            num_states,
            num_actions,
            reward,
            row_start,
            entries,
            start,
            discount,
            horizon,
        };
        if discount >= 1.0
            && horizon == Horizon::Unbounded
            && mdp.longest_transient_path().is_none()
        {
            return invalid(
                "γ = 1 with an unbounded horizon requires an acyclic chain into zero-reward absorbing states"
                    .into(),
            );
        }
        Ok(mdp)
    }

    /// Convenience constructor for deterministic dynamics: `next[s * A + a]` is the successor.
    pub fn deterministic(
        num_states: usize,
        num_actions: usize,
        reward: Vec<f64>,
        next: Vec<usize>,
        start: Vec<f64>,
        discount: f64,
        horizon: Horizon,
    ) -> Result<Self, MdpError> {
        let rows = next.into_iter().map(|s| vec![(s, 1.0)]).collect();
        Self::new(
            num_states,
            num_actions,
            reward,
            rows,
            start,
            discount,
            horizon,
        )
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn start_dist(&self) -> &[f64] {
        &self.start
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// Rewards for all pairs, indexed `s * A + a`.
    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    /// Sparse successor distribution of `(s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        let i = s * self.num_actions + a;
        &self.entries[self.row_start[i]..self.row_start[i + 1]]
    }

    /// All transition rows as owned vectors, in `s * A + a` order.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.num_states * self.num_actions)
            .map(|i| self.entries[self.row_start[i]..self.row_start[i + 1]].to_vec())
            .collect()
    }

    /// States with positive start probability, ascending.
    pub fn start_support(&self) -> Vec<usize> {
        (0..self.num_states)
            .filter(|&s| self.start[s] > 0.0)
            .collect()
    }

    /// Same MDP with a different start distribution.
    pub fn with_start(&self, start: Vec<f64>) -> Result<Self, MdpError> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.reward.clone(),
            self.rows(),
            start,
            self.discount,
            self.horizon,
        )
    }

    /// Same MDP with every reward shifted by `c`.
    pub fn with_reward_offset(&self, c: f64) -> Result<Self, MdpError> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.reward.iter().map(|r| r + c).collect(),
            self.rows(),
            self.start.clone(),
            self.discount,
            self.horizon,
        )
    }

    /// True when every row puts all mass on one successor.
    pub fn is_deterministic(&self) -> bool {
        (0..self.num_states * self.num_actions)
            .all(|i| self.row_start[i + 1] - self.row_start[i] == 1)
    }

    /// Successor of a deterministic pair, if the pair is deterministic.
    pub fn successor(&self, s: usize, a: usize) -> Option<usize> {
        match self.row(s, a) {
            [(next, _)] => Some(*next),
            _ => None,
        }
    }

    /// A state is absorbing when every action loops back with probability one and pays nothing.
    pub fn is_absorbing(&self, s: usize) -> bool {
        (0..self.num_actions).all(|a| self.reward(s, a) == 0.0 && self.successor(s, a) == Some(s))
    }

    pub fn absorbing_states(&self) -> Vec<bool> {
        (0..self.num_states).map(|s| self.is_absorbing(s)).collect()
    }

    /// Length of the longest path through non-absorbing states, or `None` if they contain a cycle.
    pub fn longest_transient_path(&self) -> Option<usize> {
        let absorbing = self.absorbing_states();
        let n = self.num_states;
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for s in (0..n).filter(|&s| !absorbing[s]) {
            for a in 0..self.num_actions {
                for &(t, _) in self.row(s, a) {
                    if !absorbing[t] {
                        succ[s].push(t);
                    }
                }
            }
            succ[s].sort_unstable();
            succ[s].dedup();
            for &t in &succ[s] {
                indegree[t] += 1;
            }
        }
        let mut queue: Vec<usize> = (0..n)
            .filter(|&s| !absorbing[s] && indegree[s] == 0)
            .collect();
        let mut depth = vec![1usize; n];
        let mut seen = 0;
        let transient = absorbing.iter().filter(|a| !**a).count();
        while let Some(s) = queue.pop() {
            seen += 1;
            for &t in &succ[s] {
                depth[t] = depth[t].max(depth[s] + 1);
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push(t);
                }
            }
        }
        if seen < transient {
            return None;
        }
        Some(
            (0..n)
                .filter(|&s| !absorbing[s])
                .map(|s| depth[s])
                .max()
                .unwrap_or(0),
        )
    }

    /// Bound on the total discount weight an episode can accumulate:
    /// Σ γ^t over the horizon, 1/(1−γ), or the longest transient path when γ = 1.
    pub fn effective_horizon(&self) -> f64 {
        match self.horizon {
            Horizon::Finite(h) => {
                if self.discount >= 1.0 {
                    h as f64
                } else {
                    (1.0 - self.discount.powi(h as i32)) / (1.0 - self.discount)
                }
            }
            Horizon::Unbounded if self.discount < 1.0 => 1.0 / (1.0 - self.discount),
            Horizon::Unbounded => self.longest_transient_path().unwrap_or(self.num_states) as f64,
        }
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Copy with state `s` renamed to `perm[s]`. `perm` must be a permutation.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, MdpError> {
        let n = self.num_states;
        let a_count = self.num_actions;
        let mut hit = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&t| t >= n || std::mem::replace(&mut hit[t], true))
        {
            return Err(MdpError::InvalidMdp(format!(
                "relabeling is not a permutation of 0..{n}"
            )));
        }
        let mut reward = vec![0.0; n * a_count];
        let mut rows = vec![Vec::new(); n * a_count];
        let mut start = vec![0.0; n];
        for s in 0..n {
            let t = perm[s];
            start[t] = self.start[s];
            for a in 0..a_count {
                reward[t * a_count + a] = self.reward(s, a);
                rows[t * a_count + a] = self.row(s, a).iter().map(|&(x, p)| (perm[x], p)).collect();
            }
        }
        Self::new(n, a_count, reward, rows, start, self.discount, self.horizon)
    }
}

/// On-disk JSON shape of a [`TabularMdp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub horizon: Horizon,
    /// `reward[s][a]`
    pub reward: Vec<Vec<f64>>,
    /// `transition[s][a]` is a list of `(successor, probability)` pairs.
    pub transition: Vec<Vec<Vec<(usize, f64)>>>,
    pub start: Vec<f64>,
}

impl TryFrom<MdpDocument> for TabularMdp {
    type Error = MdpError;

    fn try_from(doc: MdpDocument) -> Result<Self, MdpError> {
        if doc.reward.len() != doc.num_states || doc.transition.len() != doc.num_states {
            return Err(MdpError::InvalidMdp(
                "per-state tables have the wrong length".into(),
            ));
        }
        if doc.reward.iter().any(|r| r.len() != doc.num_actions)
            || doc.transition.iter().any(|t| t.len() != doc.num_actions)
        {
            return Err(MdpError::InvalidMdp(
                "per-action tables have the wrong length".into(),
            ));
        }
        TabularMdp::new(
            doc.num_states,
            doc.num_actions,
            doc.reward.into_iter().flatten().collect(),
            doc.transition.into_iter().flatten().collect(),
            doc.start,
            doc.discount,
            doc.horizon,
        )
    }
}

impl From<TabularMdp> for MdpDocument {
    fn from(mdp: TabularMdp) -> Self {
        let a = mdp.num_actions;
        let transition = (0..mdp.num_states)
            .map(|s| (0..a).map(|x| mdp.row(s, x).to_vec()).collect())
            .collect();
        MdpDocument {
            num_states: mdp.num_states,
            num_actions: a,
            discount: mdp.discount,
            horizon: mdp.horizon,
            reward: mdp.reward.chunks(a).map(|c| c.to_vec()).collect(),
            transition,
            start: mdp.start,
        }
    }
}
