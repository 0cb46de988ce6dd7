use nalgebra::{DMatrix, DVector};

use super::{Horizon, MdpError, Policy, TabularMdp};

/// Default Bellman-residual tolerance for value iteration.
pub const DEFAULT_VI_TOL: f64 = 1e-10;

/// Largest state count for which policy evaluation uses a dense linear solve.
pub(crate) const DENSE_SOLVE_MAX_STATES: usize = 1024;

const EVAL_TOL: f64 = 1e-12;

/// Optimal (or time-0) value tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub values: Vec<f64>,
    /// Indexed `s * num_actions + a`.
    pub q: Vec<f64>,
    pub num_actions: usize,
    /// Achieved Bellman residual (0 for backward induction).
    pub residual: f64,
}

impl ValueTables {
    pub fn q_row(&self, s: usize) -> &[f64] {
        &self.q[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Expected value of the start distribution.
    pub fn start_value(&self, mdp: &TabularMdp) -> f64 {
        dot(mdp.start_dist(), &self.values)
    }

    /// Greedy deterministic policy, lowest action index on ties.
    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.values.len())
            .map(|s| {
                let row = self.q_row(s);
                let mut best = 0;
                for (a, &q) in row.iter().enumerate() {
                    if q > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn backup(mdp: &TabularMdp, v: &[f64], q: &mut [f64]) {
    let na = mdp.num_actions();
    let g = mdp.discount();
    for s in 0..mdp.num_states() {
        for a in 0..na {
            let ev: f64 = mdp.row(s, a).iter().map(|&(t, p)| p * v[t]).sum();
            q[s * na + a] = mdp.reward(s, a) + g * ev;
        }
    }
}

fn row_max(q: &[f64], na: usize, v: &mut [f64]) {
    for (s, out) in v.iter_mut().enumerate() {
        *out = q[s * na..(s + 1) * na]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
    }
}

/// Optimal value tables.
///
/// Unbounded horizons iterate the Bellman optimality operator until the sup-norm
/// change is at most `tol`. Finite horizons run backward induction and return the
/// tables with the full horizon remaining (the time-0 slice).
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ValueTables, MdpError> {
    if !(tol > 0.0) {
        return Err(MdpError::InvalidTolerance(tol));
    }
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut q = vec![0.0; n * na];
    match mdp.horizon() {
        Horizon::Finite(h) => {
            for _ in 0..h {
                backup(mdp, &v, &mut q);
                row_max(&q, na, &mut v);
            }
            Ok(ValueTables {
                values: v,
                q,
                num_actions: na,
                residual: 0.0,
            })
        }
        Horizon::Unbounded => {
            let mut residual;
            let mut sweeps = 0usize;
            loop {
                backup(mdp, &v, &mut q);
                row_max(&q, na, &mut next);
                residual = v
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                std::mem::swap(&mut v, &mut next);
                sweeps += 1;
                let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                // Stop at the tolerance, or when the residual is down to rounding noise.
                if residual <= tol || residual <= 16.0 * f64::EPSILON * scale || sweeps > 50_000_000
                {
                    break;
                }
            }
            // q is the backup of the previous iterate and v = max_a q exactly.
            Ok(ValueTables {
                values: v,
                q,
                num_actions: na,
                residual,
            })
        }
    }
}

/// Value of a stationary policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub values: Vec<f64>,
    /// R(π) = Σ_s S0(s) V^π(s).
    pub episode_reward: f64,
}

/// Expected reward of following `policy` for each action, i.e. `r_π` and the sparse rows of `P_π`.
pub(crate) fn induced_chain(
    mdp: &TabularMdp,
    policy: &dyn Policy,
) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
    let na = mdp.num_actions();
    let mut probs = vec![0.0; na];
    let mut r_pi = vec![0.0; mdp.num_states()];
    let mut p_pi = Vec::with_capacity(mdp.num_states());
    for s in 0..mdp.num_states() {
        policy.action_probs(s, &mut probs);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (a, &pa) in probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            r_pi[s] += pa * mdp.reward(s, a);
            for &(t, p) in mdp.row(s, a) {
                row.push((t, pa * p));
            }
        }
        row.sort_by_key(|e| e.0);
        row.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        p_pi.push(row);
    }
    (r_pi, p_pi)
}

/// Solves `x = b + γ M x` where `M` is given by sparse rows (or its transpose when `transpose`).
pub(crate) fn solve_discounted(
    rows: &[Vec<(usize, f64)>],
    b: &[f64],
    gamma: f64,
    transpose: bool,
) -> Vec<f64> {
    let n = b.len();
    if gamma < 1.0 && n <= DENSE_SOLVE_MAX_STATES {
        let mut m = DMatrix::<f64>::identity(n, n);
        for (s, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                if transpose {
                    m[(t, s)] -= gamma * p;
                } else {
                    m[(s, t)] -= gamma * p;
                }
            }
        }
        if let Some(x) = m.lu().solve(&DVector::from_column_slice(b)) {
            return x.as_slice().to_vec();
        }
    }
    // Fixed-point iteration; terminates exactly for γ = 1 on acyclic chains.
    let mut x = b.to_vec();
    let mut next = vec![0.0; n];
    for sweep in 0.. {
        next.copy_from_slice(b);
        for (s, row) in rows.iter().enumerate() {
            for &(t, p) in row {
                if transpose {
                    next[t] += gamma * p * x[s];
                } else {
                    next[s] += gamma * p * x[t];
                }
            }
        }
        let change = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if change <= EVAL_TOL * scale || sweep > 50_000_000 {
            break;
        }
    }
    x
}

/// Exact value of a stationary policy and its episode reward.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &dyn Policy) -> Result<PolicyValue, MdpError> {
    policy.check_dims(mdp.num_states(), mdp.num_actions())?;
    let (r_pi, p_pi) = induced_chain(mdp, policy);
    let g = mdp.discount();
    let values = match mdp.horizon() {
        Horizon::Finite(h) => {
            let mut v = vec![0.0; mdp.num_states()];
            for _ in 0..h {
                v = r_pi
                    .iter()
                    .zip(&p_pi)
                    .map(|(r, row)| r + g * row.iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                    .collect();
            }
            v
        }
        Horizon::Unbounded => solve_discounted(&p_pi, &r_pi, g, false),
    };
    let episode_reward = dot(mdp.start_dist(), &values);
    Ok(PolicyValue {
        values,
        episode_reward,
    })
}
