use super::solve::{dot, induced_chain, solve_discounted};
use super::{Horizon, MdpError, Policy, SoftmaxPolicy, TabularMdp};

/// Default bound on `|S| * |A|` for exact gradients.
pub const DEFAULT_GRADIENT_CAP: usize = 100_000;

/// Exact gradient of the episode reward with respect to the softmax logits.
pub fn exact_policy_gradient(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
) -> Result<Vec<f64>, MdpError> {
    exact_policy_gradient_capped(mdp, policy, DEFAULT_GRADIENT_CAP)
}

/// As [`exact_policy_gradient`] with an explicit size cap.
///
/// For a softmax-tabular policy, `∂R/∂ℓ(s,b) = Σ_t γ^t Pr(s_t = s) π(b|s) (Q_t(s,b) − V_t(s))`.
/// Unbounded horizons collapse the time sum into the discounted occupancy measure.
pub fn exact_policy_gradient_capped(
    mdp: &TabularMdp,
    policy: &SoftmaxPolicy,
    cap: usize,
) -> Result<Vec<f64>, MdpError> {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    if n * na > cap {
        return Err(MdpError::CapExceeded { size: n * na, cap });
    }
    policy.check_dims(n, na)?;
    let g = mdp.discount();
    let (r_pi, p_pi) = induced_chain(mdp, policy);
    let probs: Vec<Vec<f64>> = (0..n).map(|s| policy.probs(s)).collect();
    let mut grad = vec![0.0; n * na];

    // Adds weight(s) * π(b|s) * (Q(s,b) - V(s)) for every (s, b).
    let mut q = vec![0.0; na];
    let mut accumulate = |weight: &[f64], v: &[f64]| {
        for s in 0..n {
            if weight[s] == 0.0 {
                continue;
            }
            for (b, qb) in q.iter_mut().enumerate() {
                let ev: f64 = mdp.row(s, b).iter().map(|&(t, p)| p * v[t]).sum();
                *qb = mdp.reward(s, b) + g * ev;
            }
            let vs = dot(&probs[s], &q);
            for b in 0..na {
                grad[s * na + b] += weight[s] * probs[s][b] * (q[b] - vs);
            }
        }
    };

    match mdp.horizon() {
        Horizon::Unbounded => {
            let v = solve_discounted(&p_pi, &r_pi, g, false);
            let occupancy = solve_discounted(&p_pi, mdp.start_dist(), g, true);
            accumulate(&occupancy, &v);
        }
        Horizon::Finite(h) => {
            // values[k] = value with k steps to go.
            let mut values = vec![vec![0.0; n]];
            for k in 1..=h {
                let prev = &values[k - 1];
                let next = r_pi
                    .iter()
                    .zip(&p_pi)
                    .map(|(r, row)| r + g * row.iter().map(|&(t, p)| p * prev[t]).sum::<f64>())
                    .collect();
                values.push(next);
            }
            let mut dist = mdp.start_dist().to_vec();
            let mut discount = 1.0;
            for t in 0..h {
                let weight: Vec<f64> = dist.iter().map(|d| d * discount).collect();
                accumulate(&weight, &values[h - t - 1]);
                let mut next = vec![0.0; n];
                for (s, row) in p_pi.iter().enumerate() {
                    for &(x, p) in row {
                        next[x] += dist[s] * p;
                    }
                }
                dist = next;
                discount *= g;
            }
        }
    }
    Ok(grad)
}
