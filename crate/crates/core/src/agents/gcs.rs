use super::AgentError;
use crate::family::{EmpiricalSample, MdpFamily};
use crate::mdp::{exact_policy_gradient, SoftmaxPolicy};

const NORM_FLOOR: f64 = 1e-12;

/// Exact gradient of the empirical reward over `sample`: the per-member
/// gradients averaged with equal weight.
pub fn mean_gradient(
    policy: &SoftmaxPolicy,
    family: &MdpFamily,
    sample: &EmpiricalSample,
) -> Result<Vec<f64>, AgentError> {
    if sample.is_empty() {
        return Err(AgentError::EmptySample);
    }
    let mut total = vec![0.0; policy.logits().len()];
    for theta in &sample.thetas {
        let member = family.member(theta)?;
        let g = exact_policy_gradient(&member.mdp, policy)?;
        for (t, x) in total.iter_mut().zip(g) {
            *t += x;
        }
    }
    let n = sample.len() as f64;
    total.iter_mut().for_each(|x| *x /= n);
    Ok(total)
}

/// Cosine of two vectors. `None` when either norm is below 1e-12.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < NORM_FLOOR || nb < NORM_FLOOR {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Gradient cosine similarity between the train-sample and test-sample objectives.
pub fn gcs(
    policy: &SoftmaxPolicy,
    family: &MdpFamily,
    train: &EmpiricalSample,
    test: &EmpiricalSample,
) -> Result<f64, AgentError> {
    let g_train = mean_gradient(policy, family, train)?;
    let g_test = mean_gradient(policy, family, test)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm(&g_train) < NORM_FLOOR {
        return Err(AgentError::DegenerateGradient("train"));
    }
    if norm(&g_test) < NORM_FLOOR {
        return Err(AgentError::DegenerateGradient("test"));
    }
    Ok(cosine(&g_train, &g_test).expect("norms checked"))
}
