use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::{run_episode, Actor, Observation};
use super::{EmpiricalSample, FamilyError, MdpFamily, Theta};
use crate::mdp::{policy_evaluation, DeterministicPolicy, Policy, SoftmaxPolicy, StochasticPolicy};
use crate::rng;

/// A stationary policy over observations.
pub trait ObservationPolicy: Sync {
    fn num_actions(&self) -> usize;
    /// Writes π(·|o) into `out`; `None` when the observation is outside the policy's domain.
    fn action_probs(&self, obs: &Observation, out: &mut [f64]) -> Option<()>;
}

/// Anything that can be evaluated on family members.
pub trait EvalPolicy: Sync {
    fn num_actions(&self) -> usize;
    /// `Some` when the policy is a fixed map from observations to action
    /// distributions; enables exact evaluation on tabular members.
    fn stationary(&self) -> Option<&dyn ObservationPolicy> {
        None
    }
    /// A fresh actor for one evaluation episode.
    fn actor(&self) -> Box<dyn Actor + '_>;
    /// Actions are a deterministic function of the episode so far.
    fn is_deterministic(&self) -> bool;
}

fn table_probs<P: Policy>(p: &P, obs: &Observation, out: &mut [f64]) -> Option<()> {
    let s = usize::try_from(obs.obs).ok()?;
    if s >= p.num_states() || out.len() != p.num_actions() {
        return None;
    }
    p.action_probs(s, out);
    Some(())
}

macro_rules! table_policy {
    ($ty:ty, $det:expr) => {
        impl ObservationPolicy for $ty {
            fn num_actions(&self) -> usize {
                Policy::num_actions(self)
            }
            fn action_probs(&self, obs: &Observation, out: &mut [f64]) -> Option<()> {
                table_probs(self, obs, out)
            }
        }

        impl EvalPolicy for $ty {
            fn num_actions(&self) -> usize {
                Policy::num_actions(self)
            }
            fn stationary(&self) -> Option<&dyn ObservationPolicy> {
                Some(self)
            }
            fn actor(&self) -> Box<dyn Actor + '_> {
                Box::new(StationaryActor::new(self))
            }
            fn is_deterministic(&self) -> bool {
                $det
            }
        }
    };
}

table_policy!(DeterministicPolicy, true);
table_policy!(SoftmaxPolicy, false);
table_policy!(StochasticPolicy, false);

/// Samples from a stationary observation policy. Observations outside the
/// policy's domain fall back to action 0.
pub struct StationaryActor<'a> {
    policy: &'a dyn ObservationPolicy,
    probs: Vec<f64>,
}

impl<'a> StationaryActor<'a> {
    pub fn new(policy: &'a dyn ObservationPolicy) -> Self {
        Self {
            policy,
            probs: vec![0.0; policy.num_actions()],
        }
    }
}

impl Actor for StationaryActor<'_> {
    fn act(&mut self, obs: &Observation, _t: usize, rng: &mut dyn RngCore) -> usize {
        if self.policy.action_probs(obs, &mut self.probs).is_none() {
            return 0;
        }
        if let Some(a) = self.probs.iter().position(|&p| p == 1.0) {
            return a;
        }
        super::sim::inverse_cdf(self.probs.iter().cloned().enumerate(), rng.gen())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Monte-Carlo episodes per member when exact evaluation is unavailable.
    pub episodes: usize,
    /// Step cap for unbounded-horizon simulation.
    pub max_steps: usize,
    /// Root of the per-θ evaluation streams.
    pub seed: u64,
    /// Use exact policy evaluation on tabular members when the policy is stationary.
    pub exact: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            episodes: 100,
            max_steps: 200,
            seed: 0,
            exact: true,
        }
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

fn exact_member_reward(
    stationary: &dyn ObservationPolicy,
    family: &MdpFamily,
    theta: &Theta,
) -> Option<Result<f64, FamilyError>> {
    let member = family.member(theta).ok()?;
    let (ns, na) = (member.mdp.num_states(), member.mdp.num_actions());
    let mut probs = vec![0.0; ns * na];
    for (s, obs) in member.observations.iter().enumerate() {
        if stationary
            .action_probs(obs, &mut probs[s * na..(s + 1) * na])
            .is_none()
        {
            return Some(Err(FamilyError::IncompatiblePolicy(format!(
                "observation {} of member {theta} is outside the policy's domain",
                obs.obs
            ))));
        }
    }
    let table = match StochasticPolicy::new(probs, ns, na) {
        Ok(t) => t,
        Err(e) => return Some(Err(e.into())),
    };
    Some(
        policy_evaluation(&member.mdp, &table)
            .map(|v| v.episode_reward)
            .map_err(Into::into),
    )
}

fn simulated_member_reward(
    policy: &dyn EvalPolicy,
    family: &MdpFamily,
    theta: &Theta,
    opts: &EvalOptions,
) -> Result<f64, FamilyError> {
    let sim = family.simulator(theta)?;
    let episodes = if sim.is_deterministic() && policy.is_deterministic() {
        1
    } else {
        opts.episodes.max(1)
    };
    let base = rng::derive_seed(opts.seed, "eval", theta.seed);
    let label = theta.to_string();
    let mut total = 0.0;
    for i in 0..episodes as u64 {
        let mut env_rng = rng::stream(base, &label, 2 * i);
        let mut actor_rng = rng::stream(base, &label, 2 * i + 1);
        let mut actor = policy.actor();
        total += run_episode(
            sim.as_ref(),
            actor.as_mut(),
            &mut env_rng,
            &mut actor_rng,
            opts.max_steps,
        )
        .discounted_return;
    }
    Ok(total / episodes as f64)
}

/// Per-member episode reward `R_θ(π)` for every θ, in list order.
pub fn member_rewards(
    policy: &dyn EvalPolicy,
    thetas: &[Theta],
    family: &MdpFamily,
    opts: &EvalOptions,
) -> Result<Vec<f64>, FamilyError> {
    if policy.num_actions() != family.num_actions() {
        return Err(FamilyError::IncompatiblePolicy(format!(
            "policy has {} actions, family has {}",
            policy.num_actions(),
            family.num_actions()
        )));
    }
    thetas
        .par_iter()
        .map(|theta| {
            if opts.exact {
                if let Some(stationary) = policy.stationary() {
                    if let Some(r) = exact_member_reward(stationary, family, theta) {
                        return r;
                    }
                }
            }
            simulated_member_reward(policy, family, theta, opts)
        })
        .collect()
}

/// `J_Θ̂(π)`: mean episode reward over the sample.
pub fn empirical_reward(
    policy: &dyn EvalPolicy,
    sample: &EmpiricalSample,
    family: &MdpFamily,
    opts: &EvalOptions,
) -> Result<Estimate, FamilyError> {
    if sample.is_empty() {
        return Err(FamilyError::EmptySample);
    }
    Ok(Estimate::from_values(&member_rewards(
        policy,
        &sample.thetas,
        family,
        opts,
    )?))
}

/// Train and population objectives and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub j_train: f64,
    pub j_population: f64,
    pub gap: f64,
    pub stderr_train: f64,
    pub stderr_population: f64,
    pub n_train: usize,
    pub n_eval: usize,
}

impl GapReport {
    pub fn new(train: Estimate, population: Estimate) -> Self {
        Self {
            j_train: train.mean,
            j_population: population.mean,
            gap: train.mean - population.mean,
            stderr_train: train.stderr,
            stderr_population: population.stderr,
            n_train: train.n,
            n_eval: population.n,
        }
    }
}

/// Evaluates `policy` on both samples. The eval-sample mean estimates `J_Θ`.
pub fn gap_report(
    policy: &dyn EvalPolicy,
    train: &EmpiricalSample,
    eval: &EmpiricalSample,
    family: &MdpFamily,
    opts: &EvalOptions,
) -> Result<GapReport, FamilyError> {
    if eval.is_empty() {
        return Err(FamilyError::EmptyEval);
    }
    let j_train = empirical_reward(policy, train, family, opts)?;
    let j_pop = empirical_reward(policy, eval, family, opts)?;
    Ok(GapReport::new(j_train, j_pop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::TabularMember;
    use crate::mdp::{Horizon, TabularMdp};

    fn bandit_family() -> MdpFamily {
        // θ=0 rewards action 0, θ=1 rewards action 1.
        MdpFamily::from_fn(
            "bandit",
            vec![Theta::seed(0), Theta::seed(1)],
            2,
            |t: &Theta| {
                let r = if t.seed == 0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                };
                let mdp = TabularMdp::deterministic(
                    1,
                    2,
                    r,
                    vec![0, 0],
                    vec![1.0],
                    0.0,
                    Horizon::Finite(1),
                )?;
                Ok(TabularMember::fully_observed(mdp))
            },
        )
        .unwrap()
    }

    #[test]
    fn mean_of_members() {
        let fam = bandit_family();
        let pi = DeterministicPolicy::constant(1, 2, 0).unwrap();
        let both = EmpiricalSample::new(vec![Theta::seed(0), Theta::seed(1)], 0, "all");
        let one = EmpiricalSample::new(vec![Theta::seed(0)], 0, "one");
        let opts = EvalOptions::default();
        assert_eq!(empirical_reward(&pi, &both, &fam, &opts).unwrap().mean, 0.5);
        assert_eq!(empirical_reward(&pi, &one, &fam, &opts).unwrap().mean, 1.0);
    }

    #[test]
    fn simulated_matches_exact_for_deterministic_pairs() {
        let fam = bandit_family();
        let pi = DeterministicPolicy::constant(1, 2, 1).unwrap();
        let s = EmpiricalSample::new(vec![Theta::seed(0), Theta::seed(1)], 0, "all");
        let exact = empirical_reward(&pi, &s, &fam, &EvalOptions::default()).unwrap();
        let sim = empirical_reward(
            &pi,
            &s,
            &fam,
            &EvalOptions {
                exact: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(exact, sim);
    }

    #[test]
    fn gap_identity_and_empty_eval() {
        let fam = bandit_family();
        let pi = SoftmaxPolicy::new(vec![0.3, -0.1], 1, 2).unwrap();
        let train = EmpiricalSample::new(vec![Theta::seed(0)], 0, "train");
        let eval = EmpiricalSample::new(vec![Theta::seed(1)], 0, "eval");
        let opts = EvalOptions::default();
        let g = gap_report(&pi, &train, &eval, &fam, &opts).unwrap();
        assert_eq!(g.gap, g.j_train - g.j_population);
        let same = gap_report(&pi, &train, &train, &fam, &opts).unwrap();
        assert_eq!(same.gap, 0.0);
        let empty = EmpiricalSample::new(vec![], 0, "eval");
        assert_eq!(
            gap_report(&pi, &train, &empty, &fam, &opts),
            Err(FamilyError::EmptyEval)
        );
    }

    #[test]
    fn action_count_mismatch() {
        let fam = bandit_family();
        let pi = DeterministicPolicy::constant(1, 3, 0).unwrap();
        let s = EmpiricalSample::new(vec![Theta::seed(0)], 0, "x");
        assert!(matches!(
            empirical_reward(&pi, &s, &fam, &EvalOptions::default()),
            Err(FamilyError::IncompatiblePolicy(_))
        ));
    }
}
