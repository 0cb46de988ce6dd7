use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sim::inverse_cdf;
use super::{FamilyError, MdpFamily, TabularMember, Theta};
use crate::mdp::{Horizon, TabularMdp};
use crate::rng;

/// How much of an MDP's randomness each seed fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnwrapDepth {
    /// Only the initial state: the member gets a Dirac start.
    InitialOnly,
    /// The initial state and one uniform variate per timestep for `T` steps.
    NoiseStream(usize),
}

fn initial_state(mdp: &TabularMdp, seed: u64) -> usize {
    let u: f64 = rng::stream(seed, "unwrap-initial", 0).gen();
    inverse_cdf(mdp.start_dist().iter().cloned().enumerate(), u)
}

fn dirac(n: usize, s: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[s] = 1.0;
    v
}

/// Member for one seed under a noise stream of length `t`: states are `(s, k)`
/// packed as `k * S + s`, plus an absorbing terminal at `T * S`.
fn noise_member(mdp: &TabularMdp, seed: u64, t: usize) -> Result<TabularMdp, FamilyError> {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut noise = rng::stream(seed, "unwrap-noise", 0);
    let xi: Vec<f64> = (0..t).map(|_| noise.gen()).collect();
    let terminal = t * ns;
    let total = terminal + 1;
    let mut reward = vec![0.0; total * na];
    let mut next = vec![terminal; total * na];
    for (k, &u) in xi.iter().enumerate() {
        for s in 0..ns {
            let id = k * ns + s;
            for a in 0..na {
                reward[id * na + a] = mdp.reward(s, a);
                if k + 1 < t {
                    next[id * na + a] =
                        (k + 1) * ns + inverse_cdf(mdp.row(s, a).iter().cloned(), u);
                }
            }
        }
    }
    let start = dirac(total, initial_state(mdp, seed));
    Ok(TabularMdp::deterministic(
        total,
        na,
        reward,
        next,
        start,
        mdp.discount(),
        Horizon::Unbounded,
    )?)
}

/// Turns a stochastic MDP into a family of deterministic-start members, one per seed.
///
/// `InitialOnly` keeps the dynamics and replaces `S0` with a Dirac at a state drawn
/// from `S0` by the seed. `NoiseStream(T)` also fixes the transition noise for
/// `T` steps, folding the timestep into the state.
pub fn unwrap_seeds(
    mdp: &TabularMdp,
    seeds: &[u64],
    depth: UnwrapDepth,
) -> Result<MdpFamily, FamilyError> {
    let mut members = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let member = match depth {
            UnwrapDepth::InitialOnly => {
                mdp.with_start(dirac(mdp.num_states(), initial_state(mdp, seed)))?
            }
            UnwrapDepth::NoiseStream(t) => {
                if mdp.horizon() != Horizon::Finite(t) {
                    return Err(FamilyError::UnboundedHorizonNoiseStream);
                }
                noise_member(mdp, seed, t)?
            }
        };
        members.push((Theta::seed(seed), TabularMember::fully_observed(member)));
    }
    MdpFamily::from_members("unwrapped", members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{value_iteration, DEFAULT_VI_TOL};

    fn two_start() -> TabularMdp {
        TabularMdp::new(
            3,
            2,
            vec![0.0, 1.0, 0.5, 0.0, 0.0, 0.0],
            vec![
                vec![(0, 0.5), (2, 0.5)],
                vec![(1, 1.0)],
                vec![(2, 1.0)],
                vec![(0, 0.3), (1, 0.7)],
                vec![(2, 1.0)],
                vec![(2, 1.0)],
            ],
            vec![0.5, 0.5, 0.0],
            0.9,
            Horizon::Unbounded,
        )
        .unwrap()
    }

    #[test]
    fn initial_only_keeps_dynamics_and_support() {
        let mdp = two_start();
        let fam = unwrap_seeds(&mdp, &[1, 2, 3, 4], UnwrapDepth::InitialOnly).unwrap();
        for t in fam.params().all().unwrap() {
            let m = fam.member(t).unwrap();
            let support = m.mdp.start_support();
            assert_eq!(support.len(), 1);
            assert!(support[0] < 2);
            assert_eq!(m.mdp.rows(), mdp.rows());
            assert_eq!(m.mdp.rewards(), mdp.rewards());
        }
    }

    #[test]
    fn dirac_deterministic_mdp_is_a_fixed_point() {
        let mdp = TabularMdp::deterministic(
            2,
            1,
            vec![1.0, 0.0],
            vec![1, 1],
            vec![1.0, 0.0],
            0.5,
            Horizon::Unbounded,
        )
        .unwrap();
        let fam = unwrap_seeds(&mdp, &[9, 10], UnwrapDepth::InitialOnly).unwrap();
        assert_eq!(*fam.member(&Theta::seed(9)).unwrap().mdp, mdp);
    }

    #[test]
    fn noise_stream_needs_matching_finite_horizon() {
        let err = unwrap_seeds(&two_start(), &[1], UnwrapDepth::NoiseStream(3)).unwrap_err();
        assert_eq!(err, FamilyError::UnboundedHorizonNoiseStream);
    }

    #[test]
    fn noise_stream_members_are_deterministic() {
        let mdp = TabularMdp::new(
            2,
            1,
            vec![1.0, 0.0],
            vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]],
            vec![1.0, 0.0],
            1.0,
            Horizon::Finite(3),
        )
        .unwrap();
        let fam = unwrap_seeds(&mdp, &[5, 6, 7], UnwrapDepth::NoiseStream(3)).unwrap();
        assert!(fam.is_deterministic());
        for t in fam.params().all().unwrap() {
            let m = fam.member(t).unwrap();
            assert_eq!(m.mdp.num_states(), 7);
            let v = value_iteration(&m.mdp, DEFAULT_VI_TOL).unwrap();
            let start = v.start_value(&m.mdp);
            assert!((1.0..=3.0).contains(&start));
        }
    }
}
