//! Constructions over families: θ-augmentation, history windows, observation
//! relabeling and time folding.

mod augment;
mod history;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{EmpiricalSample, FamilyError, MdpFamily, TabularMember};
use crate::mdp::{Horizon, MdpError, TabularMdp};
use crate::rng;
use crate::zoo::KeyedPermutation;

pub use augment::{augment_with_theta, AugmentedStateIndex};
pub use history::{history_wrapper, HistoryOptions, HistoryStateIndex, DEFAULT_HISTORY_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WrapperError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("relabeling is not a bijection on {0} states")]
    NotABijection(usize),
    #[error("lifted state space has {size} states, cap is {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("members disagree on {0}")]
    MismatchedMembers(String),
    #[error("time folding needs a finite horizon")]
    NotFinite,
    #[error("window length must be at least 1")]
    EmptyWindow,
}

/// Wrapper selection as it appears in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WrapperSpec {
    None {},
    Theta {},
    History {
        k: usize,
        #[serde(default = "yes")]
        include_actions: bool,
    },
    Obfuscate {
        key: u64,
    },
}

fn yes() -> bool {
    true
}

impl WrapperSpec {
    pub fn label(&self) -> String {
        match self {
            WrapperSpec::None {} => "none".into(),
            WrapperSpec::Theta {} => "theta".into(),
            WrapperSpec::History {
                k,
                include_actions: true,
            } => format!("history{k}"),
            WrapperSpec::History {
                k,
                include_actions: false,
            } => format!("history{k}-obs"),
            WrapperSpec::Obfuscate { key } => format!("obfuscate{key}"),
        }
    }

    /// Applies the wrapper to the members named by `sample`.
    pub fn apply(
        &self,
        family: &MdpFamily,
        sample: &EmpiricalSample,
    ) -> Result<MdpFamily, WrapperError> {
        match *self {
            WrapperSpec::None {} => Ok(family.clone()),
            WrapperSpec::Theta {} => augment_with_theta(family, sample),
            WrapperSpec::History { k, include_actions } => history_wrapper(
                family,
                sample,
                &HistoryOptions {
                    k,
                    include_actions,
                    cap: DEFAULT_HISTORY_CAP,
                },
            ),
            WrapperSpec::Obfuscate { key } => obfuscate_family(family, sample, key),
        }
    }
}

/// Renames state `s` to `w[s]`. `V*_out(w(s)) = V*_in(s)`.
pub fn obfuscate_observations(mdp: &TabularMdp, w: &[usize]) -> Result<TabularMdp, WrapperError> {
    let n = mdp.num_states();
    let mut seen = vec![false; n];
    if w.len() != n
        || w.iter()
            .any(|&x| x >= n || std::mem::replace(&mut seen[x], true))
    {
        return Err(WrapperError::NotABijection(n));
    }
    Ok(mdp.relabeled(w)?)
}

/// Relabels every member's states by its own keyed permutation `w_θ`.
pub fn obfuscate_family(
    family: &MdpFamily,
    sample: &EmpiricalSample,
    key: u64,
) -> Result<MdpFamily, WrapperError> {
    let mut members = Vec::with_capacity(sample.len());
    for theta in &sample.thetas {
        let member = family.member(theta)?;
        let n = member.mdp.num_states();
        let w = KeyedPermutation::over(rng::derive_seed(key, "obfuscate", theta.seed), n);
        let mdp = obfuscate_observations(&member.mdp, w.forward())?;
        members.push((theta.clone(), TabularMember::fully_observed(mdp)));
    }
    Ok(MdpFamily::from_members(
        format!("{}+obfuscate", family.name()),
        members,
    )?)
}

/// Unbounded form of a finite-horizon MDP. State `(s, t)` is packed as `t * S + s`;
/// the absorbing zero-reward terminal is `H * S`.
pub fn fold_time(mdp: &TabularMdp) -> Result<TabularMdp, WrapperError> {
    let Horizon::Finite(h) = mdp.horizon() else {
        return Err(WrapperError::NotFinite);
    };
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let terminal = h * ns;
    let total = terminal + 1;
    let mut reward = vec![0.0; total * na];
    let mut rows = vec![vec![(terminal, 1.0)]; total * na];
    for t in 0..h {
        for s in 0..ns {
            let id = t * ns + s;
            for a in 0..na {
                reward[id * na + a] = mdp.reward(s, a);
                if t + 1 < h {
                    rows[id * na + a] = mdp
                        .row(s, a)
                        .iter()
                        .map(|&(x, p)| ((t + 1) * ns + x, p))
                        .collect();
                }
            }
        }
    }
    let mut start = vec![0.0; total];
    start[..ns].copy_from_slice(mdp.start_dist());
    Ok(TabularMdp::new(
        total,
        na,
        reward,
        rows,
        start,
        mdp.discount(),
        Horizon::Unbounded,
    )?)
}

/// [`fold_time`] applied to every member of the sample.
pub fn fold_time_family(
    family: &MdpFamily,
    sample: &EmpiricalSample,
) -> Result<MdpFamily, WrapperError> {
    let mut members = Vec::with_capacity(sample.len());
    for theta in &sample.thetas {
        let member = family.member(theta)?;
        members.push((
            theta.clone(),
            TabularMember::fully_observed(fold_time(&member.mdp)?),
        ));
    }
    Ok(MdpFamily::from_members(
        format!("{}+folded", family.name()),
        members,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{value_iteration, DEFAULT_VI_TOL};

    #[test]
    fn fold_single_step() {
        let mdp = TabularMdp::deterministic(
            2,
            2,
            vec![1.0, 3.0, 2.0, 0.5],
            vec![1, 0, 0, 1],
            vec![0.5, 0.5],
            0.9,
            Horizon::Finite(1),
        )
        .unwrap();
        let folded = fold_time(&mdp).unwrap();
        assert_eq!(folded.num_states(), 3);
        let v = value_iteration(&folded, DEFAULT_VI_TOL).unwrap();
        assert_eq!(&v.values[..2], &[3.0, 2.0]);
    }

    #[test]
    fn fold_three_unit_rewards() {
        let mdp =
            TabularMdp::deterministic(1, 1, vec![1.0], vec![0], vec![1.0], 1.0, Horizon::Finite(3))
                .unwrap();
        let v = value_iteration(&fold_time(&mdp).unwrap(), DEFAULT_VI_TOL).unwrap();
        assert_eq!(v.values[0], 3.0);
    }

    #[test]
    fn obfuscation_rejects_non_bijection() {
        let mdp = TabularMdp::deterministic(
            2,
            1,
            vec![0.0, 1.0],
            vec![1, 0],
            vec![1.0, 0.0],
            0.5,
            Horizon::Unbounded,
        )
        .unwrap();
        assert_eq!(
            obfuscate_observations(&mdp, &[0, 0]),
            Err(WrapperError::NotABijection(2))
        );
        assert_eq!(obfuscate_observations(&mdp, &[0, 1]).unwrap(), mdp);
        let swapped = obfuscate_observations(&mdp, &[1, 0]).unwrap();
        assert_eq!(obfuscate_observations(&swapped, &[1, 0]).unwrap(), mdp);
    }

    #[test]
    fn wrapper_spec_json() {
        let spec: WrapperSpec = serde_json::from_str(r#"{"kind":"history","k":2}"#).unwrap();
        assert_eq!(
            spec,
            WrapperSpec::History {
                k: 2,
                include_actions: true
            }
        );
        assert!(serde_json::from_str::<WrapperSpec>(r#"{"kind":"theta","extra":1}"#).is_err());
    }
}
