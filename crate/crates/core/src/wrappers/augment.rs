use std::sync::Arc;

use super::WrapperError;
use crate::family::{EmpiricalSample, MdpFamily, Observation, TabularMember};
use crate::mdp::TabularMdp;

/// `(base_state, theta_index)` packed as `theta_index * S + base_state`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AugmentedStateIndex {
    pub base_state: usize,
    pub theta_index: usize,
}

impl AugmentedStateIndex {
    pub fn pack(&self, num_base_states: usize) -> usize {
        self.theta_index * num_base_states + self.base_state
    }

    pub fn unpack(flat: usize, num_base_states: usize) -> Self {
        Self {
            base_state: flat % num_base_states,
            theta_index: flat / num_base_states,
        }
    }
}

/// Appends the θ index to the state.
///
/// All output members share one block-diagonal transition table and one reward
/// table; member `i` starts in block `i`. θ is indexed by its position in `sample`.
pub fn augment_with_theta(
    family: &MdpFamily,
    sample: &EmpiricalSample,
) -> Result<MdpFamily, WrapperError> {
    let members = family.check_shared(&sample.thetas)?;
    let Some(first) = members.first() else {
        return Ok(MdpFamily::from_members(
            format!("{}+theta", family.name()),
            vec![],
        )?);
    };
    let (ns, na) = (first.mdp.num_states(), first.mdp.num_actions());
    let (gamma, horizon) = (first.mdp.discount(), first.mdp.horizon());
    if let Some(m) = members
        .iter()
        .find(|m| m.mdp.discount() != gamma || m.mdp.horizon() != horizon)
    {
        return Err(WrapperError::MismatchedMembers(format!(
            "discount or horizon ({}, {:?}) vs ({gamma}, {horizon:?})",
            m.mdp.discount(),
            m.mdp.horizon()
        )));
    }
    let n = members.len();
    let total = ns * n;
    let mut reward = vec![0.0; total * na];
    let mut rows = vec![Vec::new(); total * na];
    for (i, m) in members.iter().enumerate() {
        for s in 0..ns {
            let id = AugmentedStateIndex {
                base_state: s,
                theta_index: i,
            }
            .pack(ns);
            for a in 0..na {
                reward[id * na + a] = m.mdp.reward(s, a);
                rows[id * na + a] = m
                    .mdp
                    .row(s, a)
                    .iter()
                    .map(|&(t, p)| (i * ns + t, p))
                    .collect();
            }
        }
    }
    let observations: Arc<Vec<Observation>> =
        Arc::new((0..total).map(Observation::state).collect());
    let mut out = Vec::with_capacity(n);
    for (i, (theta, m)) in sample.thetas.iter().zip(&members).enumerate() {
        let mut start = vec![0.0; total];
        start[i * ns..(i + 1) * ns].copy_from_slice(m.mdp.start_dist());
        let mdp = TabularMdp::new(
            total,
            na,
            reward.clone(),
            rows.clone(),
            start,
            gamma,
            horizon,
        )?;
        out.push((
            theta.clone(),
            TabularMember {
                mdp: Arc::new(mdp),
                observations: observations.clone(),
            },
        ));
    }
    Ok(MdpFamily::from_members(
        format!("{}+theta", family.name()),
        out,
    )?)
}
