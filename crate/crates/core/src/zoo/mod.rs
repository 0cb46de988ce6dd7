//! Bundled families: hash observations and pseudorandom dynamics on the m-bit
//! hypercube, and two gridworlds.
//!
//! The hypercube primitives are seeded random tables rather than cryptographic
//! constructions. At m ≤ 16 a table entry is unpredictable until queried, which
//! is the only property the sample-complexity experiments rely on.

mod gridworld;
mod hypercube;
mod keyed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{FamilyError, MdpFamily, Theta};
use crate::mdp::{MdpError, TabularMdp};

pub use gridworld::{
    hidden_param_thetas, make_goal_gridworld, make_hidden_param_gridworld, Grid, DOWN,
    GRID_DISCOUNT, LEFT, RIGHT, UP,
};
pub use hypercube::{
    default_horizon, make_hash_family, make_prf_family, HypercubeEpisodeSpec, HypercubeSim,
    MAX_TABULAR_M,
};
pub use keyed::{KeyedFunction, KeyedPermutation, MAX_M};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZooError {
    #[error("word size m = {0} outside 1..=16")]
    MTooLarge(u32),
    #[error("action_bits = {action_bits} outside 1..={m}")]
    InvalidActionBits { m: u32, action_bits: u32 },
    #[error("horizon must be at least one step")]
    InvalidHorizon,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Exact table of one member.
pub fn to_tabular(family: &MdpFamily, theta: &Theta) -> Result<TabularMdp, FamilyError> {
    Ok(family.member(theta)?.mdp.as_ref().clone())
}

/// Environment selection as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Hash {
        m: u32,
        key: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Prf {
        m: u32,
        key: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action_bits: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    HiddenGridworld {
        width: usize,
        height: usize,
        start: [usize; 2],
        goal: [usize; 2],
    },
    GoalGridworld {
        width: usize,
        height: usize,
        start: [usize; 2],
        key: u64,
        #[serde(default = "observe_goal_default")]
        observe_goal: bool,
    },
}

fn observe_goal_default() -> bool {
    true
}

impl EnvSpec {
    pub fn build(&self) -> Result<MdpFamily, ZooError> {
        match *self {
            EnvSpec::Hash { m, key, horizon } => {
                make_hash_family(m, key, horizon.unwrap_or(default_horizon(m)))
            }
            EnvSpec::Prf {
                m,
                key,
                action_bits,
                horizon,
            } => make_prf_family(
                m,
                key,
                action_bits.unwrap_or(m),
                horizon.unwrap_or(default_horizon(m)),
            ),
            EnvSpec::HiddenGridworld {
                width,
                height,
                start,
                goal,
            } => {
                make_hidden_param_gridworld(width, height, (start[0], start[1]), (goal[0], goal[1]))
            }
            EnvSpec::GoalGridworld {
                width,
                height,
                start,
                key,
                observe_goal,
            } => make_goal_gridworld(width, height, (start[0], start[1]), key, observe_goal),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Hash { .. } => "hash",
            EnvSpec::Prf { .. } => "prf",
            EnvSpec::HiddenGridworld { .. } => "hidden_gridworld",
            EnvSpec::GoalGridworld { .. } => "goal_gridworld",
        }
    }

    /// `m` for hypercube families, `WxH` for grids.
    pub fn size_label(&self) -> String {
        match self {
            EnvSpec::Hash { m, .. } | EnvSpec::Prf { m, .. } => m.to_string(),
            EnvSpec::HiddenGridworld { width, height, .. }
            | EnvSpec::GoalGridworld { width, height, .. } => {
                format!("{width}x{height}")
            }
        }
    }

    /// Copy with a different word size; `None` for grids.
    pub fn with_m(&self, new_m: u32) -> Option<EnvSpec> {
        match self.clone() {
            EnvSpec::Hash { key, horizon, .. } => Some(EnvSpec::Hash {
                m: new_m,
                key,
                horizon,
            }),
            EnvSpec::Prf {
                key,
                action_bits,
                horizon,
                ..
            } => Some(EnvSpec::Prf {
                m: new_m,
                key,
                action_bits,
                horizon,
            }),
            _ => None,
        }
    }
}
