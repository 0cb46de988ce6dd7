use std::sync::Arc;

use rand::{Rng, RngCore};

use super::keyed::{check_m, KeyedFunction, KeyedPermutation};
use super::ZooError;
use crate::family::{
    FamilyBuilder, FamilyError, FamilyKind, MdpFamily, Observation, ParamSpace, Simulator,
    StepOutcome, TabularMember, Theta,
};
use crate::mdp::{Horizon, TabularMdp};
use crate::rng;

/// Largest m for which members are tabularized.
pub const MAX_TABULAR_M: u32 = 10;

/// Per-θ start state, goal and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypercubeEpisodeSpec {
    pub start: usize,
    pub goal: usize,
    pub horizon: usize,
}

impl HypercubeEpisodeSpec {
    /// Start and goal drawn uniformly from the m-bit hypercube by the θ seed.
    pub fn for_theta(theta: &Theta, m: u32, horizon: usize) -> Self {
        let mut r = rng::stream(theta.seed, "hypercube-episode", u64::from(m));
        let size = 1usize << m;
        Self {
            start: r.gen_range(0..size),
            goal: r.gen_range(0..size),
            horizon,
        }
    }
}

#[derive(Debug, Clone)]
enum Dynamics {
    /// Observation `w(s)`, transition `w⁻¹(w(s) ⊕ a)`.
    Hash(Arc<KeyedPermutation>),
    /// Observation `s`, transition `f(s, a)`.
    Prf(Arc<KeyedFunction>),
}

impl Dynamics {
    #[inline]
    fn next(&self, s: usize, a: usize) -> usize {
        match self {
            Dynamics::Hash(w) => w.invert(w.apply(s) ^ a),
            Dynamics::Prf(f) => f.get(s, a),
        }
    }

    #[inline]
    fn observe(&self, s: usize) -> usize {
        match self {
            Dynamics::Hash(w) => w.apply(s),
            Dynamics::Prf(_) => s,
        }
    }
}

/// One hypercube member as an episodic simulator. The caller-owned state is the
/// underlying word; reaching the goal pays 1 and ends the episode.
#[derive(Debug, Clone)]
pub struct HypercubeSim {
    dynamics: Dynamics,
    spec: HypercubeEpisodeSpec,
    num_actions: usize,
}

impl HypercubeSim {
    pub fn spec(&self) -> HypercubeEpisodeSpec {
        self.spec
    }
}

impl Simulator for HypercubeSim {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn horizon(&self) -> Horizon {
        Horizon::Finite(self.spec.horizon)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn reset(&self, _rng: &mut dyn RngCore) -> (u64, Observation) {
        let s = self.spec.start;
        (
            s as u64,
            Observation::with_goal(self.dynamics.observe(s) as u64, self.spec.goal as u64),
        )
    }

    fn step(&self, state: u64, action: usize, _rng: &mut dyn RngCore) -> StepOutcome {
        let next = self.dynamics.next(state as usize, action);
        let hit = next == self.spec.goal;
        StepOutcome {
            state: next as u64,
            observation: Observation::with_goal(
                self.dynamics.observe(next) as u64,
                self.spec.goal as u64,
            ),
            reward: if hit { 1.0 } else { 0.0 },
            done: hit,
        }
    }
}

struct HypercubeBuilder {
    m: u32,
    num_actions: usize,
    horizon: usize,
    dynamics: Dynamics,
}

impl HypercubeBuilder {
    fn sim(&self, theta: &Theta) -> HypercubeSim {
        HypercubeSim {
            dynamics: self.dynamics.clone(),
            spec: HypercubeEpisodeSpec::for_theta(theta, self.m, self.horizon),
            num_actions: self.num_actions,
        }
    }
}

impl FamilyBuilder for HypercubeBuilder {
    /// States are the `2^m` words plus a terminal (index `2^m`); the step that
    /// would enter the goal pays 1 and moves to the terminal instead.
    fn tabular(&self, theta: &Theta) -> Result<TabularMember, FamilyError> {
        if self.m > MAX_TABULAR_M {
            return Err(FamilyError::NotTabularizable(format!(
                "m = {} exceeds the tabularization cap {MAX_TABULAR_M}",
                self.m
            )));
        }
        let spec = HypercubeEpisodeSpec::for_theta(theta, self.m, self.horizon);
        let size = 1usize << self.m;
        let na = self.num_actions;
        let terminal = size;
        let mut reward = vec![0.0; (size + 1) * na];
        let mut next = vec![terminal; (size + 1) * na];
        for s in 0..size {
            for a in 0..na {
                let t = self.dynamics.next(s, a);
                if t == spec.goal {
                    reward[s * na + a] = 1.0;
                } else {
                    next[s * na + a] = t;
                }
            }
        }
        let mut start = vec![0.0; size + 1];
        start[spec.start] = 1.0;
        let mdp = TabularMdp::deterministic(
            size + 1,
            na,
            reward,
            next,
            start,
            1.0,
            Horizon::Finite(self.horizon),
        )?;
        let goal = spec.goal as u64;
        let observations = (0..=size)
            .map(|s| {
                let obs = if s == terminal {
                    size
                } else {
                    self.dynamics.observe(s)
                };
                Observation::with_goal(obs as u64, goal)
            })
            .collect();
        Ok(TabularMember {
            mdp: Arc::new(mdp),
            observations: Arc::new(observations),
        })
    }

    fn simulator(&self, theta: &Theta) -> Result<Arc<dyn Simulator>, FamilyError> {
        Ok(Arc::new(self.sim(theta)))
    }
}

/// Default horizon `m²`.
pub fn default_horizon(m: u32) -> usize {
    (m * m) as usize
}

fn family(
    name: String,
    m: u32,
    master_key: u64,
    num_actions: usize,
    horizon: usize,
    dynamics: Dynamics,
    kind: FamilyKind,
) -> Result<MdpFamily, ZooError> {
    if horizon == 0 {
        return Err(ZooError::InvalidHorizon);
    }
    let builder = HypercubeBuilder {
        m,
        num_actions,
        horizon,
        dynamics,
    };
    let fam = MdpFamily::new(
        name,
        ParamSpace::seeds(master_key),
        Arc::new(builder),
        num_actions,
        true,
    )?;
    Ok(fam.with_kind(kind).with_deterministic(true))
}

/// Hash-observation family: the agent sees `w(s)` and the goal, acts with an
/// m-bit word, and the observation evolves as `o ⊕ a`. `w` is keyed by `master_key`
/// and shared by every member; θ picks the start and goal.
pub fn make_hash_family(m: u32, master_key: u64, horizon: usize) -> Result<MdpFamily, ZooError> {
    check_m(m)?;
    let w = Arc::new(KeyedPermutation::new(
        rng::derive_seed(master_key, "hash-w", 0),
        m,
    )?);
    family(
        format!("hash-m{m}"),
        m,
        master_key,
        1 << m,
        horizon,
        Dynamics::Hash(w),
        FamilyKind::HashObservation { m },
    )
}

/// Pseudorandom-dynamics family: `s' = f(s, a)` for a keyed function `f` shared by
/// every member; states are observed directly along with the goal.
pub fn make_prf_family(
    m: u32,
    master_key: u64,
    action_bits: u32,
    horizon: usize,
) -> Result<MdpFamily, ZooError> {
    check_m(m)?;
    let f = Arc::new(KeyedFunction::new(
        rng::derive_seed(master_key, "prf-f", 0),
        m,
        action_bits,
    )?);
    family(
        format!("prf-m{m}-a{action_bits}"),
        m,
        master_key,
        1 << action_bits,
        horizon,
        Dynamics::Prf(f),
        FamilyKind::PseudorandomDynamics { m, action_bits },
    )
}
