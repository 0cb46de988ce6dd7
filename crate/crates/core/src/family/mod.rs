//! θ-parametrized MDP families, train/eval splits, and the empirical and
//! population objectives built on them.

mod objective;
mod sim;
mod unwrap;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{MdpError, TabularMdp};
use crate::rng;

pub use objective::{
    empirical_reward, gap_report, member_rewards, Estimate, EvalOptions, EvalPolicy, GapReport,
    ObservationPolicy, StationaryActor,
};
pub use sim::{
    inverse_cdf, replay, run_episode, step_limit, Actor, EpisodeRecord, Observation, Simulator,
    StepOutcome, TabularSimulator,
};
pub use unwrap::{unwrap_seeds, UnwrapDepth};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("requested {requested} parameters but the space only has {available}")]
    NotEnoughParams { requested: usize, available: usize },
    #[error("duplicate θ record {0}")]
    DuplicateTheta(String),
    #[error("members do not share state/action spaces: {0}")]
    SpacesNotShared(String),
    #[error("member is not tabularizable: {0}")]
    NotTabularizable(String),
    #[error("θ record not understood by this family: {0}")]
    InvalidTheta(String),
    #[error("policy is incompatible with a member: {0}")]
    IncompatiblePolicy(String),
    #[error("evaluation sample is empty")]
    EmptyEval,
    #[error("sample is empty")]
    EmptySample,
    #[error("noise-stream unwrapping needs a finite horizon matching the requested depth")]
    UnboundedHorizonNoiseStream,
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// A structured θ field.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaField {
    Flag(bool),
    Int(i64),
    Label(String),
}

/// One parameter record: a 64-bit seed plus optional named fields (goal cell,
/// mirrored dynamics, …).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Theta {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, ThetaField>,
}

impl Theta {
    pub fn seed(seed: u64) -> Self {
        Self {
            seed,
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: ThetaField) -> Self {
        self.fields.insert(name.to_string(), value);
        self
    }

    pub fn int(&self, name: &str) -> Option<i64> {
        match self.fields.get(name) {
            Some(ThetaField::Int(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        match self.fields.get(name) {
            Some(ThetaField::Flag(v)) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed={}", self.seed)?;
        for (k, v) in &self.fields {
            match v {
                ThetaField::Flag(b) => write!(f, " {k}={b}")?,
                ThetaField::Int(i) => write!(f, " {k}={i}")?,
                ThetaField::Label(s) => write!(f, " {k}={s}")?,
            }
        }
        Ok(())
    }
}

/// A named field drawn uniformly from a list of choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldChoice {
    pub name: String,
    pub choices: Vec<ThetaField>,
}

/// How generative θs are drawn: a fresh 64-bit seed plus each listed field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default)]
    pub fields: Vec<FieldChoice>,
}

/// The parameter distribution Θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ParamSpace {
    /// Uniform over an explicit list of distinct records.
    Finite { thetas: Vec<Theta> },
    /// Unbounded stream of records, deterministic given `master_seed`.
    Generative {
        master_seed: u64,
        sampler: SamplerSpec,
    },
}

impl ParamSpace {
    pub fn finite(thetas: Vec<Theta>) -> Result<Self, FamilyError> {
        let mut seen = HashSet::new();
        for t in &thetas {
            if !seen.insert(t) {
                return Err(FamilyError::DuplicateTheta(t.to_string()));
            }
        }
        Ok(ParamSpace::Finite { thetas })
    }

    pub fn generative(master_seed: u64, sampler: SamplerSpec) -> Self {
        ParamSpace::Generative {
            master_seed,
            sampler,
        }
    }

    /// Seed-only generative space.
    pub fn seeds(master_seed: u64) -> Self {
        Self::generative(master_seed, SamplerSpec::default())
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self {
            ParamSpace::Finite { thetas } => Some(thetas.len()),
            ParamSpace::Generative { .. } => None,
        }
    }

    /// Every record of a finite space.
    pub fn all(&self) -> Option<&[Theta]> {
        match self {
            ParamSpace::Finite { thetas } => Some(thetas),
            ParamSpace::Generative { .. } => None,
        }
    }

    fn draw(
        master_seed: u64,
        sampler: &SamplerSpec,
        split_seed: u64,
        label: &str,
        i: u64,
    ) -> Theta {
        let mut r = rng::stream(rng::derive_seed(master_seed, label, split_seed), "theta", i);
        let mut theta = Theta::seed(r.next_u64());
        for field in &sampler.fields {
            if !field.choices.is_empty() {
                let pick = (r.next_u64() % field.choices.len() as u64) as usize;
                theta
                    .fields
                    .insert(field.name.clone(), field.choices[pick].clone());
            }
        }
        theta
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub split: String,
}

/// An ordered empirical sample Θ̂ of θ records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    pub thetas: Vec<Theta>,
    pub provenance: Provenance,
}

impl EmpiricalSample {
    pub fn new(thetas: Vec<Theta>, master_seed: u64, split: &str) -> Self {
        Self {
            thetas,
            provenance: Provenance {
                master_seed,
                split: split.to_string(),
            },
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Concatenation of two samples (used for θ-augmentation over train ∪ eval).
    pub fn concat(&self, other: &EmpiricalSample) -> EmpiricalSample {
        let mut thetas = self.thetas.clone();
        thetas.extend(other.thetas.iter().cloned());
        EmpiricalSample::new(
            thetas,
            self.provenance.master_seed,
            &format!("{}+{}", self.provenance.split, other.provenance.split),
        )
    }
}

/// Draws disjoint train and eval samples.
///
/// Finite spaces sample without replacement; generative spaces draw each split
/// from its own seed stream.
pub fn sample_split(
    space: &ParamSpace,
    n_train: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(EmpiricalSample, EmpiricalSample), FamilyError> {
    match space {
        ParamSpace::Finite { thetas } => {
            let requested = n_train + n_eval;
            if requested > thetas.len() {
                return Err(FamilyError::NotEnoughParams {
                    requested,
                    available: thetas.len(),
                });
            }
            let mut r = rng::stream(seed, "split", 0);
            let picks = index::sample(&mut r, thetas.len(), requested).into_vec();
            let pick = |ix: &[usize]| ix.iter().map(|&i| thetas[i].clone()).collect::<Vec<_>>();
            Ok((
                EmpiricalSample::new(pick(&picks[..n_train]), seed, "train"),
                EmpiricalSample::new(pick(&picks[n_train..]), seed, "eval"),
            ))
        }
        ParamSpace::Generative {
            master_seed,
            sampler,
        } => {
            let draw = |label: &str, n: usize| {
                (0..n as u64)
                    .map(|i| ParamSpace::draw(*master_seed, sampler, seed, label, i))
                    .collect::<Vec<_>>()
            };
            Ok((
                EmpiricalSample::new(draw("train", n_train), seed, "train"),
                EmpiricalSample::new(draw("eval", n_eval), seed, "eval"),
            ))
        }
    }
}

/// A tabular member together with what the agent observes in each state.
#[derive(Debug, Clone)]
pub struct TabularMember {
    pub mdp: Arc<TabularMdp>,
    pub observations: Arc<Vec<Observation>>,
}

impl TabularMember {
    /// Observation of state `s` is `s` itself.
    pub fn fully_observed(mdp: TabularMdp) -> Self {
        let observations = (0..mdp.num_states()).map(Observation::state).collect();
        Self {
            mdp: Arc::new(mdp),
            observations: Arc::new(observations),
        }
    }

    pub fn simulator(&self) -> TabularSimulator {
        TabularSimulator::new(self.mdp.clone(), self.observations.clone())
    }
}

/// Builds members from θ records.
pub trait FamilyBuilder: Send + Sync {
    /// Exact table for θ; `NotTabularizable` when over the size cap.
    fn tabular(&self, theta: &Theta) -> Result<TabularMember, FamilyError>;

    /// Episodic step function for θ. Defaults to simulating the tabular member.
    fn simulator(&self, theta: &Theta) -> Result<Arc<dyn Simulator>, FamilyError> {
        Ok(Arc::new(self.tabular(theta)?.simulator()))
    }
}

/// Builder from a closure.
pub struct FnBuilder<F>(pub F);

impl<F> FamilyBuilder for FnBuilder<F>
where
    F: Fn(&Theta) -> Result<TabularMember, FamilyError> + Send + Sync,
{
    fn tabular(&self, theta: &Theta) -> Result<TabularMember, FamilyError> {
        (self.0)(theta)
    }
}

/// Builder over a precomputed table of members.
pub struct FixedMembers(pub HashMap<Theta, TabularMember>);

impl FamilyBuilder for FixedMembers {
    fn tabular(&self, theta: &Theta) -> Result<TabularMember, FamilyError> {
        self.0
            .get(theta)
            .cloned()
            .ok_or_else(|| FamilyError::InvalidTheta(format!("{theta} is not a member")))
    }
}

/// Which kind of environment a family wraps; agents use it to reject families
/// they cannot act in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Fully specified tabular members; observations index states.
    Tabular,
    /// Hypercube states seen through a keyed bijection; goal channel present.
    HashObservation { m: u32 },
    /// Hypercube states with keyed pseudorandom dynamics; goal channel present.
    PseudorandomDynamics { m: u32, action_bits: u32 },
}

/// `{ M_θ : θ ∈ Θ }`.
#[derive(Clone)]
pub struct MdpFamily {
    name: String,
    params: ParamSpace,
    builder: Arc<dyn FamilyBuilder>,
    shared_spaces: bool,
    kind: FamilyKind,
    num_actions: usize,
    deterministic: bool,
}

impl fmt::Debug for MdpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MdpFamily")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("shared_spaces", &self.shared_spaces)
            .field("kind", &self.kind)
            .finish()
    }
}

impl MdpFamily {
    /// Creates a family. With `shared_spaces` set, finite spaces are checked eagerly.
    pub fn new(
        name: impl Into<String>,
        params: ParamSpace,
        builder: Arc<dyn FamilyBuilder>,
        num_actions: usize,
        shared_spaces: bool,
    ) -> Result<Self, FamilyError> {
        let family = Self {
            name: name.into(),
            params,
            builder,
            shared_spaces,
            kind: FamilyKind::Tabular,
            num_actions,
            deterministic: false,
        };
        if shared_spaces {
            if let Some(all) = family.params.all() {
                family.check_shared(all)?;
            }
        }
        Ok(family)
    }

    /// Finite tabular family from a closure.
    pub fn from_fn<F>(
        name: impl Into<String>,
        thetas: Vec<Theta>,
        num_actions: usize,
        build: F,
    ) -> Result<Self, FamilyError>
    where
        F: Fn(&Theta) -> Result<TabularMember, FamilyError> + Send + Sync + 'static,
    {
        Self::new(
            name,
            ParamSpace::finite(thetas)?,
            Arc::new(FnBuilder(build)),
            num_actions,
            true,
        )
    }

    /// Finite family over precomputed members, in the given θ order.
    pub fn from_members(
        name: impl Into<String>,
        members: Vec<(Theta, TabularMember)>,
    ) -> Result<Self, FamilyError> {
        let num_actions = members.first().map_or(1, |(_, m)| m.mdp.num_actions());
        let thetas: Vec<Theta> = members.iter().map(|(t, _)| t.clone()).collect();
        let params = ParamSpace::finite(thetas)?;
        let deterministic = members
            .iter()
            .all(|(_, m)| m.mdp.is_deterministic() && m.mdp.start_support().len() == 1);
        let table: HashMap<Theta, TabularMember> = members.into_iter().collect();
        Ok(Self::new(
            name,
            params,
            Arc::new(FixedMembers(table)),
            num_actions,
            true,
        )?
        .with_deterministic(deterministic))
    }

    pub fn with_kind(mut self, kind: FamilyKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_deterministic(mut self, deterministic: bool) -> Self {
        self.deterministic = deterministic;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &ParamSpace {
        &self.params
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Every member has deterministic dynamics and a Dirac start.
    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn shared_spaces(&self) -> bool {
        self.shared_spaces
    }

    pub fn member(&self, theta: &Theta) -> Result<TabularMember, FamilyError> {
        self.builder.tabular(theta)
    }

    pub fn simulator(&self, theta: &Theta) -> Result<Arc<dyn Simulator>, FamilyError> {
        self.builder.simulator(theta)
    }

    /// Builds the members for `thetas` and checks that they share `(|S|, |A|)`.
    pub fn check_shared(&self, thetas: &[Theta]) -> Result<Vec<TabularMember>, FamilyError> {
        let members = thetas
            .iter()
            .map(|t| self.member(t))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = members.first() {
            let dims = (first.mdp.num_states(), first.mdp.num_actions());
            for (t, m) in thetas.iter().zip(&members) {
                let other = (m.mdp.num_states(), m.mdp.num_actions());
                if other != dims {
                    return Err(FamilyError::SpacesNotShared(format!(
                        "member {t} is {}x{}, expected {}x{}",
                        other.0, other.1, dims.0, dims.1
                    )));
                }
            }
        }
        Ok(members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Horizon;

    fn ten() -> ParamSpace {
        ParamSpace::finite((0..10).map(Theta::seed).collect()).unwrap()
    }

    #[test]
    fn finite_split_is_deterministic_and_disjoint() {
        let (a, b) = sample_split(&ten(), 4, 4, 7).unwrap();
        let (c, d) = sample_split(&ten(), 4, 4, 7).unwrap();
        assert_eq!((&a, &b), (&c, &d));
        assert_eq!(a.len(), 4);
        assert!(a.thetas.iter().all(|t| !b.thetas.contains(t)));
    }

    #[test]
    fn finite_split_cardinality() {
        let err = sample_split(&ten(), 10, 1, 7).unwrap_err();
        assert_eq!(
            err,
            FamilyError::NotEnoughParams {
                requested: 11,
                available: 10
            }
        );
    }

    #[test]
    fn duplicate_thetas_rejected() {
        assert!(ParamSpace::finite(vec![Theta::seed(1), Theta::seed(1)]).is_err());
    }

    #[test]
    fn generative_split_streams_differ() {
        let space = ParamSpace::generative(
            3,
            SamplerSpec {
                fields: vec![FieldChoice {
                    name: "goal".into(),
                    choices: vec![ThetaField::Int(1), ThetaField::Int(2)],
                }],
            },
        );
        let (train, eval) = sample_split(&space, 5, 5, 11).unwrap();
        assert_ne!(train.thetas, eval.thetas);
        assert!(train.thetas.iter().all(|t| t.int("goal").is_some()));
        assert_eq!(sample_split(&space, 5, 5, 11).unwrap().0, train);
    }

    #[test]
    fn shared_space_violation_detected() {
        let build = |t: &Theta| {
            let n = 1 + t.seed as usize;
            let mdp = TabularMdp::deterministic(
                n,
                1,
                vec![0.0; n],
                (0..n).collect(),
                {
                    let mut s = vec![0.0; n];
                    s[0] = 1.0;
                    s
                },
                0.5,
                Horizon::Unbounded,
            )?;
            Ok(TabularMember::fully_observed(mdp))
        };
        let err = MdpFamily::from_fn("mixed", vec![Theta::seed(0), Theta::seed(1)], 1, build)
            .unwrap_err();
        assert!(matches!(err, FamilyError::SpacesNotShared(_)));
    }

    #[test]
    fn theta_json_shape() {
        let t = Theta::seed(5)
            .with("goal", ThetaField::Int(3))
            .with("mirrored", ThetaField::Flag(true));
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(text, r#"{"seed":5,"fields":{"goal":3,"mirrored":true}}"#);
        assert_eq!(serde_json::from_str::<Theta>(&text).unwrap(), t);
    }
}
