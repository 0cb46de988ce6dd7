//! Does one deterministic stationary policy achieve the optimal start value in
//! every member of a family?

mod search;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{EmpiricalSample, FamilyError, MdpFamily, Theta};
use crate::mdp::{
    optimal_action_sets, policy_evaluation, value_iteration, ActionSet, DeterministicPolicy,
    Horizon, MdpError, TabularMdp,
};

pub use search::DEFAULT_BUDGET;

/// Certificate document version.
pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

/// Absolute tie tolerance used when building optimal-action sets.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

// Value iteration here runs to rounding noise so that genuinely tied actions
// stay within the tie tolerance.
const CHECK_VI_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimalityError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("member {0} has a finite horizon; fold time into the state first")]
    FiniteHorizon(String),
    #[error("sample is empty")]
    EmptySample,
}

/// Optimal and achieved start values of one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub theta: Theta,
    pub optimal: f64,
    pub achieved: f64,
    /// `optimal - achieved`
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaActions {
    pub theta: Theta,
    pub actions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaPath {
    pub theta: Theta,
    /// States from a start state to the witness state.
    pub states: Vec<usize>,
}

/// A state reached under several members whose optimal action sets do not intersect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictWitness {
    pub state: usize,
    pub per_theta_argmax: Vec<ThetaActions>,
    pub reachability_evidence: Vec<ThetaPath>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    SharedOptimal {
        policy: DeterministicPolicy,
        per_theta_values: Vec<ThetaValue>,
    },
    Conflict {
        witness: ConflictWitness,
    },
    Unknown {
        budget_spent: u64,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::SharedOptimal { .. } => "SharedOptimal",
            Verdict::Conflict { .. } => "Conflict",
            Verdict::Unknown { .. } => "Unknown",
        }
    }
}

mod slack_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Value(f64),
        Any(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            Repr::Any("any".into()).serialize(s)
        } else {
            Repr::Value(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Value(v) => Ok(v),
            Repr::Any(s) if s == "any" => Ok(f64::INFINITY),
            Repr::Any(s) => Err(serde::de::Error::custom(format!("bad slack {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCertificate {
    pub schema_version: u32,
    #[serde(flatten)]
    pub verdict: Verdict,
    /// ε used for the start-value comparison; `"any"` in JSON when unbounded.
    #[serde(with = "slack_serde")]
    pub slack: f64,
    pub tie_tol: f64,
    pub nodes_expanded: u64,
    pub thetas: Vec<Theta>,
}

impl OptimalityCertificate {
    pub fn is_shared_optimal(&self) -> bool {
        matches!(self.verdict, Verdict::SharedOptimal { .. })
    }

    pub fn is_conflict(&self) -> bool {
        matches!(self.verdict, Verdict::Conflict { .. })
    }

    pub fn policy(&self) -> Option<&DeterministicPolicy> {
        match &self.verdict {
            Verdict::SharedOptimal { policy, .. } => Some(policy),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&ConflictWitness> {
        match &self.verdict {
            Verdict::Conflict { witness } => Some(witness),
            _ => None,
        }
    }
}

/// One member prepared for checking.
pub(crate) struct Member {
    pub theta: Theta,
    pub mdp: std::sync::Arc<TabularMdp>,
    pub argmax: Vec<ActionSet>,
    pub optimal: f64,
}

/// Default ε: `1e-8 · (1 + max |r| · effective horizon)`, maximized over members.
pub fn default_slack<'a>(mdps: impl IntoIterator<Item = &'a TabularMdp>) -> f64 {
    mdps.into_iter()
        .map(|m| 1e-8 * (1.0 + m.max_abs_reward() * m.effective_horizon()))
        .fold(1e-8, f64::max)
}

fn prepare(
    family: &MdpFamily,
    sample: &EmpiricalSample,
    tie_tol: f64,
    stationary_only: bool,
) -> Result<Vec<Member>, OptimalityError> {
    if sample.is_empty() {
        return Err(OptimalityError::EmptySample);
    }
    let built = family.check_shared(&sample.thetas)?;
    sample
        .thetas
        .par_iter()
        .zip(built.into_par_iter())
        .map(|(theta, member)| {
            if stationary_only && matches!(member.mdp.horizon(), Horizon::Finite(_)) {
                return Err(OptimalityError::FiniteHorizon(theta.to_string()));
            }
            let tables = value_iteration(&member.mdp, CHECK_VI_TOL)?;
            let argmax = optimal_action_sets(&tables, tie_tol);
            let optimal = tables.start_value(&member.mdp);
            Ok(Member {
                theta: theta.clone(),
                mdp: member.mdp,
                argmax,
                optimal,
            })
        })
        .collect()
}

fn values_of(
    policy: &DeterministicPolicy,
    members: &[Member],
) -> Result<Vec<ThetaValue>, OptimalityError> {
    members
        .par_iter()
        .map(|m| {
            let achieved = policy_evaluation(&m.mdp, policy)?.episode_reward;
            Ok(ThetaValue {
                theta: m.theta.clone(),
                optimal: m.optimal,
                achieved,
                deficit: m.optimal - achieved,
            })
        })
        .collect()
}

/// Outcome of [`verify_shared_optimal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub passed: bool,
    pub slack: f64,
    pub per_theta: Vec<ThetaValue>,
}

/// Checks `R_θ(π) ≥ V*_θ(start) − ε` for every θ in the sample. `None` uses the default ε.
pub fn verify_shared_optimal(
    policy: &DeterministicPolicy,
    family: &MdpFamily,
    sample: &EmpiricalSample,
    slack: Option<f64>,
) -> Result<Verification, OptimalityError> {
    let members = prepare(family, sample, DEFAULT_TIE_TOL, false)?;
    let slack = slack.unwrap_or_else(|| default_slack(members.iter().map(|m| m.mdp.as_ref())));
    let per_theta = values_of(policy, &members)?;
    let passed = per_theta.iter().all(|v| v.deficit <= slack);
    Ok(Verification {
        passed,
        slack,
        per_theta,
    })
}

fn certificate(
    verdict: Verdict,
    slack: f64,
    tie_tol: f64,
    nodes: u64,
    members: &[Member],
) -> OptimalityCertificate {
    OptimalityCertificate {
        schema_version: CERTIFICATE_SCHEMA_VERSION,
        verdict,
        slack,
        tie_tol,
        nodes_expanded: nodes,
        thetas: members.iter().map(|m| m.theta.clone()).collect(),
    }
}

/// Wraps a candidate policy into a certificate after checking every member's deficit.
fn settle(
    policy: DeterministicPolicy,
    members: &[Member],
    slack: f64,
    tie_tol: f64,
    nodes: u64,
) -> Result<OptimalityCertificate, OptimalityError> {
    let per_theta_values = values_of(&policy, members)?;
    let verdict = if per_theta_values.iter().all(|v| v.deficit <= slack) {
        Verdict::SharedOptimal {
            policy,
            per_theta_values,
        }
    } else {
        Verdict::Unknown {
            budget_spent: nodes,
        }
    };
    Ok(certificate(verdict, slack, tie_tol, nodes, members))
}

/// Sufficient test: intersects every member's optimal-action set at every state.
///
/// Returns `SharedOptimal` (lowest action of each intersection) when no
/// intersection is empty, and `Unknown` otherwise.
pub fn strong_check(
    family: &MdpFamily,
    sample: &EmpiricalSample,
    tie_tol: f64,
) -> Result<OptimalityCertificate, OptimalityError> {
    let members = prepare(family, sample, tie_tol, true)?;
    let slack = default_slack(members.iter().map(|m| m.mdp.as_ref()));
    let n = members[0].mdp.num_states();
    let na = members[0].mdp.num_actions();
    let mut actions = Vec::with_capacity(n);
    for s in 0..n {
        let mut common = ActionSet::full(na);
        for m in &members {
            common.intersect_with(&m.argmax[s]);
        }
        match common.first() {
            Some(a) => actions.push(a),
            None => {
                return Ok(certificate(
                    Verdict::Unknown { budget_spent: 0 },
                    slack,
                    tie_tol,
                    0,
                    &members,
                ))
            }
        }
    }
    settle(
        DeterministicPolicy::new(actions, na)?,
        &members,
        slack,
        tie_tol,
        0,
    )
}

/// Complete test by backtracking over deterministic stationary policies.
///
/// A policy is optimal for a member iff it picks an optimal action at every
/// state it reaches from that member's start support. The search assigns
/// actions to reached states, most constrained first, and gives up with
/// `Unknown` after `budget` node expansions. `slack = None` uses the default ε.
pub fn exact_check(
    family: &MdpFamily,
    sample: &EmpiricalSample,
    tie_tol: f64,
    slack: Option<f64>,
    budget: u64,
) -> Result<OptimalityCertificate, OptimalityError> {
    let members = prepare(family, sample, tie_tol, true)?;
    let slack = slack.unwrap_or_else(|| default_slack(members.iter().map(|m| m.mdp.as_ref())));
    let na = members[0].mdp.num_actions();
    match search::run(&members, budget) {
        search::Outcome::Found(actions, nodes) => settle(
            DeterministicPolicy::new(actions, na)?,
            &members,
            slack,
            tie_tol,
            nodes,
        ),
        search::Outcome::Exhausted(witness, nodes) => Ok(certificate(
            Verdict::Conflict { witness },
            slack,
            tie_tol,
            nodes,
            &members,
        )),
        search::Outcome::OverBudget(nodes) => Ok(certificate(
            Verdict::Unknown {
                budget_spent: nodes,
            },
            slack,
            tie_tol,
            nodes,
            &members,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::TabularMember;

    fn bandit(rewards: Vec<Vec<f64>>) -> (MdpFamily, EmpiricalSample) {
        let thetas: Vec<Theta> = (0..rewards.len() as u64).map(Theta::seed).collect();
        let members = rewards
            .into_iter()
            .zip(&thetas)
            .map(|(r, t)| {
                let mdp = TabularMdp::deterministic(
                    1,
                    2,
                    r,
                    vec![0, 0],
                    vec![1.0],
                    0.5,
                    Horizon::Unbounded,
                )
                .unwrap();
                (t.clone(), TabularMember::fully_observed(mdp))
            })
            .collect();
        let fam = MdpFamily::from_members("bandit", members).unwrap();
        (fam, EmpiricalSample::new(thetas, 0, "all"))
    }

    #[test]
    fn identical_members_share_policy() {
        let (fam, s) = bandit(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let c = strong_check(&fam, &s, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(c.policy().unwrap().actions(), &[1]);
        assert!(exact_check(&fam, &s, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET)
            .unwrap()
            .is_shared_optimal());
    }

    #[test]
    fn disjoint_argmax_conflicts_at_state_zero() {
        let (fam, s) = bandit(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let strong = strong_check(&fam, &s, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(strong.verdict, Verdict::Unknown { budget_spent: 0 });
        let exact = exact_check(&fam, &s, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET).unwrap();
        let w = exact.witness().unwrap();
        assert_eq!(w.state, 0);
        assert_eq!(w.per_theta_argmax.len(), 2);
        assert_eq!(w.reachability_evidence[0].states, vec![0]);
    }

    #[test]
    fn infinite_slack_always_verifies() {
        let (fam, s) = bandit(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = DeterministicPolicy::constant(1, 2, 0).unwrap();
        let v = verify_shared_optimal(&p, &fam, &s, Some(f64::INFINITY)).unwrap();
        assert!(v.passed);
        assert!(!verify_shared_optimal(&p, &fam, &s, None).unwrap().passed);
    }

    #[test]
    fn unreachable_conflict_is_harmless() {
        // State 2 is never reached; members disagree only there.
        let build = |r2: Vec<f64>| {
            let mut r = vec![1.0, 0.0, 0.0, 0.0];
            r.extend(r2);
            TabularMdp::deterministic(
                3,
                2,
                r,
                vec![1, 1, 1, 1, 2, 2],
                vec![1.0, 0.0, 0.0],
                0.9,
                Horizon::Unbounded,
            )
            .unwrap()
        };
        let members = vec![
            (
                Theta::seed(0),
                TabularMember::fully_observed(build(vec![1.0, 0.0])),
            ),
            (
                Theta::seed(1),
                TabularMember::fully_observed(build(vec![0.0, 1.0])),
            ),
        ];
        let fam = MdpFamily::from_members("hidden", members).unwrap();
        let s = EmpiricalSample::new(vec![Theta::seed(0), Theta::seed(1)], 0, "all");
        assert!(!strong_check(&fam, &s, DEFAULT_TIE_TOL)
            .unwrap()
            .is_shared_optimal());
        let c = exact_check(&fam, &s, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET).unwrap();
        assert!(c.is_shared_optimal());
        assert_eq!(c.policy().unwrap().action(0), 0);
    }

    #[test]
    fn finite_horizon_members_rejected() {
        let mdp =
            TabularMdp::deterministic(1, 1, vec![1.0], vec![0], vec![1.0], 1.0, Horizon::Finite(2))
                .unwrap();
        let fam = MdpFamily::from_members(
            "f",
            vec![(Theta::seed(0), TabularMember::fully_observed(mdp))],
        )
        .unwrap();
        let s = EmpiricalSample::new(vec![Theta::seed(0)], 0, "all");
        assert!(matches!(
            exact_check(&fam, &s, DEFAULT_TIE_TOL, None, 10),
            Err(OptimalityError::FiniteHorizon(_))
        ));
    }

    #[test]
    fn certificate_json_round_trip() {
        let (fam, s) = bandit(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut c = exact_check(&fam, &s, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET).unwrap();
        c.slack = f64::INFINITY;
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains(r#""verdict":"conflict""#));
        assert!(text.contains(r#""slack":"any""#));
        assert_eq!(
            serde_json::from_str::<OptimalityCertificate>(&text).unwrap(),
            c
        );
    }
}
