//! Workbench for building θ-parametrized MDP families and checking whether they
//! make sensible generalization benchmarks.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: finite MDPs, value iteration, policy evaluation, exact policy gradients.
//! - [`family`]: parameter spaces, train/eval splits, empirical and population
//!   objectives, seed unwrapping.
//! - [`optimality`]: decides whether one policy is optimal for every member of a family.
//! - [`wrappers`]: θ-augmentation, history windows, observation obfuscation, time folding.
//! - [`zoo`]: bundled families (hash observations, pseudorandom dynamics, gridworlds).
//! - [`agents`]: learners and baselines plus the gradient cosine similarity diagnostic.
//! - [`bench`]: config-driven runs that emit certificates, CSV rows and sweep summaries.
//! - [`oracle`]: brute-force reference computations used by tests and golden files.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod agents;
pub mod bench;
pub mod family;
pub mod mdp;
pub mod optimality;
pub mod oracle;
pub mod rng;
pub mod wrappers;
pub mod zoo;

pub use family::{EmpiricalSample, GapReport, MdpFamily, ParamSpace, Theta};
pub use mdp::{
    exact_policy_gradient, optimal_action_sets, policy_evaluation, value_iteration,
    DeterministicPolicy, Horizon, MdpError, SoftmaxPolicy, TabularMdp, ValueTables,
};
pub use optimality::{exact_check, strong_check, verify_shared_optimal, OptimalityCertificate};
