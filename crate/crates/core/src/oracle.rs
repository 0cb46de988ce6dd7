//! Brute-force reference computations.
//!
//! Nothing here calls the solvers in [`crate::mdp`]; values are recomputed from
//! the raw tables by enumeration, dense linear solves, backward recursion,
//! rollouts or level-set search so that tests compare two independent paths.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::family::Estimate;
use crate::mdp::{DeterministicPolicy, Horizon, MdpError, TabularMdp};
use crate::rng;

/// Shape of randomly generated instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMdpSpec {
    pub max_states: usize,
    pub max_actions: usize,
    pub discount: f64,
    pub horizon: Horizon,
    /// Start spread over several states instead of one.
    pub stochastic_start: bool,
    /// One successor per (s, a).
    pub deterministic: bool,
}

impl Default for RandomMdpSpec {
    fn default() -> Self {
        Self {
            max_states: 6,
            max_actions: 3,
            discount: 0.9,
            horizon: Horizon::Unbounded,
            stochastic_start: false,
            deterministic: false,
        }
    }
}

/// Random MDP with sparse random rows and rewards in `[-1, 1]`.
pub fn random_mdp(rng: &mut impl Rng, spec: &RandomMdpSpec) -> Result<TabularMdp, MdpError> {
    let ns = rng.gen_range(1..=spec.max_states);
    let na = rng.gen_range(1..=spec.max_actions);
    let mut reward = Vec::with_capacity(ns * na);
    let mut rows = Vec::with_capacity(ns * na);
    for _ in 0..ns * na {
        reward.push(rng.gen_range(-1.0..=1.0));
        if spec.deterministic {
            rows.push(vec![(rng.gen_range(0..ns), 1.0)]);
        } else {
            rows.push(random_distribution(rng, ns));
        }
    }
    let mut start = vec![0.0; ns];
    if spec.stochastic_start && ns > 1 {
        for (s, p) in random_distribution(rng, ns) {
            start[s] = p;
        }
    } else {
        start[rng.gen_range(0..ns)] = 1.0;
    }
    TabularMdp::new(ns, na, reward, rows, start, spec.discount, spec.horizon)
}

// A distribution over a random nonempty subset of 0..n.
fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<(usize, f64)> {
    let k = rng.gen_range(1..=n);
    let support = rand::seq::index::sample(rng, n, k).into_vec();
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    support
        .into_iter()
        .zip(weights)
        .map(|(s, w)| (s, w / total))
        .collect()
}

/// Start value of the stationary policy with table `probs[s * A + a]`.
///
/// Discounted unbounded problems use a dense LU solve of `(I − γP_π) v = r_π`;
/// γ = 1 problems iterate `|S| + 1` times (their chains are acyclic); finite
/// horizons use backward recursion.
pub fn evaluate_table(mdp: &TabularMdp, probs: &[f64]) -> f64 {
    let v = match mdp.horizon() {
        Horizon::Finite(h) => {
            let mut v = vec![0.0; mdp.num_states()];
            for _ in 0..h {
                v = backup(mdp, probs, &v);
            }
            v
        }
        Horizon::Unbounded if mdp.discount() < 1.0 => dense_solve(mdp, probs),
        Horizon::Unbounded => {
            let mut v = vec![0.0; mdp.num_states()];
            for _ in 0..=mdp.num_states() {
                v = backup(mdp, probs, &v);
            }
            v
        }
    };
    mdp.start_dist().iter().zip(&v).map(|(p, x)| p * x).sum()
}

fn backup(mdp: &TabularMdp, probs: &[f64], v: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    (0..mdp.num_states())
        .map(|s| {
            (0..na)
                .map(|a| {
                    let p = probs[s * na + a];
                    if p == 0.0 {
                        return 0.0;
                    }
                    let ev: f64 = mdp.row(s, a).iter().map(|&(t, q)| q * v[t]).sum();
                    p * (mdp.reward(s, a) + mdp.discount() * ev)
                })
                .sum()
        })
        .collect()
}

fn dense_solve(mdp: &TabularMdp, probs: &[f64]) -> Vec<f64> {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        for a in 0..na {
            let p = probs[s * na + a];
            r[s] += p * mdp.reward(s, a);
            for &(t, q) in mdp.row(s, a) {
                m[(s, t)] -= mdp.discount() * p * q;
            }
        }
    }
    m.lu()
        .solve(&r)
        .expect("I - γP is nonsingular for γ < 1")
        .iter()
        .copied()
        .collect()
}

fn deterministic_table(actions: &[usize], na: usize) -> Vec<f64> {
    let mut probs = vec![0.0; actions.len() * na];
    for (s, &a) in actions.iter().enumerate() {
        probs[s * na + a] = 1.0;
    }
    probs
}

/// Best start value over all `A^S` deterministic stationary policies, with the
/// first maximizer in lexicographic order.
pub fn enumerate_optimal(mdp: &TabularMdp) -> (f64, DeterministicPolicy) {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let mut actions = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, actions.clone());
    loop {
        let v = evaluate_table(mdp, &deterministic_table(&actions, na));
        if v > best.0 {
            best = (v, actions.clone());
        }
        // Odometer increment; the last state varies fastest.
        let mut i = n;
        loop {
            if i == 0 {
                return (
                    best.0,
                    DeterministicPolicy::new(best.1, na).expect("actions in range"),
                );
            }
            i -= 1;
            actions[i] += 1;
            if actions[i] < na {
                break;
            }
            actions[i] = 0;
        }
    }
}

/// Optimal values with `k` steps to go, `k = 0..=h`, for a finite-horizon MDP.
pub fn backward_induction(mdp: &TabularMdp) -> Option<Vec<Vec<f64>>> {
    let Horizon::Finite(h) = mdp.horizon() else {
        return None;
    };
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let mut values = vec![vec![0.0; n]];
    for k in 1..=h {
        let prev = &values[k - 1];
        let next = (0..n)
            .map(|s| {
                (0..na)
                    .map(|a| {
                        let ev: f64 = mdp.row(s, a).iter().map(|&(t, q)| q * prev[t]).sum();
                        mdp.reward(s, a) + mdp.discount() * ev
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        values.push(next);
    }
    Some(values)
}

/// Monte-Carlo estimate of the start value under `probs`, one stream per episode.
pub fn rollout_value(
    mdp: &TabularMdp,
    probs: &[f64],
    episodes: usize,
    seed: u64,
    max_steps: usize,
) -> Estimate {
    let na = mdp.num_actions();
    let steps = match mdp.horizon() {
        Horizon::Finite(h) => h,
        Horizon::Unbounded => max_steps,
    };
    let draw = |r: &mut rand_chacha::ChaCha8Rng, items: &mut dyn Iterator<Item = (usize, f64)>| {
        let u: f64 = r.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, p) in items {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    };
    let returns: Vec<f64> = (0..episodes as u64)
        .map(|e| {
            let mut r = rng::stream(seed, "oracle-rollout", e);
            let mut s = draw(&mut r, &mut mdp.start_dist().iter().copied().enumerate());
            let (mut g, mut disc) = (0.0, 1.0);
            for _ in 0..steps {
                let a = draw(
                    &mut r,
                    &mut probs[s * na..(s + 1) * na].iter().copied().enumerate(),
                );
                g += disc * mdp.reward(s, a);
                disc *= mdp.discount();
                s = draw(&mut r, &mut mdp.row(s, a).iter().copied());
            }
            g
        })
        .collect();
    Estimate::from_values(&returns)
}

fn softmax_table(logits: &[f64], na: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(na) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = e.iter().sum();
        out.extend(e.into_iter().map(|x| x / z));
    }
    out
}

/// Central finite differences of the start value with respect to softmax logits.
pub fn finite_difference_gradient(mdp: &TabularMdp, logits: &[f64], step: f64) -> Vec<f64> {
    let na = mdp.num_actions();
    let mut theta = logits.to_vec();
    (0..logits.len())
        .map(|i| {
            theta[i] = logits[i] + step;
            let up = evaluate_table(mdp, &softmax_table(&theta, na));
            theta[i] = logits[i] - step;
            let down = evaluate_table(mdp, &softmax_table(&theta, na));
            theta[i] = logits[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Whether `goal` is entered within `horizon` steps from `s0` under deterministic
/// `next`. With `nonempty`, standing on the goal at time 0 does not count.
pub fn reachable_within(
    next: impl Fn(usize, usize) -> usize,
    num_states: usize,
    num_actions: usize,
    s0: usize,
    goal: usize,
    horizon: usize,
    nonempty: bool,
) -> bool {
    if !nonempty && s0 == goal {
        return true;
    }
    let mut frontier = vec![false; num_states];
    frontier[s0] = true;
    for _ in 0..horizon {
        let mut level = vec![false; num_states];
        for s in (0..num_states).filter(|&s| frontier[s]) {
            for a in 0..num_actions {
                level[next(s, a)] = true;
            }
        }
        if level[goal] {
            return true;
        }
        frontier = level;
    }
    false
}

/// One enumeration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationCase {
    pub mdp: TabularMdp,
    pub optimal_value: f64,
    pub policy: DeterministicPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardCase {
    pub mdp: TabularMdp,
    /// Optimal start value with the full horizon to go.
    pub start_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCase {
    pub mdp: TabularMdp,
    pub logits: Vec<f64>,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityCase {
    pub theta_seed: u64,
    pub start: usize,
    pub goal: usize,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityGolden {
    pub m: u32,
    pub key: u64,
    pub action_bits: u32,
    pub horizon: usize,
    pub cases: Vec<ReachabilityCase>,
}

/// What `oracle` writes: file name and pretty JSON bytes.
pub fn golden_files(seed: u64) -> Result<Vec<(String, Vec<u8>)>, crate::zoo::ZooError> {
    let mut files = Vec::new();

    let mut r = rng::stream(seed, "oracle-enumeration", 0);
    let spec = RandomMdpSpec::default();
    let cases: Vec<EnumerationCase> = (0..40)
        .map(|_| {
            let mdp = random_mdp(&mut r, &spec).expect("valid random MDP");
            let (optimal_value, policy) = enumerate_optimal(&mdp);
            EnumerationCase {
                mdp,
                optimal_value,
                policy,
            }
        })
        .collect();
    files.push(("dp_enumeration.json".to_string(), pretty(&cases)));

    let mut r = rng::stream(seed, "oracle-backward", 0);
    let spec = RandomMdpSpec {
        discount: 1.0,
        horizon: Horizon::Finite(5),
        ..RandomMdpSpec::default()
    };
    let cases: Vec<BackwardCase> = (0..20)
        .map(|_| {
            let mdp = random_mdp(&mut r, &spec).expect("valid random MDP");
            let values = backward_induction(&mdp).expect("finite horizon");
            let start_value = mdp
                .start_dist()
                .iter()
                .zip(values.last().unwrap())
                .map(|(p, v)| p * v)
                .sum();
            BackwardCase { mdp, start_value }
        })
        .collect();
    files.push(("backward_induction.json".to_string(), pretty(&cases)));

    let mut r = rng::stream(seed, "oracle-gradient", 0);
    let cases: Vec<GradientCase> = (0..10)
        .map(|i| {
            let spec = RandomMdpSpec {
                horizon: if i % 2 == 0 {
                    Horizon::Unbounded
                } else {
                    Horizon::Finite(4)
                },
                stochastic_start: true,
                ..RandomMdpSpec::default()
            };
            let mdp = random_mdp(&mut r, &spec).expect("valid random MDP");
            let logits: Vec<f64> = (0..mdp.num_states() * mdp.num_actions())
                .map(|_| r.gen_range(-1.0..1.0))
                .collect();
            let gradient = finite_difference_gradient(&mdp, &logits, 1e-5);
            GradientCase {
                mdp,
                logits,
                gradient,
            }
        })
        .collect();
    files.push(("gradients.json".to_string(), pretty(&cases)));

    let (m, key, action_bits, horizon) = (6u32, seed, 2u32, 3usize);
    let f = crate::zoo::KeyedFunction::new(rng::derive_seed(key, "prf-f", 0), m, action_bits)?;
    let n = 1usize << m;
    let cases: Vec<ReachabilityCase> = (0..64u64)
        .map(|theta_seed| {
            let spec = crate::zoo::HypercubeEpisodeSpec::for_theta(
                &crate::Theta::seed(theta_seed),
                m,
                horizon,
            );
            ReachabilityCase {
                theta_seed,
                start: spec.start,
                goal: spec.goal,
                reachable: reachable_within(
                    |s, a| f.get(s, a),
                    n,
                    1 << action_bits,
                    spec.start,
                    spec.goal,
                    horizon,
                    true,
                ),
            }
        })
        .collect();
    files.push((
        "prf_reachability.json".to_string(),
        pretty(&ReachabilityGolden {
            m,
            key,
            action_bits,
            horizon,
            cases,
        }),
    ));
    Ok(files)
}

/// Writes [`golden_files`] into `dir`.
pub fn write_golden_files(dir: &Path, seed: u64) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let files = golden_files(seed).map_err(std::io::Error::other)?;
    let mut names = Vec::new();
    for (name, bytes) in files {
        std::fs::write(dir.join(&name), bytes)?;
        names.push(name);
    }
    Ok(names)
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}
