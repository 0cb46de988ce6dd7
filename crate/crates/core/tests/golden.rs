use std::path::PathBuf;

use genbench::mdp::{exact_policy_gradient, value_iteration, SoftmaxPolicy};
use genbench::oracle::{self, BackwardCase, EnumerationCase, GradientCase, ReachabilityGolden};
use genbench::zoo::{HypercubeEpisodeSpec, KeyedFunction};
use genbench::{rng, Theta};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn load<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let text = std::fs::read_to_string(golden_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn regenerates_byte_identical() {
    for (name, bytes) in oracle::golden_files(0).unwrap() {
        let on_disk = std::fs::read(golden_dir().join(&name)).unwrap();
        assert!(
            on_disk == bytes,
            "{name} drifted; rerun `genbench oracle --out crates/core/tests/golden`"
        );
    }
}

#[test]
fn value_iteration_matches_enumeration() {
    let cases: Vec<EnumerationCase> = load("dp_enumeration.json");
    assert_eq!(cases.len(), 40);
    for (i, c) in cases.iter().enumerate() {
        let v = value_iteration(&c.mdp, 1e-12).unwrap().start_value(&c.mdp);
        assert!(
            (v - c.optimal_value).abs() <= 1e-6,
            "case {i}: {v} vs {}",
            c.optimal_value
        );
    }
}

#[test]
fn enumerated_policy_achieves_recorded_value() {
    let cases: Vec<EnumerationCase> = load("dp_enumeration.json");
    for c in &cases {
        let probs: Vec<f64> = (0..c.mdp.num_states())
            .flat_map(|s| (0..c.mdp.num_actions()).map(move |a| (s, a)))
            .map(|(s, a)| if c.policy.actions()[s] == a { 1.0 } else { 0.0 })
            .collect();
        let v = oracle::evaluate_table(&c.mdp, &probs);
        assert!((v - c.optimal_value).abs() <= 1e-9);
    }
}

#[test]
fn finite_horizon_value_iteration_matches_backward_induction() {
    let cases: Vec<BackwardCase> = load("backward_induction.json");
    assert_eq!(cases.len(), 20);
    for (i, c) in cases.iter().enumerate() {
        let v = value_iteration(&c.mdp, 1e-12).unwrap().start_value(&c.mdp);
        assert!(
            (v - c.start_value).abs() <= 1e-9,
            "case {i}: {v} vs {}",
            c.start_value
        );
    }
}

#[test]
fn exact_gradient_matches_recorded_finite_differences() {
    let cases: Vec<GradientCase> = load("gradients.json");
    assert_eq!(cases.len(), 10);
    for (i, c) in cases.iter().enumerate() {
        let pol =
            SoftmaxPolicy::new(c.logits.clone(), c.mdp.num_states(), c.mdp.num_actions()).unwrap();
        let g = exact_policy_gradient(&c.mdp, &pol).unwrap();
        for (k, (a, b)) in g.iter().zip(&c.gradient).enumerate() {
            let scale = a.abs().max(b.abs());
            if scale > 1e-8 {
                assert!(
                    (a - b).abs() / scale <= 1e-4,
                    "case {i} component {k}: {a} vs {b}"
                );
            }
        }
    }
}

#[test]
fn prf_reachability_by_level_sets() {
    let g: ReachabilityGolden = load("prf_reachability.json");
    let f = KeyedFunction::new(rng::derive_seed(g.key, "prf-f", 0), g.m, g.action_bits).unwrap();
    let n = 1usize << g.m;
    let na = 1usize << g.action_bits;
    let mut reachable = 0;
    for c in &g.cases {
        let spec = HypercubeEpisodeSpec::for_theta(&Theta::seed(c.theta_seed), g.m, g.horizon);
        assert_eq!((spec.start, spec.goal), (c.start, c.goal));
        // Independent sweep: states at exact depth d = 1..=horizon.
        let mut level = vec![false; n];
        level[c.start] = true;
        let mut hit = false;
        for _ in 0..g.horizon {
            let mut next = vec![false; n];
            for s in (0..n).filter(|&s| level[s]) {
                for a in 0..na {
                    next[f.get(s, a)] = true;
                }
            }
            hit |= next[c.goal];
            level = next;
        }
        assert_eq!(hit, c.reachable, "θ seed {}", c.theta_seed);
        reachable += usize::from(hit);
    }
    assert_eq!(reachable, 39);
}
