use std::collections::HashMap;

use genbench::agents::{
    evaluate, solve_by_random_search, train, AgentSpec, Baseline, MemorizerAgent,
    ModelLearnerAgent, QLearningAgent, ReinforceAgent, TableInverterAgent, TrainOptions,
    TransitionModel,
};
use genbench::family::{sample_split, EvalOptions, TabularMember};
use genbench::mdp::{value_iteration, Horizon, TabularMdp};
use genbench::zoo::{
    make_goal_gridworld, make_hash_family, make_hidden_param_gridworld, make_prf_family,
    KeyedFunction, KeyedPermutation,
};
use genbench::{rng, EmpiricalSample, MdpFamily, Theta};

fn exact() -> EvalOptions {
    EvalOptions {
        exact: true,
        ..EvalOptions::default()
    }
}

#[test]
fn q_learning_solves_a_single_gridworld() {
    let family = make_goal_gridworld(4, 4, (0, 0), 5, true).unwrap();
    let (one, _) = sample_split(family.params(), 1, 0, 2).unwrap();
    let member = family.member(&one.thetas[0]).unwrap();
    let v_star = value_iteration(&member.mdp, 1e-12)
        .unwrap()
        .start_value(&member.mdp);

    let mut agent = QLearningAgent::new(family.num_actions(), 0.5, 0.2, None).unwrap();
    train(&mut agent, &family, &one, 2000, 1, &TrainOptions::default()).unwrap();
    let j = evaluate(&agent, &family, &one, &exact()).unwrap().mean;
    assert!((j - v_star).abs() <= 1e-9, "{j} vs {v_star}");
}

#[test]
fn reinforce_prefers_the_rewarding_arm() {
    let bandit = TabularMdp::deterministic(
        1,
        3,
        vec![0.1, 1.0, 0.0],
        vec![0, 0, 0],
        vec![1.0],
        1.0,
        Horizon::Finite(1),
    )
    .unwrap();
    let family = MdpFamily::from_members(
        "bandit",
        vec![(Theta::seed(0), TabularMember::fully_observed(bandit))],
    )
    .unwrap();
    let sample = EmpiricalSample::new(vec![Theta::seed(0)], 0, "all");
    let mut agent = ReinforceAgent::new(3, 0.5, 0.0, Baseline::MeanReturn).unwrap();
    let before = evaluate(&agent, &family, &sample, &exact()).unwrap().mean;
    train(
        &mut agent,
        &family,
        &sample,
        400,
        4,
        &TrainOptions::default(),
    )
    .unwrap();
    let after = evaluate(&agent, &family, &sample, &exact()).unwrap().mean;
    assert!((before - 1.1 / 3.0).abs() <= 1e-12);
    assert!(after > 0.95, "{after}");
}

#[test]
fn training_is_a_function_of_its_inputs() {
    let family = make_goal_gridworld(4, 4, (0, 0), 9, true).unwrap();
    let (train_set, eval_set) = sample_split(family.params(), 3, 5, 1).unwrap();
    let spec = AgentSpec::QLearning {
        alpha: 0.3,
        epsilon: 0.1,
        gamma: None,
    };
    let run = |seed| {
        let mut agent = spec.build(&family).unwrap();
        let curve = train(
            agent.as_mut(),
            &family,
            &train_set,
            300,
            seed,
            &TrainOptions::default(),
        )
        .unwrap();
        (
            curve,
            evaluate(agent.as_ref(), &family, &eval_set, &exact()).unwrap(),
        )
    };
    assert_eq!(run(7), run(7));
}

#[test]
fn memorizer_is_train_perfect_and_blind_to_fresh_seeds() {
    let family = make_hash_family(6, 3, 32).unwrap();
    let (train_set, fresh) = sample_split(family.params(), 8, 500, 2).unwrap();
    let mut memo = MemorizerAgent::new(family.num_actions(), 1 << 10);
    train(
        &mut memo,
        &family,
        &train_set,
        8 << 10,
        1,
        &TrainOptions::default(),
    )
    .unwrap();
    assert_eq!(memo.len(), 8);
    assert_eq!(
        evaluate(&memo, &family, &train_set, &EvalOptions::default())
            .unwrap()
            .mean,
        1.0
    );
    assert!(
        evaluate(&memo, &family, &fresh, &EvalOptions::default())
            .unwrap()
            .mean
            <= 0.05
    );
}

#[test]
fn memorizer_without_budget_learns_nothing() {
    let family = make_hash_family(8, 3, 64).unwrap();
    let (train_set, _) = sample_split(family.params(), 4, 0, 2).unwrap();
    let mut memo = MemorizerAgent::new(family.num_actions(), 1);
    train(
        &mut memo,
        &family,
        &train_set,
        4,
        1,
        &TrainOptions::default(),
    )
    .unwrap();
    assert!(memo.len() <= 1);
}

#[test]
fn full_inverse_table_solves_every_seed() {
    let m = 6;
    let family = make_hash_family(m, 13, 16).unwrap();
    let (_, fresh) = sample_split(family.params(), 0, 300, 5).unwrap();
    // The family's observation map is a keyed permutation; its inverse fills the table.
    let w = KeyedPermutation::new(rng::derive_seed(13, "hash-w", 0), m).unwrap();
    let table: HashMap<u64, u64> = (0..1u64 << m)
        .map(|c| (c, w.apply(c as usize) as u64))
        .collect();
    let agent = TableInverterAgent::with_table(family.num_actions(), table);
    assert_eq!(agent.coverage(), 1.0);
    assert_eq!(
        evaluate(&agent, &family, &fresh, &EvalOptions::default())
            .unwrap()
            .mean,
        1.0
    );
}

#[test]
fn inverter_success_tracks_table_coverage() {
    let family = make_hash_family(6, 13, 16).unwrap();
    let (train_set, fresh) = sample_split(family.params(), 8, 2000, 5).unwrap();
    let mut agent = TableInverterAgent::new(family.num_actions());
    train(
        &mut agent,
        &family,
        &train_set,
        8 << 6,
        1,
        &TrainOptions::default(),
    )
    .unwrap();
    let p = agent.coverage();
    assert!(p > 0.0 && p < 1.0, "{p}");
    let j = evaluate(&agent, &family, &fresh, &EvalOptions::default())
        .unwrap()
        .mean;
    let se = (p * (1.0 - p) / 2000.0).sqrt();
    assert!((j - p).abs() <= 4.0 * se, "{j} vs {p}");
}

#[test]
fn model_learner_covers_a_small_transition_table() {
    let family = make_prf_family(4, 8, 2, 2).unwrap();
    let (train_set, fresh) = sample_split(family.params(), 16, 200, 6).unwrap();
    let mut agent = ModelLearnerAgent::new(family.num_actions());
    train(
        &mut agent,
        &family,
        &train_set,
        2000,
        2,
        &TrainOptions::default(),
    )
    .unwrap();
    assert!(agent.coverage().unwrap() >= 0.9, "{:?}", agent.coverage());
    let f = KeyedFunction::new(rng::derive_seed(8, "prf-f", 0), 4, 2).unwrap();
    for s in 0..16u64 {
        for a in 0..4 {
            if let Some(next) = agent.model().next(s, a) {
                assert_eq!(next, f.get(s as usize, a) as u64);
            }
        }
    }
    let solved = fresh
        .thetas
        .iter()
        .filter(|t| {
            evaluate(
                &agent,
                &family,
                &EmpiricalSample::new(vec![(*t).clone()], 0, "one"),
                &EvalOptions::default(),
            )
            .unwrap()
            .mean
                > 0.0
        })
        .count();
    assert!(solved > 0);
}

#[test]
fn specialised_agents_reject_other_families() {
    let grid = make_hidden_param_gridworld(3, 3, (1, 1), (0, 1)).unwrap();
    let sample = EmpiricalSample::new(vec![Theta::seed(0)], 0, "one");
    for spec in [AgentSpec::TableInverter {}, AgentSpec::ModelLearner {}] {
        let mut agent = spec.build(&grid).unwrap();
        assert!(
            train(
                agent.as_mut(),
                &grid,
                &sample,
                1,
                0,
                &TrainOptions::default()
            )
            .is_err(),
            "{}",
            spec.name()
        );
    }
}

#[test]
fn random_search_finds_a_replayable_solution() {
    let family = make_hash_family(4, 1, 32).unwrap();
    let sim = family.simulator(&Theta::seed(3)).unwrap();
    let actions = solve_by_random_search(sim.as_ref(), 500, 0).expect("found within budget");
    assert!(!actions.is_empty() && actions.len() <= 32);
    assert!(solve_by_random_search(sim.as_ref(), 0, 0).is_none());
}

#[test]
fn invalid_hyperparameters_are_rejected() {
    assert!(QLearningAgent::new(2, 0.0, 0.1, None).is_err());
    assert!(QLearningAgent::new(2, 0.5, 1.5, None).is_err());
    assert!(ReinforceAgent::new(2, -1.0, 0.0, Baseline::None).is_err());
    assert!(ReinforceAgent::new(2, 0.1, f64::NAN, Baseline::None).is_err());
}
