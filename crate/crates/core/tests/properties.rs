use genbench::agents::cosine;
use genbench::bench::{fmt_float, Decimal};
use genbench::family::TabularMember;
use genbench::family::{sample_split, ParamSpace};
use genbench::mdp::{policy_evaluation, value_iteration, DeterministicPolicy, Horizon, TabularMdp};
use genbench::optimality::{exact_check, DEFAULT_BUDGET, DEFAULT_TIE_TOL};
use genbench::oracle::{self, RandomMdpSpec};
use genbench::wrappers::{augment_with_theta, fold_time, obfuscate_observations};
use genbench::{rng, EmpiricalSample, MdpFamily, Theta};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn mdp_from(seed: u64, spec: &RandomMdpSpec) -> TabularMdp {
    oracle::random_mdp(&mut rng::stream(seed, "prop", 0), spec).unwrap()
}

fn start_value(mdp: &TabularMdp) -> f64 {
    value_iteration(mdp, 1e-12).unwrap().start_value(mdp)
}

fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng::stream(seed, "perm", 0));
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_value_dominates_every_deterministic_policy(seed in any::<u64>(), pick in any::<u64>()) {
        let mdp = mdp_from(seed, &RandomMdpSpec { stochastic_start: true, ..RandomMdpSpec::default() });
        let mut r = rng::stream(pick, "policy", 0);
        let actions: Vec<usize> = (0..mdp.num_states())
            .map(|_| rand::Rng::gen_range(&mut r, 0..mdp.num_actions()))
            .collect();
        let pol = DeterministicPolicy::new(actions, mdp.num_actions()).unwrap();
        let v = policy_evaluation(&mdp, &pol).unwrap().episode_reward;
        prop_assert!(v <= start_value(&mdp) + 1e-8);
    }

    #[test]
    fn greedy_policy_attains_optimal_value(seed in any::<u64>()) {
        let mdp = mdp_from(seed, &RandomMdpSpec { stochastic_start: true, ..RandomMdpSpec::default() });
        let t = value_iteration(&mdp, 1e-12).unwrap();
        let pol = DeterministicPolicy::new(t.greedy_actions(), mdp.num_actions()).unwrap();
        let v = policy_evaluation(&mdp, &pol).unwrap().episode_reward;
        prop_assert!((v - t.start_value(&mdp)).abs() <= 1e-8);
    }

    #[test]
    fn renaming_states_preserves_values(seed in any::<u64>(), p in any::<u64>()) {
        let mdp = mdp_from(seed, &RandomMdpSpec { stochastic_start: true, ..RandomMdpSpec::default() });
        let perm = permutation(p, mdp.num_states());
        let renamed = obfuscate_observations(&mdp, &perm).unwrap();
        let a = value_iteration(&mdp, 1e-12).unwrap();
        let b = value_iteration(&renamed, 1e-12).unwrap();
        for s in 0..mdp.num_states() {
            prop_assert!((a.values[s] - b.values[perm[s]]).abs() <= 1e-8);
        }
        let relabeled = mdp.relabeled(&perm).unwrap();
        prop_assert!((start_value(&relabeled) - a.start_value(&mdp)).abs() <= 1e-8);
    }

    #[test]
    fn reward_offset_shifts_discounted_value(seed in any::<u64>(), c in -2.0f64..2.0) {
        let mdp = mdp_from(seed, &RandomMdpSpec::default());
        let shifted = mdp.with_reward_offset(c).unwrap();
        let expected = start_value(&mdp) + c / (1.0 - mdp.discount());
        prop_assert!((start_value(&shifted) - expected).abs() <= 1e-7);
    }

    #[test]
    fn folding_time_preserves_start_value(seed in any::<u64>(), h in 1usize..6) {
        let spec = RandomMdpSpec { discount: 1.0, horizon: Horizon::Finite(h), stochastic_start: true, ..RandomMdpSpec::default() };
        let mdp = mdp_from(seed, &spec);
        let folded = fold_time(&mdp).unwrap();
        prop_assert!((start_value(&folded) - start_value(&mdp)).abs() <= 1e-9);
    }

    #[test]
    fn shared_optimal_certificates_verify(seed in any::<u64>(), k in 1usize..5) {
        let spec = RandomMdpSpec { max_states: 4, max_actions: 3, ..RandomMdpSpec::default() };
        let base = mdp_from(seed, &spec);
        let members: Vec<_> = (0..k as u64)
            .map(|i| {
                let mdp = base.with_reward_offset(i as f64 * 0.25).unwrap();
                (Theta::seed(i), TabularMember::fully_observed(mdp))
            })
            .collect();
        let family = MdpFamily::from_members("offsets", members).unwrap();
        let sample = EmpiricalSample::new((0..k as u64).map(Theta::seed).collect(), 0, "all");
        // A constant reward shift never changes the optimal actions.
        let cert = exact_check(&family, &sample, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET).unwrap();
        prop_assert!(cert.is_shared_optimal());
        let pol = cert.policy().unwrap();
        for theta in &sample.thetas {
            let m = family.member(theta).unwrap();
            let v = policy_evaluation(&m.mdp, pol).unwrap().episode_reward;
            prop_assert!((v - start_value(&m.mdp)).abs() <= 1e-7);
        }
    }

    #[test]
    fn augmentation_always_admits_a_shared_optimum(seed in any::<u64>(), k in 1usize..5) {
        let spec = RandomMdpSpec { max_states: 4, max_actions: 3, ..RandomMdpSpec::default() };
        let mut r = rng::stream(seed, "members", 0);
        let first = oracle::random_mdp(&mut r, &spec).unwrap();
        let (ns, na) = (first.num_states(), first.num_actions());
        let mut members = vec![(Theta::seed(0), TabularMember::fully_observed(first))];
        while members.len() < k {
            let m = oracle::random_mdp(&mut r, &spec).unwrap();
            if (m.num_states(), m.num_actions()) == (ns, na) {
                members.push((Theta::seed(members.len() as u64), TabularMember::fully_observed(m)));
            }
        }
        let family = MdpFamily::from_members("random", members).unwrap();
        let sample = EmpiricalSample::new((0..k as u64).map(Theta::seed).collect(), 0, "all");
        let lifted = augment_with_theta(&family, &sample).unwrap();
        let cert = exact_check(&lifted, &sample, DEFAULT_TIE_TOL, None, DEFAULT_BUDGET).unwrap();
        prop_assert!(cert.is_shared_optimal(), "{}", cert.verdict.name());
    }

    #[test]
    fn splits_are_disjoint_and_reproducible(n in 1usize..40, extra in 0usize..40, seed in any::<u64>()) {
        let thetas: Vec<Theta> = (0..(n + extra) as u64).map(Theta::seed).collect();
        let space = ParamSpace::finite(thetas).unwrap();
        let (a, b) = sample_split(&space, n, extra, seed).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(b.len(), extra);
        prop_assert!(a.thetas.iter().all(|t| !b.thetas.contains(t)));
        let (a2, b2) = sample_split(&space, n, extra, seed).unwrap();
        prop_assert_eq!(a.thetas, a2.thetas);
        prop_assert_eq!(b.thetas, b2.thetas);
    }

    #[test]
    fn cosine_is_bounded_and_scale_free(
        v in prop::collection::vec(-10.0f64..10.0, 1..12),
        seed in any::<u64>(),
        scale in 0.001f64..1000.0,
    ) {
        let mut r = rng::stream(seed, "w", 0);
        let w: Vec<f64> = v.iter().map(|_| rand::Rng::gen_range(&mut r, -10.0..10.0)).collect();
        if let Some(c) = cosine(&v, &w) {
            prop_assert!((-1.0..=1.0).contains(&c));
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert!((cosine(&scaled, &w).unwrap() - c).abs() <= 1e-12);
            prop_assert!((cosine(&w, &v).unwrap() - c).abs() <= 1e-15);
        }
    }

    #[test]
    fn printed_gap_is_exact_difference(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let (da, db) = (Decimal::round(a), Decimal::round(b));
        prop_assume!(a.abs() > 1e-6 && b.abs() > 1e-6);
        let gap = da.sub(db).unwrap();
        // Scaling everything to a common integer grid makes the check exact.
        let e = da.exponent.min(db.exponent).min(gap.exponent);
        let grid = |d: Decimal| d.mantissa * 10i128.pow((d.exponent - e) as u32);
        prop_assert_eq!(grid(gap), grid(da) - grid(db));
        prop_assert_eq!(fmt_float(a).parse::<f64>().unwrap(), da.to_f64());
    }

    #[test]
    fn derived_seeds_depend_on_label_and_index(master in any::<u64>(), i in 0u64..1000) {
        prop_assert_eq!(rng::derive_seed(master, "x", i), rng::derive_seed(master, "x", i));
        prop_assert_ne!(rng::derive_seed(master, "x", i), rng::derive_seed(master, "y", i));
        prop_assert_ne!(rng::derive_seed(master, "x", i), rng::derive_seed(master, "x", i + 1));
    }
}
