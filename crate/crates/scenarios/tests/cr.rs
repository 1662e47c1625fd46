use matchkit::dynamics::{run_horizon, Matcher, TransitionMatrix, TransitionModel};
use matchkit::{find_blocking_pairs, ResourceId, UserId};
use matchkit_scenarios::cr::*;
use matchkit_scenarios::cr_dynamic::{CrDynamic, BUSY, IDLE};
use proptest::prelude::*;

fn one_channel(active: bool, snr: f64, prior: f64) -> CrInstance {
    CrInstance {
        gain: vec![vec![1.0]; 100],
        noise_power: 1.0,
        tx_power: 1.0,
        pu_activity: vec![if active { PuActivity::Active } else { PuActivity::Inactive }],
        prior_active: vec![prior],
        sensing_snr: vec![vec![snr]; 100],
        sensing_samples: 50,
    }
}

#[test]
fn sensing_degenerate_cases() {
    let r = sense(&one_channel(true, 2.0, 0.0), 1);
    assert!(r.confidence.iter().flatten().all(|&c| c == 1.0));
    let r = sense(&one_channel(true, 0.0, 0.3), 1);
    assert!(r.confidence.iter().flatten().all(|&c| (c - 0.7).abs() < 1e-12));
}

#[test]
fn strong_sensing_of_idle_channel_is_confident() {
    // 100 SUs x 100 seeds = 10^4 draws
    let inst = one_channel(false, 10.0, 0.5);
    let total: f64 = (0..100)
        .map(|seed| sense(&inst, seed).confidence.iter().flatten().sum::<f64>())
        .sum();
    assert!(total / 1e4 >= 0.99, "{}", total / 1e4);
    let busy = one_channel(true, 10.0, 0.5);
    let total: f64 = (0..100)
        .map(|seed| sense(&busy, seed).confidence.iter().flatten().sum::<f64>())
        .sum();
    assert!(total / 1e4 <= 0.01);
}

#[test]
fn perfect_knowledge_makes_both_da_variants_agree() {
    let cfg = CrConfig {
        prior_active: 0.0,
        n_su: 6,
        n_pu: 5,
        ..CrConfig::default()
    };
    for seed in 0..50 {
        let inst = cfg.generate(seed).unwrap();
        let a = cr_allocate(&inst, CrMethod::ModifiedDA, seed).unwrap();
        let b = cr_allocate(&inst, CrMethod::ClassicalDA, seed).unwrap();
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.sum_rate, b.sum_rate);
    }
}

#[test]
fn modified_da_beats_random_on_most_instances() {
    let mut wins = 0;
    let mut total = 0;
    for n in 4..=8 {
        let cfg = CrConfig {
            n_su: n,
            n_pu: n,
            ..CrConfig::default()
        };
        for seed in 0..100 {
            let inst = cfg.generate(seed).unwrap();
            let m = cr_allocate(&inst, CrMethod::ModifiedDA, seed).unwrap().sum_rate;
            let r = cr_allocate(&inst, CrMethod::Random, seed).unwrap().sum_rate;
            wins += usize::from(m >= r);
            total += 1;
        }
    }
    assert!(wins * 100 >= total * 95, "{wins}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn modified_da_is_stable_and_avoids_busy_channels(seed in any::<u64>(), n_su in 1usize..=8, n_pu in 1usize..=8, prior in 0.0f64..=1.0) {
        let inst = CrConfig { n_su, n_pu, prior_active: prior, ..CrConfig::default() }.generate(seed).unwrap();
        let report = sense(&inst, seed);
        let profile = cr_preferences(&inst, &report).unwrap();
        let out = cr_allocate(&inst, CrMethod::ModifiedDA, seed).unwrap();
        prop_assert_eq!(out.blocking_pairs, 0);
        prop_assert!(out.matching.pairs().all(|(_, pu)| inst.is_idle(pu.0)));
        prop_assert!(out.proposals <= out.acceptable_pairs);
        let classical = cr_allocate(&inst, CrMethod::ClassicalDA, seed).unwrap();
        prop_assert_eq!(classical.blocking_pairs, 0);
        prop_assert!(classical.proposals <= classical.acceptable_pairs);
        let random = cr_allocate(&inst, CrMethod::Random, seed).unwrap();
        prop_assert!(random.matching.pairs().all(|(_, pu)| inst.is_idle(pu.0)));
        prop_assert!(report.confidence.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        let _ = profile;
    }
}

fn flip_instance() -> CrDynamic {
    // su1 prefers pu1 but pu0 prefers su1, so pu1 turning busy displaces su0
    let inst = CrInstance {
        gain: vec![vec![15.0, 3.0], vec![63.0, 255.0]],
        noise_power: 1.0,
        tx_power: 1.0,
        pu_activity: vec![PuActivity::Inactive; 2],
        prior_active: vec![0.5; 2],
        sensing_snr: vec![vec![1.0; 2]; 2],
        sensing_samples: 10,
    };
    CrDynamic::new(inst, 0.0).unwrap()
}

#[test]
fn activity_flips_leave_carried_over_instability() {
    let scenario = flip_instance();
    let init = scenario.initial_state();
    // pu1 alternates idle/busy every epoch, pu0 stays idle
    let model = TransitionModel::new(
        vec![
            TransitionMatrix::identity(2),
            TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ],
        1.0,
    )
    .unwrap();
    let reports = run_horizon(&scenario, &init, &model, Matcher::Canonical, 6, 3).unwrap();
    assert_eq!(reports[0].state.discrete, vec![IDLE, IDLE]);
    assert_eq!(reports[1].state.discrete, vec![IDLE, BUSY]);
    let pairs = |i: usize| reports[i].matching.pairs().collect::<Vec<_>>();
    assert_eq!(pairs(0), vec![(UserId(0), ResourceId(0)), (UserId(1), ResourceId(1))]);
    assert_eq!(pairs(1), vec![(UserId(1), ResourceId(0))]);
    let carried: Vec<usize> = reports.iter().map(|r| r.carried_over_blocking_pairs).collect();
    assert_eq!(carried[0], 0);
    let mean = carried[1..].iter().sum::<usize>() as f64 / 5.0;
    assert!(mean > 0.0);
    for r in &reports {
        assert_eq!(r.blocking_pairs, 0);
        assert!((0.0..=1.0).contains(&r.churn));
    }
}

#[test]
fn cr_horizon_is_seed_deterministic_and_frozen_runs_do_not_churn() {
    let inst = CrConfig { n_su: 5, n_pu: 4, ..CrConfig::default() }.generate(17).unwrap();
    let scenario = CrDynamic::new(inst, 4.0).unwrap();
    let init = scenario.initial_state();
    let live = scenario.activity_model(0.9, 0.8, 0.7).unwrap();
    let a = run_horizon(&scenario, &init, &live, Matcher::Canonical, 20, 5).unwrap();
    let b = run_horizon(&scenario, &init, &live, Matcher::Canonical, 20, 5).unwrap();
    assert_eq!(a, b);
    let frozen = scenario.activity_model(1.0, 1.0, 1.0).unwrap();
    let f = run_horizon(&scenario, &init, &frozen, Matcher::Iterative { max_iterations: 10 }, 10, 5).unwrap();
    assert!(f[1..].iter().all(|r| r.churn == 0.0 && r.carried_over_blocking_pairs == 0));
    for r in &a {
        let p = matchkit::externality::snapshot_preferences(
            &matchkit::dynamics::DynamicScenario::context(&scenario, &r.state),
            &r.matching,
            &matchkit::dynamics::DynamicScenario::quotas(&scenario),
        )
        .unwrap();
        assert!(find_blocking_pairs(&r.matching, &p).unwrap().is_empty());
    }
}
