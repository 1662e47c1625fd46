//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use matchkit::dynamics::{
    advance, run_horizon, DynamicScenario, DynamicState, Matcher, TransitionMatrix, TransitionModel,
};
use matchkit::externality::{
    iterative_da, snapshot_preferences, CongestionContext, Termination, UtilityContext,
};
use matchkit::{
    deferred_acceptance_with_stats, enumerate_stable_matchings, Matching, PreferenceProfile, Proposer,
    Quotas, ResourceId, UserId, ValidatedProfile,
};
use matchkit_cli::table::{MEAN, STDERR};
use matchkit_cli::{run_experiment, ExperimentConfig, MetricTable, ScenarioKind, Seeds};
use matchkit_scenarios::cr::{cr_allocate, CrConfig, CrMethod};
use matchkit_scenarios::cr_dynamic::CrDynamic;
use matchkit_scenarios::d2d::{d2d_cheat, d2d_match, d2d_preferences, CuMode, D2dConfig, D2dInstance};
use matchkit_scenarios::hetnet::{
    fit_exponent, hetnet_associate, hetnet_convergence_curve, HetNetConfig, HetNetMethod,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// ---------- test-side oracles ----------

#[derive(Clone, Copy)]
enum Shape {
    OneToOne,
    UsersSingle,
    ResourcesSingle,
}

fn random_profile(rng: &mut ChaCha8Rng, max_side: usize) -> ValidatedProfile {
    let n_u = rng.random_range(1..=max_side);
    let n_r = rng.random_range(1..=max_side);
    let density = rng.random_range(0.3..=1.0);
    let shape = [Shape::OneToOne, Shape::UsersSingle, Shape::ResourcesSingle][rng.random_range(0..3)];
    let mut list = |n: usize| {
        let mut l: Vec<usize> = (0..n).filter(|_| rng.random_bool(density)).collect();
        l.shuffle(rng);
        l
    };
    let user_prefs: Vec<Vec<ResourceId>> = (0..n_u).map(|_| list(n_r).into_iter().map(ResourceId).collect()).collect();
    let resource_prefs: Vec<Vec<UserId>> = (0..n_r).map(|_| list(n_u).into_iter().map(UserId).collect()).collect();
    let (uq, rq) = match shape {
        Shape::OneToOne => (vec![1; n_u], vec![1; n_r]),
        Shape::UsersSingle => (vec![1; n_u], (0..n_r).map(|_| rng.random_range(1..=3)).collect()),
        Shape::ResourcesSingle => ((0..n_u).map(|_| rng.random_range(1..=3)).collect(), vec![1; n_r]),
    };
    PreferenceProfile::new(user_prefs, resource_prefs, uq, rq).validate().unwrap()
}

fn complete_one_to_one(rng: &mut ChaCha8Rng) -> ValidatedProfile {
    let n = rng.random_range(4..=6);
    let mut perm = |k: usize| {
        let mut l: Vec<usize> = (0..k).collect();
        l.shuffle(rng);
        l
    };
    let user_prefs = (0..n).map(|_| perm(n).into_iter().map(ResourceId).collect()).collect();
    let resource_prefs = (0..n).map(|_| perm(n).into_iter().map(UserId).collect()).collect();
    PreferenceProfile::one_to_one(user_prefs, resource_prefs).validate().unwrap()
}

fn pos<T: PartialEq>(list: &[T], x: &T) -> Option<usize> {
    list.iter().position(|y| y == x)
}

/// Blocking pairs straight from the definition, plus a feasibility check.
fn naive_blocking(m: &Matching, p: &ValidatedProfile) -> Option<usize> {
    let q = p.quotas();
    for (u, r) in m.pairs() {
        pos(p.user_prefs(u), &r)?;
        pos(p.resource_prefs(r), &u)?;
    }
    for u in 0..q.n_users() {
        if m.resources_of(UserId(u)).len() > q.user[u] {
            return None;
        }
    }
    for r in 0..q.n_resources() {
        if m.users_of(ResourceId(r)).len() > q.resource[r] {
            return None;
        }
    }
    let mut count = 0;
    for u in (0..q.n_users()).map(UserId) {
        for (ri, &r) in p.user_prefs(u).iter().enumerate() {
            let Some(ui) = pos(p.resource_prefs(r), &u) else { continue };
            if m.contains(u, r) {
                continue;
            }
            let held = m.resources_of(u);
            let u_wants = held.len() < q.user[u.0]
                || held.iter().any(|h| pos(p.user_prefs(u), h).unwrap() > ri);
            let tenants = m.users_of(r);
            let r_wants = tenants.len() < q.resource[r.0]
                || tenants.iter().any(|t| pos(p.resource_prefs(r), t).unwrap() > ui);
            count += usize::from(u_wants && r_wants);
        }
    }
    Some(count)
}

/// `a` weakly dominates `b` slot by slot after sorting ranks best first;
/// an empty slot ranks below everything.
fn weakly_better(mut a: Vec<usize>, mut b: Vec<usize>) -> bool {
    a.sort_unstable();
    b.sort_unstable();
    (0..a.len().max(b.len())).all(|i| a.get(i).copied().unwrap_or(usize::MAX) <= b.get(i).copied().unwrap_or(usize::MAX))
}

fn user_ranks(m: &Matching, p: &ValidatedProfile, u: UserId) -> Vec<usize> {
    m.resources_of(u).iter().map(|r| pos(p.user_prefs(u), r).unwrap()).collect()
}

fn resource_ranks(m: &Matching, p: &ValidatedProfile, r: ResourceId) -> Vec<usize> {
    m.users_of(r).iter().map(|u| pos(p.resource_prefs(r), u).unwrap()).collect()
}

// ---------- criteria ----------

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1000;
    let mut failures = 0;
    let mut many = 0;
    for _ in 0..n {
        let p = random_profile(&mut rng, 8);
        let q = p.quotas();
        many += usize::from(q.user.iter().chain(&q.resource).any(|&k| k > 1));
        let stable: HashSet<Matching> = enumerate_stable_matchings(&p).unwrap().into_iter().collect();
        for side in [Proposer::Users, Proposer::Resources] {
            let m = deferred_acceptance_with_stats(&p, side).matching;
            if naive_blocking(&m, &p) != Some(0) || !stable.contains(&m) {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == 0 && secs < 10.0,
        format!("{n} profiles ({many} many-to-one), {failures} failures, {secs:.2}s"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut n, mut violations, mut multi) = (0, 0, 0);
    // random shapes first, then complete one-to-one lists until 200 instances
    // with more than one stable matching have been seen
    while n < 300 || (multi < 200 && n < 20_000) {
        let p = if n < 300 { random_profile(&mut rng, 6) } else { complete_one_to_one(&mut rng) };
        n += 1;
        let stable = enumerate_stable_matchings(&p).unwrap();
        multi += usize::from(stable.len() > 1);
        let du = deferred_acceptance_with_stats(&p, Proposer::Users).matching;
        let dr = deferred_acceptance_with_stats(&p, Proposer::Resources).matching;
        for m in &stable {
            for u in (0..p.n_users()).map(UserId) {
                violations += usize::from(!weakly_better(user_ranks(&du, &p, u), user_ranks(m, &p, u)));
            }
            for r in (0..p.n_resources()).map(ResourceId) {
                violations += usize::from(!weakly_better(resource_ranks(&dr, &p, r), resource_ranks(m, &p, r)));
            }
        }
    }
    verdict(
        violations == 0,
        format!("{n} instances ({multi} with several stable matchings), {violations} violations"),
    )
}

fn criterion_3() -> Verdict {
    let mut checked = 0usize;
    let mut over = 0usize;
    let mut tally = |proposals: usize, m: usize| {
        checked += 1;
        over += usize::from(proposals > m);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let p = random_profile(&mut rng, 8);
        for side in [Proposer::Users, Proposer::Resources] {
            tally(deferred_acceptance_with_stats(&p, side).proposals, p.acceptable_pairs());
        }
    }
    for n in 2..=8 {
        let cfg = CrConfig { n_su: n, n_pu: n, ..CrConfig::default() };
        for seed in 0..50 {
            let inst = cfg.generate(seed).unwrap();
            for method in [CrMethod::ModifiedDA, CrMethod::ClassicalDA] {
                let a = cr_allocate(&inst, method, seed).unwrap();
                tally(a.proposals, a.acceptable_pairs);
            }
        }
    }
    for seed in 0..20 {
        let inst = HetNetConfig::default().generate(seed).unwrap();
        let o = hetnet_associate(&inst, HetNetMethod::MatchingWithTransfers).unwrap();
        tally(o.proposals, o.acceptable_pairs);
    }
    for seed in 0..100 {
        let inst = d2d_instance(seed);
        let t = d2d_match(&inst, CuMode::Payment).unwrap();
        tally(t.proposals, d2d_preferences(&inst, CuMode::Payment).unwrap().acceptable_pairs());
        let r = d2d_cheat(&inst, CuMode::Payment).unwrap();
        tally(r.cheated.proposals, r.reported_profile.clone().validate().unwrap().acceptable_pairs());
    }
    for seed in 0..20 {
        let sc = CrDynamic::new(CrConfig { n_su: 6, ..CrConfig::default() }.generate(seed).unwrap(), 3.0).unwrap();
        let model = sc.activity_model(0.8, 0.7, 0.9).unwrap();
        let reports = run_horizon(&sc, &sc.initial_state(), &model, Matcher::Canonical, 15, seed).unwrap();
        for r in reports {
            let ctx = sc.context(&r.state);
            let empty = Matching::new(ctx.n_users(), ctx.n_resources());
            let m = snapshot_preferences(&ctx, &empty, &sc.quotas()).unwrap().acceptable_pairs();
            tally(r.proposals, m);
        }
    }
    verdict(over == 0, format!("{checked} runs across profiles, cr, hetnet, d2d, dynamic; {over} over the bound"))
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let runs = 500;
    let (mut fixpoints, mut cycles, mut capped, mut bad) = (0, 0, 0, 0);
    let mut longest = 0;
    for _ in 0..runs {
        let n_u = rng.random_range(2..=8);
        let n_r = rng.random_range(2..=4);
        let solo = (0..n_u).map(|_| (0..n_r).map(|_| rng.random_range(1.0..10.0)).collect()).collect();
        let resource = (0..n_r).map(|_| (0..n_u).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let quotas = Quotas::many_to_one(n_u, (0..n_r).map(|_| rng.random_range(1..=3)).collect());
        let ctx = CongestionContext::new(solo, resource, 0.5);
        let (m, trace) = iterative_da(&ctx, &quotas, 50).unwrap();
        longest = longest.max(trace.len());
        match trace.termination {
            Termination::Fixpoint => {
                fixpoints += 1;
                let own = snapshot_preferences(&ctx, &m, &quotas).unwrap();
                bad += usize::from(naive_blocking(&m, &own) != Some(0));
            }
            Termination::Cycle => {
                cycles += 1;
                let last = &trace.entries.last().unwrap().matching;
                let repeated = last.is_empty() || trace.entries[..trace.len() - 1].iter().any(|e| &e.matching == last);
                bad += usize::from(!repeated);
            }
            Termination::Capped => capped += 1,
        }
    }
    let terminated = fixpoints + cycles;
    verdict(
        terminated * 100 >= runs * 95 && bad == 0,
        format!(
            "{runs} seeds: {fixpoints} fixpoints, {cycles} detected cycles, {capped} capped, \
             {} % terminated, max {longest} iterations, {bad} unstable fixpoints or unconfirmed cycles",
            terminated * 100 / runs
        ),
    )
}

fn stat(table: &MetricTable, method: &str, kind: &str) -> f64 {
    table.summary(method, kind).unwrap().primary_metric
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(ScenarioKind::Cr);
    cfg.cr = CrConfig { n_su: 4, n_pu: 4, prior_active: 0.5, ..CrConfig::default() };
    cfg.seeds = Seeds::Range { base_seed: 0, n_runs: 200 };
    let table = run_experiment(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (m, c, r) = (
        stat(&table, "modified_da", MEAN),
        stat(&table, "classical_da", MEAN),
        stat(&table, "random", MEAN),
    );
    let se = stat(&table, "modified_da", STDERR).hypot(stat(&table, "random", STDERR));
    verdict(
        m >= c && c >= r && m - r > 2.0 * se && secs < 30.0,
        format!("sum rate modified {m:.3} >= classical {c:.3} >= random {r:.3}; margin {:.3} vs 2*SE {:.3}; {secs:.2}s", m - r, 2.0 * se),
    )
}

fn criterion_6() -> Verdict {
    let cfg = HetNetConfig::default();
    let outcomes: Vec<_> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = cfg.generate(seed).unwrap();
            (
                hetnet_associate(&inst, HetNetMethod::MatchingWithTransfers).unwrap(),
                hetnet_associate(&inst, HetNetMethod::BestNeighbor).unwrap(),
            )
        })
        .collect();
    let mean = |f: &dyn Fn(usize) -> f64| (0..outcomes.len()).map(f).sum::<f64>() / outcomes.len() as f64;
    let mwt = mean(&|i| outcomes[i].0.avg_user_utility);
    let bn = mean(&|i| outcomes[i].1.avg_user_utility);
    let stable = outcomes.iter().filter(|o| o.0.exchange_stable).count();
    let seeds: Vec<u64> = (0..30).collect();
    let curve: Vec<(usize, f64)> = [25usize, 50, 100]
        .par_iter()
        .map(|&n| hetnet_convergence_curve(&cfg, &[n], &seeds).unwrap()[0])
        .collect();
    let exponent = fit_exponent(&curve);
    let gap = 100.0 * (mwt - bn) / bn.abs();
    verdict(
        mwt > bn && stable == outcomes.len() && exponent < 2.0,
        format!(
            "avg utility {mwt:.3} vs best-neighbour {bn:.3} (gap {gap:.1} %, informational, 23 % target); \
             exchange stable {stable}/100; iterations {curve:?}, exponent {exponent:.2}"
        ),
    )
}

fn d2d_instance(seed: u64) -> D2dInstance {
    let n = 4 + (seed % 3) as usize;
    D2dConfig { n_cu: n, n_du: n, cu_mode: CuMode::Payment, ..D2dConfig::default() }
        .generate(seed)
        .unwrap()
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../scenarios/tests/fixtures/d2d_cheat_3x3.json")
}

fn criterion_7() -> Verdict {
    let reports: Vec<_> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let inst = d2d_instance(seed);
            (inst.clone(), d2d_cheat(&inst, CuMode::Payment).unwrap())
        })
        .collect();
    let (mut du_t, mut du_c, mut sys_t, mut sys_c) = (0.0, 0.0, 0.0, 0.0);
    let (mut unstable, mut worse, mut strict) = (0, 0, 0);
    for (inst, r) in &reports {
        let truthful = d2d_match(inst, CuMode::Payment).unwrap();
        du_t += truthful.total_du_utility();
        sys_t += truthful.system_utility;
        du_c += r.cheated.total_du_utility();
        sys_c += r.cheated.system_utility;
        let reported = r.reported_profile.clone().validate().unwrap();
        unstable += usize::from(naive_blocking(&r.cheated.matching, &reported) != Some(0));
        worse += usize::from(
            (0..inst.n_du()).any(|d| r.cheated.du_utilities[d] < truthful.du_utilities[d]),
        );
        strict += usize::from(r.cheated.total_du_utility() > truthful.total_du_utility());
    }
    let n = reports.len() as f64;
    let fixture: D2dInstance = serde_json::from_str(&std::fs::read_to_string(fixture_path()).unwrap()).unwrap();
    let fr = d2d_cheat(&fixture, CuMode::Payment).unwrap();
    let ft = d2d_match(&fixture, CuMode::Payment).unwrap();
    let fixture_strict = fr.cheated.total_du_utility() > ft.total_du_utility()
        && fr.cheated.system_utility >= ft.system_utility
        && fr.cabal.iter().all(|&d| fr.cheated.du_utilities[d] > ft.du_utilities[d])
        && !fr.cabal.is_empty();
    verdict(
        du_c >= du_t && sys_c >= sys_t && fixture_strict && unstable == 0 && worse == 0,
        format!(
            "mean DU utility {:.4} -> {:.4}, system {:.4} -> {:.4}; strict gain on {strict}/200 seeds; \
             fixture DU {:.4} -> {:.4}, system {:.4} -> {:.4}; {unstable} unstable under reports, {worse} with a DU worse off",
            du_t / n,
            du_c / n,
            sys_t / n,
            sys_c / n,
            ft.total_du_utility(),
            fr.cheated.total_du_utility(),
            ft.system_utility,
            fr.cheated.system_utility
        ),
    )
}

fn criterion_8() -> Verdict {
    let sc = CrDynamic::new(CrConfig { n_su: 6, n_pu: 4, ..CrConfig::default() }.generate(8).unwrap(), 3.0).unwrap();
    let init = sc.initial_state();
    let frozen = sc.activity_model(1.0, 1.0, 1.0).unwrap();
    let mut frozen_churn = 0.0f64;
    for matcher in [Matcher::Canonical, Matcher::Iterative { max_iterations: 50 }] {
        let reports = run_horizon(&sc, &init, &frozen, matcher, 30, 8).unwrap();
        frozen_churn = reports[1..].iter().map(|r| r.churn).fold(frozen_churn, f64::max);
    }

    let chain = TransitionModel::new(vec![TransitionMatrix::symmetric_two_state(0.7).unwrap()], 1.0).unwrap();
    let mut state = DynamicState::new(vec![0], vec![]);
    let steps = 100_000;
    let mut in_zero = 0usize;
    for _ in 0..steps {
        state = advance(&state, &chain, 88).unwrap();
        in_zero += usize::from(state.discrete[0] == 0);
    }
    let occupancy = in_zero as f64 / steps as f64;

    let live = sc.activity_model(0.8, 0.6, 0.7).unwrap();
    let a = run_horizon(&sc, &init, &live, Matcher::Canonical, 40, 123).unwrap();
    let b = run_horizon(&sc, &init, &live, Matcher::Canonical, 40, 123).unwrap();
    let c = run_horizon(&sc, &init, &live, Matcher::Canonical, 40, 124).unwrap();
    verdict(
        frozen_churn == 0.0 && (occupancy - 0.5).abs() <= 0.01 && a == b,
        format!(
            "frozen churn max {frozen_churn}; occupancy {occupancy:.4} over {steps} steps; \
             same seed identical: {}; other seed differs: {}",
            a == b,
            a != c
        ),
    )
}

fn criterion_9() -> Verdict {
    let dir = std::env::temp_dir().join(format!("matchkit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut identical = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for name in ["cr", "hetnet", "d2d", "dynamic"] {
        for format in ["csv", "json"] {
            let outs: Vec<Option<Vec<u8>>> = (0..2)
                .map(|i| {
                    let out = dir.join(format!("{name}-{i}.{format}"));
                    let ok = Command::new(env!("CARGO_BIN_EXE_matchkit"))
                        .args(["run", "--config"])
                        .arg(configs.join(format!("{name}.toml")))
                        .args(["--runs", "12", "--format", format, "--out"])
                        .arg(&out)
                        .status()
                        .is_ok_and(|s| s.success());
                    ok.then(|| std::fs::read(&out).unwrap())
                })
                .collect();
            total += 1;
            match (&outs[0], &outs[1]) {
                (Some(a), Some(b)) if a == b && !a.is_empty() => identical += 1,
                _ => failures.push(format!("{name}.{format}")),
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(identical == total, format!("{identical}/{total} config/format pairs byte-identical {failures:?}"))
}

type Criterion = fn() -> Verdict;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("stability soundness", criterion_1),
        ("proposer optimality", criterion_2),
        ("proposal bound", criterion_3),
        ("externality fixpoint", criterion_4),
        ("cognitive radio ordering", criterion_5),
        ("hetnet ordering", criterion_6),
        ("d2d manipulation", criterion_7),
        ("dynamics sanity", criterion_8),
        ("end-to-end determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        failed += usize::from(!v.pass);
        println!("criterion {} [{name}]: {} - {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
