use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use matchkit::dynamics::{run_horizon, Matcher};
use matchkit::{deferred_acceptance_with_stats, Proposer};
use matchkit_scenarios::cr::{cr_allocate, CrMethod};
use matchkit_scenarios::cr_dynamic::CrDynamic;
use matchkit_scenarios::d2d::{d2d_cheat, d2d_match, d2d_preferences, D2dOutcome};
use matchkit_scenarios::hetnet::{hetnet_associate, HetNetMethod};
use matchkit_scenarios::seed::{derive_seed, stream};
use matchkit_scenarios::ScenarioError;
use rayon::prelude::*;

use crate::config::{D2dMetric, ExperimentConfig, Format, Method, ScenarioKind};
use crate::error::{HarnessError, Result};
use crate::table::{MetricRow, MetricTable};

struct Measured {
    primary_metric: f64,
    iterations: usize,
    proposals: usize,
    blocking_pairs_final: usize,
}

/// Runs every (seed, method) pair and returns the table with summary rows.
///
/// Seeds run in parallel; rows come out seed-major in seed-list order with
/// methods in config order, followed by the summaries.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricTable> {
    config.validate()?;
    let methods = config.resolved_methods();
    let per_seed: Vec<Vec<MetricRow>> = config
        .seeds
        .expand()
        .into_par_iter()
        .map(|seed| run_seed(config, &methods, seed))
        .collect::<Result<_>>()?;
    let mut table = MetricTable {
        rows: per_seed.into_iter().flatten().collect(),
    };
    let names: Vec<&str> = methods.iter().map(|m| m.as_str()).collect();
    table.append_summaries(config.scenario.as_str(), &names);
    Ok(table)
}

fn run_seed(config: &ExperimentConfig, methods: &[Method], seed: u64) -> Result<Vec<MetricRow>> {
    let scenario = config.scenario.as_str();
    let context = |method: Method| {
        move |source: ScenarioError| HarnessError::Run {
            scenario,
            method: method.as_str(),
            seed,
            source,
        }
    };
    let first = methods[0];
    let instance = Instance::generate(config, seed).map_err(context(first))?;
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let m = instance.run(config, method, seed).map_err(context(method))?;
            let wall_time = if config.record_wall_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            Ok(MetricRow {
                scenario: scenario.to_string(),
                method: method.as_str().to_string(),
                seed: seed.to_string(),
                primary_metric: m.primary_metric,
                iterations: m.iterations as f64,
                proposals: m.proposals as f64,
                blocking_pairs_final: m.blocking_pairs_final as f64,
                wall_time,
            })
        })
        .collect()
}

enum Instance {
    Cr(matchkit_scenarios::cr::CrInstance),
    Hetnet(matchkit_scenarios::hetnet::HetNetInstance),
    D2d(matchkit_scenarios::d2d::D2dInstance),
    Dynamic(CrDynamic),
}

impl Instance {
    fn generate(config: &ExperimentConfig, seed: u64) -> matchkit_scenarios::Result<Self> {
        Ok(match config.scenario {
            ScenarioKind::Cr => Instance::Cr(config.cr.generate(seed)?),
            ScenarioKind::Hetnet => Instance::Hetnet(config.hetnet.generate(seed)?),
            ScenarioKind::D2d => Instance::D2d(config.d2d.generate(seed)?),
            ScenarioKind::Dynamic => {
                Instance::Dynamic(CrDynamic::new(config.cr.generate(seed)?, config.dynamic.fading_sigma_db)?)
            }
        })
    }

    fn run(&self, config: &ExperimentConfig, method: Method, seed: u64) -> matchkit_scenarios::Result<Measured> {
        match self {
            Instance::Cr(inst) => {
                let method = match method {
                    Method::ModifiedDa => CrMethod::ModifiedDA,
                    Method::ClassicalDa => CrMethod::ClassicalDA,
                    _ => CrMethod::Random,
                };
                let out = cr_allocate(inst, method, seed)?;
                Ok(Measured {
                    primary_metric: out.sum_rate,
                    iterations: out.rounds,
                    proposals: out.proposals,
                    blocking_pairs_final: out.blocking_pairs,
                })
            }
            Instance::Hetnet(inst) => {
                let method = match method {
                    Method::MatchingWithTransfers => HetNetMethod::MatchingWithTransfers,
                    _ => HetNetMethod::BestNeighbor,
                };
                let out = hetnet_associate(inst, method)?;
                Ok(Measured {
                    primary_metric: out.avg_user_utility,
                    iterations: out.iterations,
                    proposals: out.proposals,
                    blocking_pairs_final: out.blocking_pairs,
                })
            }
            Instance::D2d(inst) => {
                let mode = config.d2d.cu_mode;
                let metric = |o: &D2dOutcome| match config.d2d_metric {
                    D2dMetric::DuUtility => o.total_du_utility(),
                    D2dMetric::SystemUtility => o.system_utility,
                };
                if method == Method::Truthful {
                    let out = d2d_match(inst, mode)?;
                    let rounds = deferred_acceptance_with_stats(&d2d_preferences(inst, mode)?, Proposer::Users).rounds;
                    Ok(Measured {
                        primary_metric: metric(&out),
                        iterations: rounds,
                        proposals: out.proposals,
                        blocking_pairs_final: 0,
                    })
                } else {
                    let report = d2d_cheat(inst, mode)?;
                    let reported = report.reported_profile.clone().validate()?;
                    let rounds = deferred_acceptance_with_stats(&reported, Proposer::Users).rounds;
                    Ok(Measured {
                        primary_metric: metric(&report.cheated),
                        iterations: rounds,
                        proposals: report.cheated.proposals,
                        blocking_pairs_final: report.true_blocking_pairs.len(),
                    })
                }
            }
            Instance::Dynamic(sc) => {
                let d = &config.dynamic;
                let matcher = match method {
                    Method::Iterative => Matcher::Iterative {
                        max_iterations: d.max_iterations,
                    },
                    _ => Matcher::Canonical,
                };
                let model = sc.activity_model(d.p_stay_idle, d.p_stay_busy, d.gain_rho)?;
                let reports = run_horizon(
                    sc,
                    &sc.initial_state(),
                    &model,
                    matcher,
                    d.epochs,
                    derive_seed(seed, stream::DYNAMICS),
                )?;
                let total: f64 = reports.iter().map(|r| r.utilities.user_total()).sum();
                Ok(Measured {
                    primary_metric: total / reports.len() as f64,
                    iterations: reports.iter().map(|r| r.iterations).sum(),
                    proposals: reports.iter().map(|r| r.proposals).sum(),
                    blocking_pairs_final: reports.last().map_or(0, |r| r.blocking_pairs),
                })
            }
        }
    }
}

pub fn emit(table: &MetricTable, format: Format, path: &Path) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => table.write_csv(out),
        Format::Json => table.write_json(out),
    }
}
