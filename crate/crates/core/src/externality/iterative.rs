use std::collections::HashSet;
use std::io;

use serde::{Deserialize, Serialize};

use super::context::{AgentUtilities, UtilityContext};
use crate::da::{deferred_acceptance_with_stats, Proposer};
use crate::error::{MatchError, Result};
use crate::matching::Matching;
use crate::profile::{PreferenceProfile, Quotas, ResourceId, UserId, ValidatedProfile};
use crate::stability::find_blocking_pairs;

/// Freezes the context at `matching` into a strict profile.
///
/// Each agent ranks its partners by utility, highest first, with ties going
/// to the lower index. Pairs at `-inf` are left out; validation then drops
/// any pair that only one side accepts.
pub fn snapshot_preferences<C: UtilityContext + ?Sized>(
    context: &C,
    matching: &Matching,
    quotas: &Quotas,
) -> Result<ValidatedProfile> {
    let n_u = context.n_users();
    let n_r = context.n_resources();
    if quotas.n_users() != n_u || quotas.n_resources() != n_r {
        return Err(MatchError::DimensionMismatch(format!(
            "context is {n_u}x{n_r}, quotas are {}x{}",
            quotas.n_users(),
            quotas.n_resources()
        )));
    }
    if matching.n_users() != n_u || matching.n_resources() != n_r {
        return Err(MatchError::DimensionMismatch(format!(
            "context is {n_u}x{n_r}, matching is {}x{}",
            matching.n_users(),
            matching.n_resources()
        )));
    }

    let mut user_prefs = Vec::with_capacity(n_u);
    for u in 0..n_u {
        let mut scored = Vec::with_capacity(n_r);
        for r in 0..n_r {
            let v = context.user_utility(UserId(u), ResourceId(r), matching);
            check_value(v, u, r)?;
            if v > f64::NEG_INFINITY {
                scored.push((v, r));
            }
        }
        user_prefs.push(ranked(scored).into_iter().map(ResourceId).collect());
    }

    let mut resource_prefs = Vec::with_capacity(n_r);
    for r in 0..n_r {
        let mut scored = Vec::with_capacity(n_u);
        for u in 0..n_u {
            let v = context.resource_utility(ResourceId(r), UserId(u), matching);
            check_value(v, u, r)?;
            if v > f64::NEG_INFINITY {
                scored.push((v, u));
            }
        }
        resource_prefs.push(ranked(scored).into_iter().map(UserId).collect());
    }

    PreferenceProfile::new(user_prefs, resource_prefs, quotas.user.clone(), quotas.resource.clone()).validate()
}

fn check_value(v: f64, user: usize, resource: usize) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        Err(MatchError::NonFiniteUtility {
            user,
            resource,
            value: v,
        })
    } else {
        Ok(())
    }
}

fn ranked(mut scored: Vec<(f64, usize)>) -> Vec<usize> {
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Instability of `matching` under the preferences it induces itself.
///
/// Pairs that the induced profile no longer accepts are counted once each
/// and removed; the rest is scored by its blocking pairs. Zero means the
/// matching is two-sided stable with respect to its own snapshot.
pub fn induced_instability<C: UtilityContext + ?Sized>(
    context: &C,
    matching: &Matching,
    quotas: &Quotas,
) -> Result<usize> {
    let profile = snapshot_preferences(context, matching, quotas)?;
    instability_under(matching, &profile)
}

/// Same as [`induced_instability`] against an explicit profile.
pub fn instability_under(matching: &Matching, profile: &ValidatedProfile) -> Result<usize> {
    let mut kept = matching.clone();
    let mut dropped = 0;
    for (u, r) in matching.pairs() {
        if !profile.is_acceptable(u, r) {
            kept.remove(u, r);
            dropped += 1;
        }
    }
    Ok(dropped + find_blocking_pairs(&kept, profile)?.len())
}

/// How an iterative run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    /// The last run reproduced its input matching.
    Fixpoint,
    /// A matching seen earlier came back.
    Cycle,
    /// `max_iterations` reached without either.
    Capped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// 1-based.
    pub iteration: usize,
    pub matching: Matching,
    pub utilities: AgentUtilities,
    /// Blocking pairs of `matching` under the preferences it induces.
    pub blocking_pairs: usize,
    pub proposals: usize,
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
    pub termination: Termination,
}

/// One row of the exported trace table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub blocking_pair_count: usize,
    pub sum_utility: f64,
    pub converged_flag: bool,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Fixpoint
    }

    pub fn total_proposals(&self) -> usize {
        self.entries.iter().map(|e| e.proposals).sum()
    }

    pub fn total_rounds(&self) -> usize {
        self.entries.iter().map(|e| e.rounds).sum()
    }

    /// Row-per-iteration table; `converged_flag` is set on the final row of
    /// a run that reached a fixpoint.
    pub fn rows(&self) -> Vec<TraceRow> {
        let last = self.entries.len().saturating_sub(1);
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| TraceRow {
                iteration: e.iteration,
                blocking_pair_count: e.blocking_pairs,
                sum_utility: e.utilities.total(),
                converged_flag: i == last && self.converged(),
            })
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "iteration,blocking_pair_count,sum_utility,converged_flag")?;
        for row in self.rows() {
            writeln!(
                out,
                "{},{},{},{}",
                row.iteration, row.blocking_pair_count, row.sum_utility, row.converged_flag
            )?;
        }
        Ok(())
    }
}

/// Iterative deferred acceptance for matching-dependent preferences.
///
/// Starting from the empty matching, repeatedly snapshot the preferences
/// against the current matching and rerun user-proposing deferred
/// acceptance. Stops at a fixpoint, when an earlier matching recurs (the
/// matching held before the repeat is returned), or after `max_iterations`
/// runs.
pub fn iterative_da<C: UtilityContext + ?Sized>(
    context: &C,
    quotas: &Quotas,
    max_iterations: usize,
) -> Result<(Matching, IterationTrace)> {
    if max_iterations == 0 {
        return Err(MatchError::ZeroIterations);
    }
    let mut current = Matching::new(context.n_users(), context.n_resources());
    let mut seen: HashSet<Matching> = HashSet::new();
    seen.insert(current.clone());
    let mut entries = Vec::new();

    for iteration in 1..=max_iterations {
        let profile = snapshot_preferences(context, &current, quotas)?;
        let outcome = deferred_acceptance_with_stats(&profile, Proposer::Users);
        let next = outcome.matching;
        let blocking_pairs = induced_instability(context, &next, quotas)?;
        entries.push(TraceEntry {
            iteration,
            matching: next.clone(),
            utilities: AgentUtilities::evaluate(context, &next),
            blocking_pairs,
            proposals: outcome.proposals,
            rounds: outcome.rounds,
        });

        if next == current {
            return Ok((
                next,
                IterationTrace {
                    entries,
                    termination: Termination::Fixpoint,
                },
            ));
        }
        if !seen.insert(next.clone()) {
            return Ok((
                current,
                IterationTrace {
                    entries,
                    termination: Termination::Cycle,
                },
            ));
        }
        current = next;
    }

    Ok((
        current,
        IterationTrace {
            entries,
            termination: Termination::Capped,
        },
    ))
}
