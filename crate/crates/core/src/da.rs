//! Round-based deferred acceptance.
//!
//! Each round, every proposer with spare quota proposes to the next entries of
//! its list (one per free slot). Every receiver then pools the proposers it is
//! holding with the new ones, keeps its best `quota` and rejects the rest.
//! Rejected proposers move on next round. The procedure stops when a round
//! issues no proposals.
//!
//! Proposers never propose twice to the same receiver, so the total number of
//! proposals is bounded by the number of acceptable pairs.

use serde::{Deserialize, Serialize};

use crate::matching::Matching;
use crate::profile::{ResourceId, UserId, ValidatedProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Proposer {
    Users,
    Resources,
}

/// Result of a deferred acceptance run with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaOutcome {
    pub matching: Matching,
    /// Total proposals issued.
    pub proposals: usize,
    /// Rounds in which at least one proposal was issued.
    pub rounds: usize,
}

pub fn deferred_acceptance(profile: &ValidatedProfile, proposer: Proposer) -> Matching {
    deferred_acceptance_with_stats(profile, proposer).matching
}

pub fn proposal_count(profile: &ValidatedProfile, proposer: Proposer) -> usize {
    deferred_acceptance_with_stats(profile, proposer).proposals
}

pub fn deferred_acceptance_with_stats(profile: &ValidatedProfile, proposer: Proposer) -> DaOutcome {
    let n_u = profile.n_users();
    let n_r = profile.n_resources();
    match proposer {
        Proposer::Users => {
            let lists: Vec<Vec<usize>> = (0..n_u)
                .map(|u| profile.user_prefs(UserId(u)).iter().map(|r| r.0).collect())
                .collect();
            let p_quota: Vec<usize> = (0..n_u).map(|u| profile.user_quota(UserId(u))).collect();
            let r_quota: Vec<usize> = (0..n_r)
                .map(|r| profile.resource_quota(ResourceId(r)))
                .collect();
            let run = propose_dispose(&lists, &p_quota, &r_quota, |r, u| {
                profile
                    .resource_rank(ResourceId(r), UserId(u))
                    .expect("validated lists are mutually acceptable")
            });
            DaOutcome {
                matching: Matching::from_pairs(
                    n_u,
                    n_r,
                    run.held_by_receiver.iter().enumerate().flat_map(|(r, ps)| {
                        ps.iter().map(move |&u| (UserId(u), ResourceId(r)))
                    }),
                ),
                proposals: run.proposals,
                rounds: run.rounds,
            }
        }
        Proposer::Resources => {
            let lists: Vec<Vec<usize>> = (0..n_r)
                .map(|r| profile.resource_prefs(ResourceId(r)).iter().map(|u| u.0).collect())
                .collect();
            let p_quota: Vec<usize> = (0..n_r)
                .map(|r| profile.resource_quota(ResourceId(r)))
                .collect();
            let r_quota: Vec<usize> = (0..n_u).map(|u| profile.user_quota(UserId(u))).collect();
            let run = propose_dispose(&lists, &p_quota, &r_quota, |u, r| {
                profile
                    .user_rank(UserId(u), ResourceId(r))
                    .expect("validated lists are mutually acceptable")
            });
            DaOutcome {
                matching: Matching::from_pairs(
                    n_u,
                    n_r,
                    run.held_by_receiver.iter().enumerate().flat_map(|(u, ps)| {
                        ps.iter().map(move |&r| (UserId(u), ResourceId(r)))
                    }),
                ),
                proposals: run.proposals,
                rounds: run.rounds,
            }
        }
    }
}

struct Run {
    held_by_receiver: Vec<Vec<usize>>,
    proposals: usize,
    rounds: usize,
}

fn propose_dispose<F>(lists: &[Vec<usize>], p_quota: &[usize], r_quota: &[usize], rank: F) -> Run
where
    F: Fn(usize, usize) -> usize,
{
    let n_p = lists.len();
    let n_r = r_quota.len();
    let mut next = vec![0usize; n_p];
    // proposals currently held (tentatively accepted or pending this round)
    let mut held_count = vec![0usize; n_p];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); n_r];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n_r];
    let mut proposals = 0;
    let mut rounds = 0;

    loop {
        let mut any = false;
        for p in 0..n_p {
            while held_count[p] < p_quota[p] && next[p] < lists[p].len() {
                let r = lists[p][next[p]];
                next[p] += 1;
                held_count[p] += 1;
                incoming[r].push(p);
                proposals += 1;
                any = true;
            }
        }
        if !any {
            break;
        }
        rounds += 1;

        for r in 0..n_r {
            if incoming[r].is_empty() {
                continue;
            }
            let pool = &mut held[r];
            pool.append(&mut incoming[r]);
            pool.sort_by_key(|&p| rank(r, p));
            for &p in pool.iter().skip(r_quota[r]) {
                held_count[p] -= 1;
            }
            pool.truncate(r_quota[r]);
        }
    }

    for pool in &mut held {
        pool.sort_unstable();
    }
    Run {
        held_by_receiver: held,
        proposals,
        rounds,
    }
}
