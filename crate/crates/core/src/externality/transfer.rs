//! Unilateral transfers after a deferred-acceptance pass.
//!
//! A matched user may leave its resource for another one when that strictly
//! raises its own utility (evaluated on the matching after the move) and the
//! target either has a free slot or ranks the user above its least-preferred
//! tenant, who is then evicted and left unmatched. Resource rankings use the
//! same order as [`snapshot_preferences`](super::snapshot_preferences):
//! higher utility first, ties to the lower index.

use serde::{Deserialize, Serialize};

use super::context::{AgentUtilities, UtilityContext};
use crate::error::{MatchError, Result};
use crate::matching::Matching;
use crate::profile::{Quotas, ResourceId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferPolicy {
    /// Only the moving user has to gain.
    UserImproving,
    /// The target resource's utility and the total utility of all agents
    /// must not drop either.
    PairImproving,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapRequest {
    pub user: UserId,
    pub from_resource: ResourceId,
    pub to_resource: ResourceId,
    /// Tenant displaced from `to_resource`, if it was full.
    pub evicted: Option<UserId>,
    /// Increase in the mover's utility.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub matching: Matching,
    pub swaps: Vec<SwapRequest>,
    /// True if the step cap stopped the phase rather than the absence of
    /// admissible transfers.
    pub capped: bool,
}

/// Per-(user, resource) round budget used by [`transfer_phase`].
pub const DEFAULT_MAX_ROUNDS: usize = 10;

/// Applies the best admissible transfer until none is left.
///
/// Among admissible transfers the largest mover gain wins, ties broken by
/// (user, source, target) index. Utilities are re-evaluated after every
/// move. At most `n_users * n_resources * DEFAULT_MAX_ROUNDS` transfers run.
pub fn transfer_phase<C: UtilityContext + ?Sized>(
    matching: &Matching,
    context: &C,
    quotas: &Quotas,
    policy: TransferPolicy,
) -> Result<TransferOutcome> {
    transfer_phase_with_rounds(matching, context, quotas, policy, DEFAULT_MAX_ROUNDS)
}

pub fn transfer_phase_with_rounds<C: UtilityContext + ?Sized>(
    matching: &Matching,
    context: &C,
    quotas: &Quotas,
    policy: TransferPolicy,
    max_rounds: usize,
) -> Result<TransferOutcome> {
    check_inputs(matching, context, quotas)?;
    let cap = context.n_users() * context.n_resources() * max_rounds;
    let mut current = matching.clone();
    let mut swaps = Vec::new();
    loop {
        let Some(best) = best_transfer(&current, context, quotas, policy) else {
            return Ok(TransferOutcome {
                matching: current,
                swaps,
                capped: false,
            });
        };
        if swaps.len() == cap {
            return Ok(TransferOutcome {
                matching: current,
                swaps,
                capped: true,
            });
        }
        apply(&mut current, &best);
        swaps.push(best);
    }
}

/// Every admissible transfer from `matching` under `policy`, in
/// (user, source, target) order.
pub fn admissible_transfers<C: UtilityContext + ?Sized>(
    matching: &Matching,
    context: &C,
    quotas: &Quotas,
    policy: TransferPolicy,
) -> Result<Vec<SwapRequest>> {
    check_inputs(matching, context, quotas)?;
    let mut out = Vec::new();
    scan(matching, context, quotas, policy, |s| out.push(s));
    Ok(out)
}

/// True iff no user has an admissible `UserImproving` transfer.
pub fn exchange_stability_check<C: UtilityContext + ?Sized>(
    matching: &Matching,
    context: &C,
    quotas: &Quotas,
) -> Result<bool> {
    Ok(admissible_transfers(matching, context, quotas, TransferPolicy::UserImproving)?.is_empty())
}

fn check_inputs<C: UtilityContext + ?Sized>(matching: &Matching, context: &C, quotas: &Quotas) -> Result<()> {
    let (n_u, n_r) = (context.n_users(), context.n_resources());
    if matching.n_users() != n_u || matching.n_resources() != n_r || quotas.n_users() != n_u || quotas.n_resources() != n_r {
        return Err(MatchError::DimensionMismatch(format!(
            "context is {n_u}x{n_r}, matching is {}x{}, quotas are {}x{}",
            matching.n_users(),
            matching.n_resources(),
            quotas.n_users(),
            quotas.n_resources()
        )));
    }
    for r in 0..n_r {
        if matching.users_of(ResourceId(r)).len() > quotas.resource[r] {
            return Err(MatchError::MalformedMatching(format!("r{r} is over quota")));
        }
    }
    for u in 0..n_u {
        if matching.resources_of(UserId(u)).len() > quotas.user[u] {
            return Err(MatchError::MalformedMatching(format!("u{u} is over quota")));
        }
    }
    Ok(())
}

fn best_transfer<C: UtilityContext + ?Sized>(
    matching: &Matching,
    context: &C,
    quotas: &Quotas,
    policy: TransferPolicy,
) -> Option<SwapRequest> {
    let mut best: Option<SwapRequest> = None;
    // scan visits candidates in index order, so strict > keeps the first of equal gains
    scan(matching, context, quotas, policy, |s| {
        if best.is_none_or(|b| s.gain > b.gain) {
            best = Some(s);
        }
    });
    best
}

fn apply(matching: &mut Matching, s: &SwapRequest) {
    matching.remove(s.user, s.from_resource);
    if let Some(t) = s.evicted {
        matching.remove(t, s.to_resource);
    }
    matching.insert(s.user, s.to_resource);
}

fn undo(matching: &mut Matching, s: &SwapRequest) {
    matching.remove(s.user, s.to_resource);
    if let Some(t) = s.evicted {
        matching.insert(t, s.to_resource);
    }
    matching.insert(s.user, s.from_resource);
}

/// `a` ranks above `b` for a resource scoring them `ua` and `ub`.
fn ranks_above(ua: f64, a: UserId, ub: f64, b: UserId) -> bool {
    ua > ub || (ua == ub && a < b)
}

fn scan<C, F>(matching: &Matching, context: &C, quotas: &Quotas, policy: TransferPolicy, mut visit: F)
where
    C: UtilityContext + ?Sized,
    F: FnMut(SwapRequest),
{
    let mut scratch = matching.clone();
    let before = match policy {
        TransferPolicy::PairImproving => Some(AgentUtilities::evaluate(context, matching)),
        TransferPolicy::UserImproving => None,
    };

    for u in (0..context.n_users()).map(UserId) {
        for &from in matching.resources_of(u) {
            let current = context.user_utility(u, from, matching);
            for to in (0..context.n_resources()).map(ResourceId) {
                if to == from || matching.contains(u, to) {
                    continue;
                }
                let appeal = context.resource_utility(to, u, matching);
                if appeal == f64::NEG_INFINITY {
                    continue;
                }
                let tenants = matching.users_of(to);
                let evicted = if tenants.len() < quotas.resource[to.0] {
                    None
                } else {
                    // least-preferred tenant; must rank strictly below u
                    let worst = tenants
                        .iter()
                        .map(|&t| (context.resource_utility(to, t, matching), t))
                        .reduce(|w, c| if ranks_above(w.0, w.1, c.0, c.1) { c } else { w });
                    match worst {
                        Some((wu, t)) if ranks_above(appeal, u, wu, t) => Some(t),
                        _ => continue,
                    }
                };

                let mut swap = SwapRequest {
                    user: u,
                    from_resource: from,
                    to_resource: to,
                    evicted,
                    gain: 0.0,
                };
                apply(&mut scratch, &swap);
                let moved = context.user_utility(u, to, &scratch);
                let admissible = moved > current
                    && moved.is_finite()
                    && match &before {
                        None => true,
                        Some(before) => {
                            let after = AgentUtilities::evaluate(context, &scratch);
                            after.resource[to.0] >= before.resource[to.0] && after.total() >= before.total()
                        }
                    };
                undo(&mut scratch, &swap);
                if admissible {
                    swap.gain = moved - current;
                    visit(swap);
                }
            }
        }
    }
}
