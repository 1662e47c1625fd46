use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::matching::Matching;
use crate::profile::{ResourceId, UserId, ValidatedProfile};

/// A user-resource pair that would both rather be matched to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockingPair {
    pub user: UserId,
    pub resource: ResourceId,
}

/// Checks that `matching` has the profile's dimensions, respects quotas, and
/// only contains mutually acceptable pairs.
pub fn check_matching(matching: &Matching, profile: &ValidatedProfile) -> Result<()> {
    if matching.n_users() != profile.n_users() || matching.n_resources() != profile.n_resources() {
        return Err(MatchError::MalformedMatching(format!(
            "matching is {}x{}, profile is {}x{}",
            matching.n_users(),
            matching.n_resources(),
            profile.n_users(),
            profile.n_resources()
        )));
    }
    for u in (0..profile.n_users()).map(UserId) {
        let held = matching.resources_of(u).len();
        if held > profile.user_quota(u) {
            return Err(MatchError::MalformedMatching(format!(
                "{u} holds {held} resources, quota {}",
                profile.user_quota(u)
            )));
        }
    }
    for r in (0..profile.n_resources()).map(ResourceId) {
        let held = matching.users_of(r).len();
        if held > profile.resource_quota(r) {
            return Err(MatchError::MalformedMatching(format!(
                "{r} holds {held} users, quota {}",
                profile.resource_quota(r)
            )));
        }
    }
    if let Some((u, r)) = matching.pairs().find(|&(u, r)| !profile.is_acceptable(u, r)) {
        return Err(MatchError::MalformedMatching(format!(
            "pair ({u},{r}) is not mutually acceptable"
        )));
    }
    Ok(())
}

/// Would `u` take `r`, given what it currently holds?
fn user_wants(matching: &Matching, profile: &ValidatedProfile, u: UserId, r: ResourceId) -> bool {
    let held = matching.resources_of(u);
    if held.len() < profile.user_quota(u) {
        return true;
    }
    let cand = profile.user_rank(u, r).expect("acceptable");
    held.iter()
        .any(|&h| profile.user_rank(u, h).expect("acceptable") > cand)
}

fn resource_wants(matching: &Matching, profile: &ValidatedProfile, r: ResourceId, u: UserId) -> bool {
    let held = matching.users_of(r);
    if held.len() < profile.resource_quota(r) {
        return true;
    }
    let cand = profile.resource_rank(r, u).expect("acceptable");
    held.iter()
        .any(|&h| profile.resource_rank(r, h).expect("acceptable") > cand)
}

/// Every blocking pair of `matching`, in ascending (user, resource) order.
pub fn find_blocking_pairs(matching: &Matching, profile: &ValidatedProfile) -> Result<Vec<BlockingPair>> {
    check_matching(matching, profile)?;
    let mut out = Vec::new();
    for u in (0..profile.n_users()).map(UserId) {
        let mut acceptable: Vec<ResourceId> = profile.user_prefs(u).to_vec();
        acceptable.sort_unstable();
        for r in acceptable {
            if matching.contains(u, r) {
                continue;
            }
            if user_wants(matching, profile, u, r) && resource_wants(matching, profile, r, u) {
                out.push(BlockingPair { user: u, resource: r });
            }
        }
    }
    Ok(out)
}

pub fn is_stable(matching: &Matching, profile: &ValidatedProfile) -> Result<bool> {
    Ok(find_blocking_pairs(matching, profile)?.is_empty())
}
