//! Exhaustive enumeration of stable matchings for small instances.
//!
//! Users are assigned in index order; each picks a subset of its acceptable
//! resources (up to quota) among those with free capacity. A branch is cut
//! as soon as a decided user and a resource are certain to block: assignments
//! only grow, so a resource already holding someone it ranks below a decided
//! user who wants it will keep that tenant. Every leaf is re-checked with
//! [`is_stable`], so the pruning only affects speed.

use crate::error::{MatchError, Result};
use crate::matching::Matching;
use crate::profile::{ResourceId, UserId, ValidatedProfile};
use crate::stability::is_stable;

/// Default per-side agent cap for [`enumerate_stable_matchings`].
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

pub fn enumerate_stable_matchings(profile: &ValidatedProfile) -> Result<Vec<Matching>> {
    enumerate_stable_matchings_with_cap(profile, DEFAULT_ENUMERATION_CAP)
}

/// All stable matchings of `profile`, sorted. Fails with `InstanceTooLarge`
/// when either side has more than `cap` agents.
pub fn enumerate_stable_matchings_with_cap(profile: &ValidatedProfile, cap: usize) -> Result<Vec<Matching>> {
    let n_u = profile.n_users();
    let n_r = profile.n_resources();
    if n_u > cap || n_r > cap {
        return Err(MatchError::InstanceTooLarge {
            users: n_u,
            resources: n_r,
            cap,
        });
    }
    let mut search = Search {
        profile,
        current: Matching::new(n_u, n_r),
        found: Vec::new(),
    };
    search.assign_user(0)?;
    let mut found = search.found;
    found.sort();
    Ok(found)
}

struct Search<'a> {
    profile: &'a ValidatedProfile,
    current: Matching,
    found: Vec<Matching>,
}

impl Search<'_> {
    fn assign_user(&mut self, u: usize) -> Result<()> {
        if u == self.profile.n_users() {
            if is_stable(&self.current, self.profile)? {
                self.found.push(self.current.clone());
            }
            return Ok(());
        }
        let list = self.profile.user_prefs(UserId(u)).to_vec();
        let quota = self.profile.user_quota(UserId(u));
        self.choose(u, &list, 0, quota)
    }

    // choose a subset of list[start..] for user u with at most `slots` more entries
    fn choose(&mut self, u: usize, list: &[ResourceId], start: usize, slots: usize) -> Result<()> {
        // stop adding here: the user's set is final
        if self.user_consistent(UserId(u)) {
            self.assign_user(u + 1)?;
        }
        if slots == 0 {
            return Ok(());
        }
        for i in start..list.len() {
            let r = list[i];
            if self.current.users_of(r).len() >= self.profile.resource_quota(r) {
                continue;
            }
            self.current.insert(UserId(u), r);
            self.choose(u, list, i + 1, slots - 1)?;
            self.current.remove(UserId(u), r);
        }
        Ok(())
    }

    fn user_wants(&self, u: UserId, r: ResourceId) -> bool {
        let held = self.current.resources_of(u);
        if held.len() < self.profile.user_quota(u) {
            return true;
        }
        let cand = self.profile.user_rank(u, r).unwrap();
        held.iter().any(|&h| self.profile.user_rank(u, h).unwrap() > cand)
    }

    /// False if fixing user `u`'s set now guarantees a blocking pair with
    /// some user `<= u`.
    fn user_consistent(&self, u: UserId) -> bool {
        let p = self.profile;
        // u against resources already holding a worse tenant
        for &r in p.user_prefs(u) {
            if self.current.contains(u, r) || !self.user_wants(u, r) {
                continue;
            }
            let ru = p.resource_rank(r, u).unwrap();
            if self
                .current
                .users_of(r)
                .iter()
                .any(|&t| p.resource_rank(r, t).unwrap() > ru)
            {
                return false;
            }
        }
        // earlier users against the resources u just took
        for &r in self.current.resources_of(u) {
            let ru = p.resource_rank(r, u).unwrap();
            for &v in p.resource_prefs(r) {
                if v.0 >= u.0 || p.resource_rank(r, v).unwrap() > ru {
                    continue;
                }
                if !self.current.contains(v, r) && self.user_wants(v, r) {
                    return false;
                }
            }
        }
        true
    }
}
