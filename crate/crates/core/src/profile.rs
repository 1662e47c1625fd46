//! Preference profiles and their validation.
//!
//! A [`PreferenceProfile`] is the raw input: one strict ranking per agent over
//! partners on the other side, plus quotas. [`validate_profile`] turns it into
//! a [`ValidatedProfile`], which is what every solver takes. Validation rejects
//! repeated entries and zero quotas, prunes one-sided acceptability, and
//! builds dense rank tables so that comparisons are O(1).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub usize);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    User,
    Resource,
}

/// An agent on either side of the market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId {
    pub side: Side,
    pub index: usize,
}

impl From<UserId> for AgentId {
    fn from(u: UserId) -> Self {
        AgentId {
            side: Side::User,
            index: u.0,
        }
    }
}

impl From<ResourceId> for AgentId {
    fn from(r: ResourceId) -> Self {
        AgentId {
            side: Side::Resource,
            index: r.0,
        }
    }
}

/// Per-agent capacities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    pub user: Vec<usize>,
    pub resource: Vec<usize>,
}

impl Quotas {
    pub fn one_to_one(n_users: usize, n_resources: usize) -> Self {
        Quotas {
            user: vec![1; n_users],
            resource: vec![1; n_resources],
        }
    }

    /// Users hold one resource each; resource `r` admits `resource[r]` users.
    pub fn many_to_one(n_users: usize, resource: Vec<usize>) -> Self {
        Quotas {
            user: vec![1; n_users],
            resource,
        }
    }

    pub fn n_users(&self) -> usize {
        self.user.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resource.len()
    }
}

/// Raw, unvalidated preferences. Lists are ordered best first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreferenceProfile {
    pub user_prefs: Vec<Vec<ResourceId>>,
    pub resource_prefs: Vec<Vec<UserId>>,
    pub user_quota: Vec<usize>,
    pub resource_quota: Vec<usize>,
}

impl PreferenceProfile {
    pub fn new(
        user_prefs: Vec<Vec<ResourceId>>,
        resource_prefs: Vec<Vec<UserId>>,
        user_quota: Vec<usize>,
        resource_quota: Vec<usize>,
    ) -> Self {
        PreferenceProfile {
            user_prefs,
            resource_prefs,
            user_quota,
            resource_quota,
        }
    }

    /// Profile with every quota equal to one.
    pub fn one_to_one(user_prefs: Vec<Vec<ResourceId>>, resource_prefs: Vec<Vec<UserId>>) -> Self {
        let user_quota = vec![1; user_prefs.len()];
        let resource_quota = vec![1; resource_prefs.len()];
        Self::new(user_prefs, resource_prefs, user_quota, resource_quota)
    }

    /// Builds a profile from plain index lists; handy in tests and fixtures.
    pub fn from_indices(
        user_prefs: &[&[usize]],
        resource_prefs: &[&[usize]],
        user_quota: &[usize],
        resource_quota: &[usize],
    ) -> Self {
        Self::new(
            user_prefs
                .iter()
                .map(|l| l.iter().copied().map(ResourceId).collect())
                .collect(),
            resource_prefs
                .iter()
                .map(|l| l.iter().copied().map(UserId).collect())
                .collect(),
            user_quota.to_vec(),
            resource_quota.to_vec(),
        )
    }

    pub fn quotas(&self) -> Quotas {
        Quotas {
            user: self.user_quota.clone(),
            resource: self.resource_quota.clone(),
        }
    }

    pub fn validate(self) -> Result<ValidatedProfile> {
        validate_profile(self)
    }
}

/// Which classical quota class a validated profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuotaShape {
    OneToOne,
    /// Users hold one resource; some resource admits several users.
    ManyToOne,
    /// Resources hold one user; some user holds several resources.
    OneToMany,
}

/// A profile that satisfies every structural invariant: strict lists, mutual
/// acceptability, positive quotas, and a supported quota shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedProfile {
    profile: PreferenceProfile,
    // user_rank[u][r] / resource_rank[r][u]: position in the list, None if unacceptable
    user_rank: Vec<Vec<Option<u32>>>,
    resource_rank: Vec<Vec<Option<u32>>>,
    shape: QuotaShape,
}

/// Checks strictness and quotas, prunes one-sided entries, and classifies the
/// quota shape.
pub fn validate_profile(profile: PreferenceProfile) -> Result<ValidatedProfile> {
    let PreferenceProfile {
        user_prefs,
        resource_prefs,
        user_quota,
        resource_quota,
    } = profile;
    let n_users = user_prefs.len();
    let n_resources = resource_prefs.len();

    if user_quota.len() != n_users {
        return Err(MatchError::LengthMismatch {
            side: Side::User,
            prefs: n_users,
            quotas: user_quota.len(),
        });
    }
    if resource_quota.len() != n_resources {
        return Err(MatchError::LengthMismatch {
            side: Side::Resource,
            prefs: n_resources,
            quotas: resource_quota.len(),
        });
    }
    if let Some(agent) = user_quota.iter().position(|&q| q == 0) {
        return Err(MatchError::ZeroQuota {
            side: Side::User,
            agent,
        });
    }
    if let Some(agent) = resource_quota.iter().position(|&q| q == 0) {
        return Err(MatchError::ZeroQuota {
            side: Side::Resource,
            agent,
        });
    }

    let raw_user: Vec<Vec<usize>> = user_prefs
        .iter()
        .map(|l| l.iter().map(|r| r.0).collect())
        .collect();
    let raw_resource: Vec<Vec<usize>> = resource_prefs
        .iter()
        .map(|l| l.iter().map(|u| u.0).collect())
        .collect();
    let user_rank = rank_table(Side::User, &raw_user, n_resources)?;
    let resource_rank = rank_table(Side::Resource, &raw_resource, n_users)?;

    let many_users = user_quota.iter().any(|&q| q > 1);
    let many_resources = resource_quota.iter().any(|&q| q > 1);
    let shape = match (many_users, many_resources) {
        (false, false) => QuotaShape::OneToOne,
        (false, true) => QuotaShape::ManyToOne,
        (true, false) => QuotaShape::OneToMany,
        (true, true) => return Err(MatchError::QuotaShapeUnsupported),
    };

    // keep only mutually acceptable entries, preserving order
    let user_prefs: Vec<Vec<ResourceId>> = raw_user
        .iter()
        .enumerate()
        .map(|(u, list)| {
            list.iter()
                .copied()
                .filter(|&r| resource_rank[r][u].is_some())
                .map(ResourceId)
                .collect()
        })
        .collect();
    let resource_prefs: Vec<Vec<UserId>> = raw_resource
        .iter()
        .enumerate()
        .map(|(r, list)| {
            list.iter()
                .copied()
                .filter(|&u| user_rank[u][r].is_some())
                .map(UserId)
                .collect()
        })
        .collect();

    let profile = PreferenceProfile {
        user_prefs,
        resource_prefs,
        user_quota,
        resource_quota,
    };
    let user_rank = rebuild_ranks(
        profile.user_prefs.iter().map(|l| l.iter().map(|r| r.0)),
        n_users,
        n_resources,
    );
    let resource_rank = rebuild_ranks(
        profile.resource_prefs.iter().map(|l| l.iter().map(|u| u.0)),
        n_resources,
        n_users,
    );

    Ok(ValidatedProfile {
        profile,
        user_rank,
        resource_rank,
        shape,
    })
}

fn rank_table(side: Side, lists: &[Vec<usize>], n_partners: usize) -> Result<Vec<Vec<Option<u32>>>> {
    let mut table = vec![vec![None; n_partners]; lists.len()];
    for (agent, list) in lists.iter().enumerate() {
        for (pos, &partner) in list.iter().enumerate() {
            if partner >= n_partners {
                return Err(MatchError::UnknownPartner {
                    side,
                    agent,
                    partner,
                });
            }
            if table[agent][partner].is_some() {
                return Err(MatchError::DuplicateEntry {
                    side,
                    agent,
                    partner,
                });
            }
            table[agent][partner] = Some(pos as u32);
        }
    }
    Ok(table)
}

fn rebuild_ranks<I, L>(lists: I, n_agents: usize, n_partners: usize) -> Vec<Vec<Option<u32>>>
where
    I: Iterator<Item = L>,
    L: Iterator<Item = usize>,
{
    let mut table = vec![vec![None; n_partners]; n_agents];
    for (agent, list) in lists.enumerate() {
        for (pos, partner) in list.enumerate() {
            table[agent][partner] = Some(pos as u32);
        }
    }
    table
}

impl ValidatedProfile {
    pub fn n_users(&self) -> usize {
        self.profile.user_prefs.len()
    }

    pub fn n_resources(&self) -> usize {
        self.profile.resource_prefs.len()
    }

    pub fn shape(&self) -> QuotaShape {
        self.shape
    }

    pub fn user_prefs(&self, u: UserId) -> &[ResourceId] {
        &self.profile.user_prefs[u.0]
    }

    pub fn resource_prefs(&self, r: ResourceId) -> &[UserId] {
        &self.profile.resource_prefs[r.0]
    }

    pub fn user_quota(&self, u: UserId) -> usize {
        self.profile.user_quota[u.0]
    }

    pub fn resource_quota(&self, r: ResourceId) -> usize {
        self.profile.resource_quota[r.0]
    }

    /// Position of `r` in `u`'s list (0 = best), or `None` if unacceptable.
    pub fn user_rank(&self, u: UserId, r: ResourceId) -> Option<usize> {
        self.user_rank[u.0][r.0].map(|x| x as usize)
    }

    pub fn resource_rank(&self, r: ResourceId, u: UserId) -> Option<usize> {
        self.resource_rank[r.0][u.0].map(|x| x as usize)
    }

    pub fn is_acceptable(&self, u: UserId, r: ResourceId) -> bool {
        self.user_rank[u.0][r.0].is_some()
    }

    /// Number of mutually acceptable pairs.
    pub fn acceptable_pairs(&self) -> usize {
        self.profile.user_prefs.iter().map(Vec::len).sum()
    }

    pub fn quotas(&self) -> Quotas {
        self.profile.quotas()
    }

    pub fn profile(&self) -> &PreferenceProfile {
        &self.profile
    }

    pub fn into_inner(self) -> PreferenceProfile {
        self.profile
    }
}
