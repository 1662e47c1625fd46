//! Structured-text form of a preference profile.
//!
//! ```json
//! {
//!   "users":     [{"id": 0, "prefs": [1, 0], "quota": 1}],
//!   "resources": [{"id": 0, "prefs": [0], "quota": 1},
//!                 {"id": 1, "prefs": [0], "quota": 1}]
//! }
//! ```
//!
//! Agents may appear in any order; ids on each side must be exactly `0..n`.
//! `prefs` lists partner ids on the opposite side, best first.

use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::profile::{PreferenceProfile, ResourceId, Side, UserId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub id: usize,
    pub prefs: Vec<usize>,
    pub quota: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub users: Vec<AgentEntry>,
    pub resources: Vec<AgentEntry>,
}

impl ProfileDocument {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Converts to a raw profile, ordering agents canonically by id.
    pub fn into_profile(self) -> Result<PreferenceProfile> {
        let users = canonical(Side::User, self.users)?;
        let resources = canonical(Side::Resource, self.resources)?;
        Ok(PreferenceProfile {
            user_quota: users.iter().map(|a| a.quota).collect(),
            resource_quota: resources.iter().map(|a| a.quota).collect(),
            user_prefs: users
                .into_iter()
                .map(|a| a.prefs.into_iter().map(ResourceId).collect())
                .collect(),
            resource_prefs: resources
                .into_iter()
                .map(|a| a.prefs.into_iter().map(UserId).collect())
                .collect(),
        })
    }
}

impl From<&PreferenceProfile> for ProfileDocument {
    fn from(p: &PreferenceProfile) -> Self {
        ProfileDocument {
            users: p
                .user_prefs
                .iter()
                .zip(&p.user_quota)
                .enumerate()
                .map(|(id, (prefs, &quota))| AgentEntry {
                    id,
                    prefs: prefs.iter().map(|r| r.0).collect(),
                    quota,
                })
                .collect(),
            resources: p
                .resource_prefs
                .iter()
                .zip(&p.resource_quota)
                .enumerate()
                .map(|(id, (prefs, &quota))| AgentEntry {
                    id,
                    prefs: prefs.iter().map(|u| u.0).collect(),
                    quota,
                })
                .collect(),
        }
    }
}

fn canonical(side: Side, mut entries: Vec<AgentEntry>) -> Result<Vec<AgentEntry>> {
    entries.sort_by_key(|a| a.id);
    for pair in entries.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(MatchError::DuplicateId { side, id: pair[0].id });
        }
    }
    let count = entries.len();
    if let Some(missing) = entries.iter().enumerate().find(|(i, a)| a.id != *i).map(|(i, _)| i) {
        return Err(MatchError::MissingId {
            side,
            id: missing,
            count,
        });
    }
    Ok(entries)
}
