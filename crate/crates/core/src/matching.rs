use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::profile::{ResourceId, UserId};

/// A set of user-resource pairs with both adjacency views kept in sync.
///
/// Unmatched agents simply have an empty view. Adjacency lists are kept
/// sorted by index, so two matchings with the same pairs compare equal and
/// hash identically no matter how they were built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    user_to: Vec<Vec<ResourceId>>,
    resource_to: Vec<Vec<UserId>>,
}

impl Matching {
    pub fn new(n_users: usize, n_resources: usize) -> Self {
        Matching {
            user_to: vec![Vec::new(); n_users],
            resource_to: vec![Vec::new(); n_resources],
        }
    }

    /// Builds a matching from pairs. Repeated pairs are collapsed.
    ///
    /// # Panics
    /// If a pair references an agent outside the given dimensions.
    pub fn from_pairs<I>(n_users: usize, n_resources: usize, pairs: I) -> Self
    where
        I: IntoIterator<Item = (UserId, ResourceId)>,
    {
        let mut m = Matching::new(n_users, n_resources);
        for (u, r) in pairs {
            m.insert(u, r);
        }
        m
    }

    pub fn n_users(&self) -> usize {
        self.user_to.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resource_to.len()
    }

    /// Adds a pair; returns false if it was already present.
    pub fn insert(&mut self, u: UserId, r: ResourceId) -> bool {
        let list = &mut self.user_to[u.0];
        match list.binary_search(&r) {
            Ok(_) => false,
            Err(pos) => {
                list.insert(pos, r);
                let back = &mut self.resource_to[r.0];
                let pos = back.binary_search(&u).unwrap_err();
                back.insert(pos, u);
                true
            }
        }
    }

    /// Removes a pair; returns false if it was absent.
    pub fn remove(&mut self, u: UserId, r: ResourceId) -> bool {
        let list = &mut self.user_to[u.0];
        match list.binary_search(&r) {
            Ok(pos) => {
                list.remove(pos);
                let back = &mut self.resource_to[r.0];
                let pos = back.binary_search(&u).expect("views out of sync");
                back.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, u: UserId, r: ResourceId) -> bool {
        self.user_to
            .get(u.0)
            .is_some_and(|l| l.binary_search(&r).is_ok())
    }

    pub fn resources_of(&self, u: UserId) -> &[ResourceId] {
        &self.user_to[u.0]
    }

    pub fn users_of(&self, r: ResourceId) -> &[UserId] {
        &self.resource_to[r.0]
    }

    /// First (lowest-index) resource held by `u`; the only one in one-to-one
    /// and many-to-one matchings.
    pub fn partner_of_user(&self, u: UserId) -> Option<ResourceId> {
        self.user_to[u.0].first().copied()
    }

    pub fn partner_of_resource(&self, r: ResourceId) -> Option<UserId> {
        self.resource_to[r.0].first().copied()
    }

    /// Pairs in ascending (user, resource) order.
    pub fn pairs(&self) -> impl Iterator<Item = (UserId, ResourceId)> + '_ {
        self.user_to
            .iter()
            .enumerate()
            .flat_map(|(u, rs)| rs.iter().map(move |&r| (UserId(u), r)))
    }

    pub fn pair_set(&self) -> BTreeSet<(UserId, ResourceId)> {
        self.pairs().collect()
    }

    pub fn len(&self) -> usize {
        self.user_to.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.user_to.iter().all(Vec::is_empty)
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (u, r)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({u},{r})")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct MatchingRepr {
    n_users: usize,
    n_resources: usize,
    pairs: Vec<(UserId, ResourceId)>,
}

impl Serialize for Matching {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatchingRepr {
            n_users: self.n_users(),
            n_resources: self.n_resources(),
            pairs: self.pairs().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matching {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MatchingRepr::deserialize(deserializer)?;
        for &(u, r) in &repr.pairs {
            if u.0 >= repr.n_users || r.0 >= repr.n_resources {
                return Err(serde::de::Error::custom(format!(
                    "pair ({u},{r}) out of range"
                )));
            }
        }
        Ok(Matching::from_pairs(repr.n_users, repr.n_resources, repr.pairs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn views_stay_in_sync() {
        let mut m = Matching::new(3, 2);
        assert!(m.insert(UserId(2), ResourceId(1)));
        assert!(m.insert(UserId(0), ResourceId(1)));
        assert!(!m.insert(UserId(0), ResourceId(1)));
        assert_eq!(m.users_of(ResourceId(1)), &[UserId(0), UserId(2)]);
        assert_eq!(m.len(), 2);
        assert!(m.remove(UserId(2), ResourceId(1)));
        assert!(!m.remove(UserId(2), ResourceId(1)));
        assert_eq!(m.users_of(ResourceId(1)), &[UserId(0)]);
        assert_eq!(m.partner_of_user(UserId(0)), Some(ResourceId(1)));
        assert_eq!(m.partner_of_user(UserId(1)), None);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = Matching::from_pairs(2, 2, [(UserId(0), ResourceId(0)), (UserId(1), ResourceId(1))]);
        let b = Matching::from_pairs(2, 2, [(UserId(1), ResourceId(1)), (UserId(0), ResourceId(0))]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{(u0,r0), (u1,r1)}");
    }

    #[test]
    fn serde_round_trip() {
        let a = Matching::from_pairs(3, 2, [(UserId(2), ResourceId(0)), (UserId(0), ResourceId(1))]);
        let s = serde_json::to_string(&a).unwrap();
        let b: Matching = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Matching>(r#"{"n_users":1,"n_resources":1,"pairs":[[0,4]]}"#).is_err());
    }
}
