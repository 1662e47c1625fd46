use crate::matching::Matching;
use crate::profile::{ResourceId, UserId};

/// Matching-dependent utilities for both sides.
///
/// Implementations must be pure: the same arguments always give the same
/// value. Unacceptable pairs evaluate to `f64::NEG_INFINITY`; everything
/// else must be finite.
pub trait UtilityContext {
    fn n_users(&self) -> usize;
    fn n_resources(&self) -> usize;

    /// Utility `user` gets from `resource` when the rest of the market is
    /// arranged as in `matching`.
    fn user_utility(&self, user: UserId, resource: ResourceId, matching: &Matching) -> f64;

    fn resource_utility(&self, resource: ResourceId, user: UserId, matching: &Matching) -> f64;
}

impl<T: UtilityContext + ?Sized> UtilityContext for &T {
    fn n_users(&self) -> usize {
        (**self).n_users()
    }
    fn n_resources(&self) -> usize {
        (**self).n_resources()
    }
    fn user_utility(&self, user: UserId, resource: ResourceId, matching: &Matching) -> f64 {
        (**self).user_utility(user, resource, matching)
    }
    fn resource_utility(&self, resource: ResourceId, user: UserId, matching: &Matching) -> f64 {
        (**self).resource_utility(resource, user, matching)
    }
}

/// Matching-independent context backed by two utility tables.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticContext {
    /// `user[u][r]`
    pub user: Vec<Vec<f64>>,
    /// `resource[r][u]`
    pub resource: Vec<Vec<f64>>,
}

impl StaticContext {
    pub fn new(user: Vec<Vec<f64>>, resource: Vec<Vec<f64>>) -> Self {
        StaticContext { user, resource }
    }
}

impl UtilityContext for StaticContext {
    fn n_users(&self) -> usize {
        self.user.len()
    }
    fn n_resources(&self) -> usize {
        self.resource.len()
    }
    fn user_utility(&self, user: UserId, resource: ResourceId, _: &Matching) -> f64 {
        self.user[user.0][resource.0]
    }
    fn resource_utility(&self, resource: ResourceId, user: UserId, _: &Matching) -> f64 {
        self.resource[resource.0][user.0]
    }
}

/// Context built from two closures.
pub struct FnContext<U, R> {
    n_users: usize,
    n_resources: usize,
    user: U,
    resource: R,
}

impl<U, R> FnContext<U, R>
where
    U: Fn(UserId, ResourceId, &Matching) -> f64,
    R: Fn(ResourceId, UserId, &Matching) -> f64,
{
    pub fn new(n_users: usize, n_resources: usize, user: U, resource: R) -> Self {
        FnContext {
            n_users,
            n_resources,
            user,
            resource,
        }
    }
}

impl<U, R> UtilityContext for FnContext<U, R>
where
    U: Fn(UserId, ResourceId, &Matching) -> f64,
    R: Fn(ResourceId, UserId, &Matching) -> f64,
{
    fn n_users(&self) -> usize {
        self.n_users
    }
    fn n_resources(&self) -> usize {
        self.n_resources
    }
    fn user_utility(&self, user: UserId, resource: ResourceId, matching: &Matching) -> f64 {
        (self.user)(user, resource, matching)
    }
    fn resource_utility(&self, resource: ResourceId, user: UserId, matching: &Matching) -> f64 {
        (self.resource)(resource, user, matching)
    }
}

/// Peer-effect context: a user's utility for a resource is its solo value
/// scaled by `decay` for every other tenant; resources score users from a
/// fixed table.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionContext {
    /// `solo[u][r]`
    pub solo: Vec<Vec<f64>>,
    /// `resource[r][u]`
    pub resource: Vec<Vec<f64>>,
    pub decay: f64,
}

impl CongestionContext {
    pub fn new(solo: Vec<Vec<f64>>, resource: Vec<Vec<f64>>, decay: f64) -> Self {
        CongestionContext { solo, resource, decay }
    }
}

impl UtilityContext for CongestionContext {
    fn n_users(&self) -> usize {
        self.solo.len()
    }
    fn n_resources(&self) -> usize {
        self.resource.len()
    }
    fn user_utility(&self, user: UserId, resource: ResourceId, matching: &Matching) -> f64 {
        let others = matching.users_of(resource).iter().filter(|&&t| t != user).count();
        self.solo[user.0][resource.0] * self.decay.powi(others as i32)
    }
    fn resource_utility(&self, resource: ResourceId, user: UserId, _: &Matching) -> f64 {
        self.resource[resource.0][user.0]
    }
}

/// Per-agent utilities of a matching: each agent sums the utility of its
/// partners; unmatched agents get zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentUtilities {
    pub user: Vec<f64>,
    pub resource: Vec<f64>,
}

impl AgentUtilities {
    pub fn evaluate<C: UtilityContext + ?Sized>(context: &C, matching: &Matching) -> Self {
        let user = (0..matching.n_users())
            .map(UserId)
            .map(|u| {
                matching
                    .resources_of(u)
                    .iter()
                    .map(|&r| context.user_utility(u, r, matching))
                    .sum()
            })
            .collect();
        let resource = (0..matching.n_resources())
            .map(ResourceId)
            .map(|r| {
                matching
                    .users_of(r)
                    .iter()
                    .map(|&u| context.resource_utility(r, u, matching))
                    .sum()
            })
            .collect();
        AgentUtilities { user, resource }
    }

    pub fn user_total(&self) -> f64 {
        self.user.iter().sum()
    }

    pub fn resource_total(&self) -> f64 {
        self.resource.iter().sum()
    }

    /// Sum over both sides.
    pub fn total(&self) -> f64 {
        self.user_total() + self.resource_total()
    }
}
