//! Test-side oracles that share nothing with the library beyond its data types.

#![allow(dead_code)]

use matchkit::{Matching, PreferenceProfile, ResourceId, UserId, ValidatedProfile};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub enum Shape {
    OneToOne,
    /// Users hold one resource, resources hold up to three users.
    UsersSingle,
    /// Resources hold one user, users hold up to three resources.
    ResourcesSingle,
}

/// Random strict profile: each agent accepts each partner with probability
/// `density`, in a random order. One-sided entries are left for validation
/// to prune.
pub fn random_profile<R: Rng>(rng: &mut R, n_u: usize, n_r: usize, shape: Shape, density: f64) -> PreferenceProfile {
    let list = |rng: &mut R, n: usize| {
        let mut l: Vec<usize> = (0..n).filter(|_| rng.random_bool(density)).collect();
        l.shuffle(rng);
        l
    };
    let user_prefs = (0..n_u).map(|_| list(rng, n_r).into_iter().map(ResourceId).collect()).collect();
    let resource_prefs = (0..n_r).map(|_| list(rng, n_u).into_iter().map(UserId).collect()).collect();
    let (user_quota, resource_quota) = match shape {
        Shape::OneToOne => (vec![1; n_u], vec![1; n_r]),
        Shape::UsersSingle => (vec![1; n_u], (0..n_r).map(|_| rng.random_range(1..=3)).collect()),
        Shape::ResourcesSingle => ((0..n_u).map(|_| rng.random_range(1..=3)).collect(), vec![1; n_r]),
    };
    PreferenceProfile::new(user_prefs, resource_prefs, user_quota, resource_quota)
}

pub fn random_shape<R: Rng>(rng: &mut R) -> Shape {
    match rng.random_range(0..3) {
        0 => Shape::OneToOne,
        1 => Shape::UsersSingle,
        _ => Shape::ResourcesSingle,
    }
}

fn position<T: PartialEq>(list: &[T], x: &T) -> Option<usize> {
    list.iter().position(|y| y == x)
}

/// Blocking pairs straight from the definition, on the raw validated lists.
pub fn naive_blocking_pairs(m: &Matching, p: &ValidatedProfile) -> Vec<(usize, usize)> {
    let raw = p.profile();
    let mut out = Vec::new();
    for u in 0..raw.user_prefs.len() {
        for r in 0..raw.resource_prefs.len() {
            let (uid, rid) = (UserId(u), ResourceId(r));
            if m.contains(uid, rid) {
                continue;
            }
            let (Some(ur), Some(ru)) = (position(&raw.user_prefs[u], &rid), position(&raw.resource_prefs[r], &uid))
            else {
                continue;
            };
            let held = m.resources_of(uid);
            let user_wants = held.len() < raw.user_quota[u]
                || held.iter().any(|h| position(&raw.user_prefs[u], h).unwrap() > ur);
            let tenants = m.users_of(rid);
            let resource_wants = tenants.len() < raw.resource_quota[r]
                || tenants.iter().any(|t| position(&raw.resource_prefs[r], t).unwrap() > ru);
            if user_wants && resource_wants {
                out.push((u, r));
            }
        }
    }
    out
}

/// Every matching that respects quotas and acceptability, by include/exclude
/// over the acceptable pairs.
pub fn all_feasible(p: &ValidatedProfile) -> Vec<Matching> {
    let raw = p.profile();
    let pairs: Vec<(usize, usize)> = (0..raw.user_prefs.len())
        .flat_map(|u| raw.user_prefs[u].iter().map(move |r| (u, r.0)))
        .collect();
    let mut out = Vec::new();
    let mut m = Matching::new(p.n_users(), p.n_resources());
    fn go(i: usize, pairs: &[(usize, usize)], raw: &PreferenceProfile, m: &mut Matching, out: &mut Vec<Matching>) {
        if i == pairs.len() {
            out.push(m.clone());
            return;
        }
        go(i + 1, pairs, raw, m, out);
        let (u, r) = pairs[i];
        if m.resources_of(UserId(u)).len() < raw.user_quota[u] && m.users_of(ResourceId(r)).len() < raw.resource_quota[r]
        {
            m.insert(UserId(u), ResourceId(r));
            go(i + 1, pairs, raw, m, out);
            m.remove(UserId(u), ResourceId(r));
        }
    }
    go(0, &pairs, raw, &mut m, &mut out);
    out
}

/// Unpruned stable set, sorted.
pub fn brute_force_stable(p: &ValidatedProfile) -> Vec<Matching> {
    let mut s: Vec<Matching> = all_feasible(p)
        .into_iter()
        .filter(|m| naive_blocking_pairs(m, p).is_empty())
        .collect();
    s.sort();
    s
}

/// Sorted ranks (best first) of what `u` holds in `m`.
pub fn user_ranks(p: &ValidatedProfile, m: &Matching, u: usize) -> Vec<usize> {
    let list = &p.profile().user_prefs[u];
    let mut v: Vec<usize> = m.resources_of(UserId(u)).iter().map(|r| position(list, r).unwrap()).collect();
    v.sort();
    v
}

pub fn resource_ranks(p: &ValidatedProfile, m: &Matching, r: usize) -> Vec<usize> {
    let list = &p.profile().resource_prefs[r];
    let mut v: Vec<usize> = m.users_of(ResourceId(r)).iter().map(|u| position(list, u).unwrap()).collect();
    v.sort();
    v
}

/// `a` is at least as good as `b` slot by slot; a missing slot is worst.
pub fn weakly_better(a: &[usize], b: &[usize]) -> bool {
    (0..a.len().max(b.len())).all(|i| match (a.get(i), b.get(i)) {
        (Some(x), Some(y)) => x <= y,
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (None, None) => true,
    })
}
