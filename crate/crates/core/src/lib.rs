//! Two-sided matching of users to resources.
//!
//! Strict preference profiles with quotas, deferred acceptance from either
//! side, stability checks and exhaustive enumeration for small instances,
//! plus an engine for preferences that depend on the matching itself and a
//! time-stepped driver for Markov-modulated instances.

pub mod da;
pub mod document;
pub mod dynamics;
pub mod enumerate;
pub mod error;
pub mod externality;
pub mod matching;
pub mod profile;
pub mod stability;

pub use da::{deferred_acceptance, deferred_acceptance_with_stats, proposal_count, DaOutcome, Proposer};
pub use document::{AgentEntry, ProfileDocument};
pub use enumerate::{enumerate_stable_matchings, enumerate_stable_matchings_with_cap, DEFAULT_ENUMERATION_CAP};
pub use error::{MatchError, Result};
pub use matching::Matching;
pub use profile::{AgentId, PreferenceProfile, QuotaShape, Quotas, ResourceId, Side, UserId, ValidatedProfile};
pub use stability::{find_blocking_pairs, is_stable, BlockingPair};
