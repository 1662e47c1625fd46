use crate::profile::Side;
use thiserror::Error;

/// Errors raised by the matching solvers and their inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("{side:?} {agent} lists partner {partner} more than once")]
    DuplicateEntry {
        side: Side,
        agent: usize,
        partner: usize,
    },

    #[error("{side:?} {agent} has a zero quota")]
    ZeroQuota { side: Side, agent: usize },

    #[error("{side:?} {agent} lists unknown partner {partner}")]
    UnknownPartner {
        side: Side,
        agent: usize,
        partner: usize,
    },

    #[error("{side:?} side has {prefs} preference lists but {quotas} quotas")]
    LengthMismatch {
        side: Side,
        prefs: usize,
        quotas: usize,
    },

    #[error("many-to-many profiles are not supported (some user and some resource both have quota > 1)")]
    QuotaShapeUnsupported,

    #[error("malformed matching: {0}")]
    MalformedMatching(String),

    #[error("instance too large for exhaustive enumeration: {users} users x {resources} resources (cap {cap} per side)")]
    InstanceTooLarge {
        users: usize,
        resources: usize,
        cap: usize,
    },

    #[error("utility for user {user} / resource {resource} is not finite: {value}")]
    NonFiniteUtility {
        user: usize,
        resource: usize,
        value: f64,
    },

    #[error("max_iterations must be at least 1")]
    ZeroIterations,

    #[error("row {row} of transition matrix {chain} sums to {sum}, expected 1")]
    NonStochasticRow { chain: usize, row: usize, sum: f64 },

    #[error("autoregressive coefficient {0} is outside [0, 1]")]
    InvalidRho(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate agent id {id} on the {side:?} side")]
    DuplicateId { side: Side, id: usize },

    #[error("agent ids on the {side:?} side must be exactly 0..{count}; {id} is missing")]
    MissingId { side: Side, id: usize, count: usize },
}

pub type Result<T> = std::result::Result<T, MatchError>;
