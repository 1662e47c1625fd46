//! Matching with externalities: preferences that depend on the whole
//! matching, solved by iterating deferred acceptance on snapshots of the
//! current preferences and by a unilateral transfer phase.

mod context;
mod iterative;
mod transfer;

pub use context::{AgentUtilities, CongestionContext, FnContext, StaticContext, UtilityContext};
pub use iterative::{
    induced_instability, instability_under, iterative_da, snapshot_preferences, IterationTrace, Termination,
    TraceEntry, TraceRow,
};
pub use transfer::{
    admissible_transfers, exchange_stability_check, transfer_phase, transfer_phase_with_rounds, SwapRequest,
    TransferOutcome, TransferPolicy, DEFAULT_MAX_ROUNDS,
};
