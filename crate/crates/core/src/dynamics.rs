//! Time-stepped re-matching under an exogenous Markov state.
//!
//! Each entity (a licensed user, say) carries a discrete state that follows
//! its own row-stochastic transition matrix, and each tracked pair carries a
//! Gauss-Markov channel state `g' = rho * g + sqrt(1 - rho^2) * eps` with
//! unit-variance noise `eps`. A [`DynamicScenario`] turns a state into a
//! utility context; [`run_horizon`] re-solves the matching every epoch and
//! records how much it moved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::da::{deferred_acceptance_with_stats, Proposer};
use crate::error::{MatchError, Result};
use crate::externality::{
    instability_under, iterative_da, snapshot_preferences, AgentUtilities, Termination, UtilityContext,
};
use crate::matching::Matching;
use crate::profile::Quotas;

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Square, non-negative, rows summing to one within 1e-9.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = TransitionMatrix { rows };
        m.check(0)?;
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        TransitionMatrix {
            rows: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Two-state chain staying put with probability `p_stay` in both states.
    pub fn symmetric_two_state(p_stay: f64) -> Result<Self> {
        Self::new(vec![vec![p_stay, 1.0 - p_stay], vec![1.0 - p_stay, p_stay]])
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn check(&self, chain: usize) -> Result<()> {
        let n = self.rows.len();
        for (row, probs) in self.rows.iter().enumerate() {
            if probs.len() != n {
                return Err(MatchError::DimensionMismatch(format!(
                    "transition matrix {chain} row {row} has {} entries, expected {n}",
                    probs.len()
                )));
            }
            let sum: f64 = probs.iter().sum();
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(MatchError::NonStochasticRow { chain, row, sum });
            }
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, from: usize, rng: &mut R) -> usize {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        let row = &self.rows[from];
        for (to, p) in row.iter().enumerate() {
            acc += p;
            if x < acc {
                return to;
            }
        }
        // rounding slack: fall back to the last state with positive mass
        row.iter().rposition(|&p| p > 0.0).unwrap_or(from)
    }
}

/// Per-entity chains plus the autoregressive coefficient for pair gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    chains: Vec<TransitionMatrix>,
    gain_rho: f64,
}

impl TransitionModel {
    /// `gain_rho = 1` freezes gains; `gain_rho = 0` redraws them i.i.d.
    pub fn new(chains: Vec<TransitionMatrix>, gain_rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gain_rho) {
            return Err(MatchError::InvalidRho(gain_rho));
        }
        for (i, c) in chains.iter().enumerate() {
            c.check(i)?;
        }
        Ok(TransitionModel { chains, gain_rho })
    }

    /// Identity chains and frozen gains.
    pub fn frozen(n_entities: usize, n_states: usize) -> Self {
        TransitionModel {
            chains: vec![TransitionMatrix::identity(n_states); n_entities],
            gain_rho: 1.0,
        }
    }

    pub fn chains(&self) -> &[TransitionMatrix] {
        &self.chains
    }

    pub fn gain_rho(&self) -> f64 {
        self.gain_rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicState {
    pub epoch: u64,
    /// Discrete state index per entity.
    pub discrete: Vec<usize>,
    /// Unit-variance channel state per tracked pair.
    pub gains: Vec<f64>,
}

impl DynamicState {
    pub fn new(discrete: Vec<usize>, gains: Vec<f64>) -> Self {
        DynamicState {
            epoch: 0,
            discrete,
            gains,
        }
    }
}

/// Moves the state one epoch forward. The draw depends only on `rng_seed`
/// and the current epoch.
pub fn advance(state: &DynamicState, model: &TransitionModel, rng_seed: u64) -> Result<DynamicState> {
    if state.discrete.len() != model.chains.len() {
        return Err(MatchError::DimensionMismatch(format!(
            "state has {} entities, model has {} chains",
            state.discrete.len(),
            model.chains.len()
        )));
    }
    for (i, (&s, chain)) in state.discrete.iter().zip(&model.chains).enumerate() {
        if s >= chain.n_states() {
            return Err(MatchError::DimensionMismatch(format!(
                "entity {i} is in state {s} of a {}-state chain",
                chain.n_states()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(state.epoch);
    let discrete = state
        .discrete
        .iter()
        .zip(&model.chains)
        .map(|(&s, chain)| chain.sample(s, &mut rng))
        .collect();
    let rho = model.gain_rho;
    let innovation = (1.0 - rho * rho).sqrt();
    let gains = state
        .gains
        .iter()
        .map(|&g| {
            let eps: f64 = rng.sample(StandardNormal);
            rho * g + innovation * eps
        })
        .collect();
    Ok(DynamicState {
        epoch: state.epoch + 1,
        discrete,
        gains,
    })
}

/// Something whose utilities read a [`DynamicState`].
pub trait DynamicScenario {
    type Context: UtilityContext;

    fn quotas(&self) -> Quotas;
    fn context(&self, state: &DynamicState) -> Self::Context;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matcher {
    /// One user-proposing deferred acceptance on the snapshot against the
    /// empty matching.
    Canonical,
    Iterative { max_iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: u64,
    pub state: DynamicState,
    pub matching: Matching,
    pub utilities: AgentUtilities,
    /// Symmetric difference over union of the pair sets; 0 when both empty.
    pub churn: f64,
    /// Instability of the previous epoch's matching under this epoch's
    /// preferences (see [`instability_under`]); 0 on the first epoch.
    pub carried_over_blocking_pairs: usize,
    /// Instability of this epoch's matching under its own preferences.
    pub blocking_pairs: usize,
    pub proposals: usize,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: u64,
    pub churn: f64,
    pub sum_utility: f64,
    pub carried_over_blocking_pairs: usize,
}

impl EpochReport {
    pub fn row(&self) -> EpochRow {
        EpochRow {
            epoch: self.epoch,
            churn: self.churn,
            sum_utility: self.utilities.total(),
            carried_over_blocking_pairs: self.carried_over_blocking_pairs,
        }
    }
}

pub fn churn(previous: &Matching, current: &Matching) -> f64 {
    let a = previous.pair_set();
    let b = current.pair_set();
    let union = a.union(&b).count();
    if union == 0 {
        0.0
    } else {
        a.symmetric_difference(&b).count() as f64 / union as f64
    }
}

/// Runs `epochs` epochs. Epoch 0 solves `initial`; every later epoch first
/// advances the state.
pub fn run_horizon<S: DynamicScenario>(
    scenario: &S,
    initial: &DynamicState,
    model: &TransitionModel,
    matcher: Matcher,
    epochs: usize,
    rng_seed: u64,
) -> Result<Vec<EpochReport>> {
    let quotas = scenario.quotas();
    let mut reports: Vec<EpochReport> = Vec::with_capacity(epochs);
    let mut state = initial.clone();

    for step in 0..epochs {
        if step > 0 {
            state = advance(&state, model, rng_seed)?;
        }
        let context = scenario.context(&state);
        let empty = Matching::new(context.n_users(), context.n_resources());
        let (matching, proposals, iterations, termination) = match matcher {
            Matcher::Canonical => {
                let profile = snapshot_preferences(&context, &empty, &quotas)?;
                let out = deferred_acceptance_with_stats(&profile, Proposer::Users);
                (out.matching, out.proposals, 1, Termination::Fixpoint)
            }
            Matcher::Iterative { max_iterations } => {
                let (m, trace) = iterative_da(&context, &quotas, max_iterations)?;
                (m, trace.total_proposals(), trace.len(), trace.termination)
            }
        };

        let own = snapshot_preferences(&context, &matching, &quotas)?;
        let blocking_pairs = instability_under(&matching, &own)?;
        let (churn, carried_over_blocking_pairs) = match reports.last() {
            None => (0.0, 0),
            Some(prev) => {
                let under_new = snapshot_preferences(&context, &prev.matching, &quotas)?;
                (
                    churn(&prev.matching, &matching),
                    instability_under(&prev.matching, &under_new)?,
                )
            }
        };
        reports.push(EpochReport {
            epoch: state.epoch,
            utilities: AgentUtilities::evaluate(&context, &matching),
            state: state.clone(),
            matching,
            churn,
            carried_over_blocking_pairs,
            blocking_pairs,
            proposals,
            iterations,
            termination,
        });
    }
    Ok(reports)
}
