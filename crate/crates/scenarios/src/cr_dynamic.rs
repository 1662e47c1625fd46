//! Channel allocation under Markov PU activity and Gauss-Markov fading.
//!
//! Discrete state per PU: 0 idle, 1 busy. Each SU-PU pair carries a
//! unit-variance fading state `x`, scaling the base gain by
//! `10^(sigma_db * x / 10)`. Activity is known exactly at every epoch.

use matchkit::dynamics::{DynamicScenario, DynamicState, TransitionMatrix, TransitionModel};
use matchkit::externality::StaticContext;
use matchkit::Quotas;
use serde::{Deserialize, Serialize};

use crate::cr::{CrInstance, PuActivity};
use crate::error::Result;
use crate::radio::{db_to_linear, shannon_rate};

pub const IDLE: usize = 0;
pub const BUSY: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrDynamic {
    pub instance: CrInstance,
    pub fading_sigma_db: f64,
}

impl CrDynamic {
    pub fn new(instance: CrInstance, fading_sigma_db: f64) -> Result<Self> {
        instance.validate()?;
        Ok(CrDynamic {
            instance,
            fading_sigma_db,
        })
    }

    /// Activity taken from the instance, fading states at zero.
    pub fn initial_state(&self) -> DynamicState {
        let discrete = self
            .instance
            .pu_activity
            .iter()
            .map(|a| if *a == PuActivity::Inactive { IDLE } else { BUSY })
            .collect();
        DynamicState::new(discrete, vec![0.0; self.instance.n_su() * self.instance.n_pu()])
    }

    /// Same two-state chain for every PU.
    pub fn activity_model(&self, p_stay_idle: f64, p_stay_busy: f64, rho: f64) -> Result<TransitionModel> {
        let chain = TransitionMatrix::new(vec![vec![p_stay_idle, 1.0 - p_stay_idle], vec![1.0 - p_stay_busy, p_stay_busy]])?;
        Ok(TransitionModel::new(vec![chain; self.instance.n_pu()], rho)?)
    }

    pub fn rate(&self, state: &DynamicState, su: usize, pu: usize) -> f64 {
        let x = state.gains[su * self.instance.n_pu() + pu];
        let gain = self.instance.gain[su][pu] * db_to_linear(self.fading_sigma_db * x);
        shannon_rate(gain * self.instance.tx_power / self.instance.noise_power)
    }
}

impl DynamicScenario for CrDynamic {
    type Context = StaticContext;

    fn quotas(&self) -> Quotas {
        Quotas::one_to_one(self.instance.n_su(), self.instance.n_pu())
    }

    fn context(&self, state: &DynamicState) -> StaticContext {
        let (n_su, n_pu) = (self.instance.n_su(), self.instance.n_pu());
        let value = |su: usize, pu: usize| {
            let r = self.rate(state, su, pu);
            if state.discrete[pu] == IDLE && r > 0.0 {
                r
            } else {
                f64::NEG_INFINITY
            }
        };
        StaticContext::new(
            (0..n_su).map(|su| (0..n_pu).map(|pu| value(su, pu)).collect()).collect(),
            (0..n_pu).map(|pu| (0..n_su).map(|su| value(su, pu)).collect()).collect(),
        )
    }
}
