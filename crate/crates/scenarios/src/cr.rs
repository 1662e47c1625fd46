//! Secondary users (SUs) bidding for the channels of primary users (PUs).
//!
//! Each SU senses every channel with an energy detector and turns the
//! detector output into a posterior belief that the channel is free. It then
//! values a channel at `confidence * log2(1 + snr)`. An idle PU ranks SUs by
//! the same quantity; a busy PU admits nobody.

use matchkit::externality::{instability_under, snapshot_preferences, StaticContext};
use matchkit::{deferred_acceptance_with_stats, Matching, Proposer, Quotas, ResourceId, UserId, ValidatedProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_all, invalid, Result};
use crate::radio::{db_to_linear, dbm_to_watts, shannon_rate};
use crate::seed::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PuActivity {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrInstance {
    /// Linear power gain, `gain[su][pu]`.
    pub gain: Vec<Vec<f64>>,
    /// Watts.
    pub noise_power: f64,
    /// Watts.
    pub tx_power: f64,
    pub pu_activity: Vec<PuActivity>,
    pub prior_active: Vec<f64>,
    /// Linear per-sample SNR of the PU signal at each SU, `[su][pu]`.
    pub sensing_snr: Vec<Vec<f64>>,
    pub sensing_samples: usize,
}

impl CrInstance {
    pub fn n_su(&self) -> usize {
        self.gain.len()
    }

    pub fn n_pu(&self) -> usize {
        self.pu_activity.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n_pu = self.n_pu();
        if self.n_su() == 0 || n_pu == 0 {
            return Err(invalid("n_su/n_pu", "both sides need at least one agent"));
        }
        if self.prior_active.len() != n_pu {
            return Err(invalid("prior_active", format!("expected {n_pu} entries")));
        }
        if self.gain.iter().chain(&self.sensing_snr).any(|row| row.len() != n_pu) || self.sensing_snr.len() != self.n_su()
        {
            return Err(invalid("gain/sensing_snr", format!("expected {}x{n_pu} tables", self.n_su())));
        }
        check_all("gain", self.gain.iter().flatten().copied(), f64::MIN_POSITIVE)?;
        check_all("sensing_snr", self.sensing_snr.iter().flatten().copied(), 0.0)?;
        check_all("noise_power", [self.noise_power], f64::MIN_POSITIVE)?;
        check_all("tx_power", [self.tx_power], 0.0)?;
        if self.prior_active.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("prior_active", "probabilities must lie in [0, 1]"));
        }
        if self.sensing_samples == 0 {
            return Err(invalid("sensing_samples", "must be positive"));
        }
        Ok(())
    }

    /// Spectral efficiency of `su` on `pu`'s channel.
    pub fn rate(&self, su: usize, pu: usize) -> f64 {
        shannon_rate(self.gain[su][pu] * self.tx_power / self.noise_power)
    }

    pub fn is_idle(&self, pu: usize) -> bool {
        self.pu_activity[pu] == PuActivity::Inactive
    }
}

/// Posterior probability that each channel is idle, `confidence[su][pu]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingReport {
    pub confidence: Vec<Vec<f64>>,
}

/// Normalised energy statistic: idle `N(1, 2/N)`, busy `N(1 + snr, 2(1 + 2 snr)/N)`.
fn detector_moments(active: bool, snr: f64, samples: usize) -> (f64, f64) {
    let n = samples as f64;
    if active {
        (1.0 + snr, (2.0 * (1.0 + 2.0 * snr) / n).sqrt())
    } else {
        (1.0, (2.0 / n).sqrt())
    }
}

fn log_density(y: f64, (mean, sd): (f64, f64)) -> f64 {
    let z = (y - mean) / sd;
    -0.5 * z * z - sd.ln()
}

/// Posterior `P(idle | y)` for one detector reading.
pub fn idle_posterior(y: f64, prior_active: f64, snr: f64, samples: usize) -> f64 {
    let p0 = 1.0 - prior_active;
    if prior_active == 0.0 || p0 == 0.0 {
        return p0;
    }
    let l0 = p0.ln() + log_density(y, detector_moments(false, snr, samples));
    let l1 = prior_active.ln() + log_density(y, detector_moments(true, snr, samples));
    // logistic of the log-odds, stable for large magnitudes
    1.0 / (1.0 + (l1 - l0).exp())
}

pub fn sense(instance: &CrInstance, rng_seed: u64) -> SensingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let confidence = (0..instance.n_su())
        .map(|su| {
            (0..instance.n_pu())
                .map(|pu| {
                    let snr = instance.sensing_snr[su][pu];
                    let (mean, sd) = detector_moments(!instance.is_idle(pu), snr, instance.sensing_samples);
                    let y = mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
                    idle_posterior(y, instance.prior_active[pu], snr, instance.sensing_samples)
                })
                .collect()
        })
        .collect();
    SensingReport { confidence }
}

fn positive_or_unacceptable(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        f64::NEG_INFINITY
    }
}

/// Utility tables behind the sensing-aware profile.
pub fn cr_context(instance: &CrInstance, report: &SensingReport) -> StaticContext {
    let value = |su: usize, pu: usize| positive_or_unacceptable(report.confidence[su][pu] * instance.rate(su, pu));
    let su_side = (0..instance.n_su())
        .map(|su| (0..instance.n_pu()).map(|pu| value(su, pu)).collect())
        .collect();
    let pu_side = (0..instance.n_pu())
        .map(|pu| {
            (0..instance.n_su())
                .map(|su| if instance.is_idle(pu) { value(su, pu) } else { f64::NEG_INFINITY })
                .collect()
        })
        .collect();
    StaticContext::new(su_side, pu_side)
}

/// Rate-only tables: activity and sensing ignored.
pub fn classical_context(instance: &CrInstance) -> StaticContext {
    let rate = |su: usize, pu: usize| positive_or_unacceptable(instance.rate(su, pu));
    StaticContext::new(
        (0..instance.n_su()).map(|su| (0..instance.n_pu()).map(|pu| rate(su, pu)).collect()).collect(),
        (0..instance.n_pu()).map(|pu| (0..instance.n_su()).map(|su| rate(su, pu)).collect()).collect(),
    )
}

fn profile_of(context: &StaticContext, instance: &CrInstance) -> Result<ValidatedProfile> {
    let q = Quotas::one_to_one(instance.n_su(), instance.n_pu());
    Ok(snapshot_preferences(context, &Matching::new(instance.n_su(), instance.n_pu()), &q)?)
}

/// SUs are users, PUs are resources.
pub fn cr_preferences(instance: &CrInstance, report: &SensingReport) -> Result<ValidatedProfile> {
    profile_of(&cr_context(instance, report), instance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrMethod {
    ModifiedDA,
    ClassicalDA,
    Random,
}

impl CrMethod {
    pub const ALL: [CrMethod; 3] = [CrMethod::ModifiedDA, CrMethod::ClassicalDA, CrMethod::Random];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrAllocation {
    pub matching: Matching,
    /// Realised rate summed over channels whose PU is idle.
    pub sum_rate: f64,
    pub proposals: usize,
    pub rounds: usize,
    /// Instability under the profile the method ranked by; the sensing-aware
    /// profile for `Random`.
    pub blocking_pairs: usize,
    /// Acceptable pairs of that profile.
    pub acceptable_pairs: usize,
}

pub fn sum_rate(instance: &CrInstance, matching: &Matching) -> f64 {
    matching
        .pairs()
        .filter(|&(_, pu)| instance.is_idle(pu.0))
        .map(|(su, pu)| instance.rate(su.0, pu.0))
        .sum()
}

/// Sensing draws use one sub-seed of `rng_seed`, the random baseline another.
pub fn cr_allocate(instance: &CrInstance, method: CrMethod, rng_seed: u64) -> Result<CrAllocation> {
    instance.validate()?;
    let report = sense(instance, derive_seed(rng_seed, stream::SENSING));
    let aware = cr_preferences(instance, &report)?;
    let (matching, proposals, rounds, profile) = match method {
        CrMethod::ModifiedDA => {
            let out = deferred_acceptance_with_stats(&aware, Proposer::Users);
            (out.matching, out.proposals, out.rounds, aware)
        }
        CrMethod::ClassicalDA => {
            let profile = profile_of(&classical_context(instance), instance)?;
            let out = deferred_acceptance_with_stats(&profile, Proposer::Users);
            (out.matching, out.proposals, out.rounds, profile)
        }
        CrMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rng_seed, stream::ALLOCATION));
            (random_allocation(instance, &mut rng), 0, 0, aware)
        }
    };
    Ok(CrAllocation {
        sum_rate: sum_rate(instance, &matching),
        blocking_pairs: instability_under(&matching, &profile)?,
        acceptable_pairs: profile.acceptable_pairs(),
        matching,
        proposals,
        rounds,
    })
}

/// Uniformly random SUs on distinct idle channels.
fn random_allocation<R: Rng>(instance: &CrInstance, rng: &mut R) -> Matching {
    let mut idle: Vec<usize> = (0..instance.n_pu()).filter(|&pu| instance.is_idle(pu)).collect();
    let mut sus: Vec<usize> = (0..instance.n_su()).collect();
    idle.shuffle(rng);
    sus.shuffle(rng);
    Matching::from_pairs(
        instance.n_su(),
        instance.n_pu(),
        sus.into_iter().zip(idle).map(|(s, p)| (UserId(s), ResourceId(p))),
    )
}

/// Instance generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrConfig {
    pub n_su: usize,
    pub n_pu: usize,
    pub prior_active: f64,
    /// Mean per-sample sensing SNR.
    pub sensing_snr_db: f64,
    /// Log-normal spread of the sensing SNR across SU-PU pairs.
    pub sensing_snr_sigma_db: f64,
    pub sensing_samples: usize,
    /// Mean and log-normal spread of the SU-to-PU-receiver power gain.
    pub gain_mean_db: f64,
    pub gain_sigma_db: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
}

impl Default for CrConfig {
    fn default() -> Self {
        CrConfig {
            n_su: 4,
            n_pu: 4,
            prior_active: 0.5,
            sensing_snr_db: -5.0,
            sensing_snr_sigma_db: 3.0,
            sensing_samples: 100,
            gain_mean_db: -100.0,
            gain_sigma_db: 8.0,
            tx_power_dbm: 20.0,
            noise_dbm: -90.0,
        }
    }
}

impl CrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_su == 0 || self.n_pu == 0 {
            return Err(invalid("n_su/n_pu", "both sides need at least one agent"));
        }
        if !(0.0..=1.0).contains(&self.prior_active) {
            return Err(invalid("prior_active", "must lie in [0, 1]"));
        }
        if self.sensing_samples == 0 {
            return Err(invalid("sensing_samples", "must be positive"));
        }
        check_all("sensing_snr_sigma_db/gain_sigma_db", [self.sensing_snr_sigma_db, self.gain_sigma_db], 0.0)?;
        check_all(
            "sensing_snr_db/gain_mean_db/tx_power_dbm/noise_dbm",
            [self.sensing_snr_db, self.gain_mean_db, self.tx_power_dbm, self.noise_dbm],
            f64::MIN,
        )
    }

    /// Draws PU activity from the prior and log-normal gains and sensing SNRs.
    pub fn generate(&self, seed: u64) -> Result<CrInstance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::INSTANCE));
        let gain_db = Normal::new(self.gain_mean_db, self.gain_sigma_db).map_err(|e| invalid("gain_sigma_db", e.to_string()))?;
        let snr_db = Normal::new(self.sensing_snr_db, self.sensing_snr_sigma_db)
            .map_err(|e| invalid("sensing_snr_sigma_db", e.to_string()))?;
        let pu_activity = (0..self.n_pu)
            .map(|_| if rng.random_bool(self.prior_active) { PuActivity::Active } else { PuActivity::Inactive })
            .collect();
        let gain = (0..self.n_su)
            .map(|_| (0..self.n_pu).map(|_| db_to_linear(gain_db.sample(&mut rng))).collect())
            .collect();
        let sensing_snr = (0..self.n_su)
            .map(|_| (0..self.n_pu).map(|_| db_to_linear(snr_db.sample(&mut rng))).collect())
            .collect();
        let instance = CrInstance {
            gain,
            noise_power: dbm_to_watts(self.noise_dbm),
            tx_power: dbm_to_watts(self.tx_power_dbm),
            pu_activity,
            prior_active: vec![self.prior_active; self.n_pu],
            sensing_snr,
            sensing_samples: self.sensing_samples,
        };
        instance.validate()?;
        Ok(instance)
    }
}
