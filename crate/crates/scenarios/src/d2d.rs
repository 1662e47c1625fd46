//! Device-to-device (D2D) pairs sharing cellular (CU) uplink bands.
//!
//! D2D users propose to cellular users. A pair is admissible only if the CU
//! keeps its SINR floor despite the D2D interference and the D2D link
//! reaches its rate floor. CUs rank D2D users either by the payment they
//! offer or by the interference they cause.

use matchkit::externality::{snapshot_preferences, StaticContext};
use matchkit::{
    deferred_acceptance_with_stats, enumerate_stable_matchings, find_blocking_pairs, BlockingPair, Matching,
    PreferenceProfile, Proposer, Quotas, ResourceId, ValidatedProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_all, invalid, Result};
use crate::radio::{db_to_linear, shannon_rate};
use crate::seed::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CuMode {
    #[default]
    Payment,
    Interference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dInstance {
    /// D2D spectral efficiency on each CU band, `du_rate[du][cu]`.
    pub du_rate: Vec<Vec<f64>>,
    /// Interference power each DU puts on each CU, `cu_interference[cu][du]`.
    pub cu_interference: Vec<Vec<f64>>,
    /// Received CU signal power.
    pub cu_signal: Vec<f64>,
    pub noise_power: f64,
    /// Payment each DU offers each CU for its band, `du_payment[du][cu]`.
    pub du_payment: Vec<Vec<f64>>,
    /// Linear.
    pub sinr_floor_cu: f64,
    pub rate_floor_du: f64,
}

impl D2dInstance {
    pub fn n_du(&self) -> usize {
        self.du_rate.len()
    }

    pub fn n_cu(&self) -> usize {
        self.cu_signal.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n_du, n_cu) = (self.n_du(), self.n_cu());
        if n_du == 0 || n_cu == 0 {
            return Err(invalid("n_du/n_cu", "both sides need at least one agent"));
        }
        if self.du_rate.iter().any(|r| r.len() != n_cu)
            || self.cu_interference.len() != n_cu
            || self.cu_interference.iter().any(|r| r.len() != n_du)
            || self.du_payment.len() != n_du
            || self.du_payment.iter().any(|r| r.len() != n_cu)
        {
            return Err(invalid("tables", format!("inconsistent with {n_du} DUs and {n_cu} CUs")));
        }
        check_all("du_rate", self.du_rate.iter().flatten().copied(), 0.0)?;
        check_all("cu_interference", self.cu_interference.iter().flatten().copied(), 0.0)?;
        check_all("cu_signal", self.cu_signal.iter().copied(), 0.0)?;
        check_all("du_payment", self.du_payment.iter().flatten().copied(), 0.0)?;
        check_all("noise_power", [self.noise_power], f64::MIN_POSITIVE)?;
        check_all("floors", [self.sinr_floor_cu, self.rate_floor_du], 0.0)
    }

    pub fn cu_sinr(&self, cu: usize, du: usize) -> f64 {
        self.cu_signal[cu] / (self.noise_power + self.cu_interference[cu][du])
    }

    pub fn is_admissible(&self, du: usize, cu: usize) -> bool {
        self.du_rate[du][cu] >= self.rate_floor_du && self.cu_sinr(cu, du) >= self.sinr_floor_cu
    }

    /// What `cu` earns from hosting `du`.
    pub fn cu_value(&self, cu: usize, du: usize, mode: CuMode) -> f64 {
        match mode {
            CuMode::Payment => self.du_payment[du][cu],
            CuMode::Interference => -self.cu_interference[cu][du],
        }
    }
}

fn context(instance: &D2dInstance, mode: CuMode) -> StaticContext {
    let gate = |du: usize, cu: usize, v: f64| if instance.is_admissible(du, cu) { v } else { f64::NEG_INFINITY };
    StaticContext::new(
        (0..instance.n_du())
            .map(|d| (0..instance.n_cu()).map(|c| gate(d, c, instance.du_rate[d][c])).collect())
            .collect(),
        (0..instance.n_cu())
            .map(|c| (0..instance.n_du()).map(|d| gate(d, c, instance.cu_value(c, d, mode))).collect())
            .collect(),
    )
}

/// DUs are users, CUs are resources; inadmissible pairs are dropped.
pub fn d2d_preferences(instance: &D2dInstance, mode: CuMode) -> Result<ValidatedProfile> {
    instance.validate()?;
    let (n_du, n_cu) = (instance.n_du(), instance.n_cu());
    Ok(snapshot_preferences(
        &context(instance, mode),
        &Matching::new(n_du, n_cu),
        &Quotas::one_to_one(n_du, n_cu),
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct D2dOutcome {
    pub matching: Matching,
    /// True rate per DU; zero when unmatched.
    pub du_utilities: Vec<f64>,
    /// Payment or negative interference per CU; zero when alone.
    pub cu_utilities: Vec<f64>,
    pub system_utility: f64,
    pub proposals: usize,
}

impl D2dOutcome {
    pub fn total_du_utility(&self) -> f64 {
        self.du_utilities.iter().sum()
    }
}

pub fn evaluate(instance: &D2dInstance, mode: CuMode, matching: &Matching, proposals: usize) -> D2dOutcome {
    let mut du_utilities = vec![0.0; instance.n_du()];
    let mut cu_utilities = vec![0.0; instance.n_cu()];
    for (d, c) in matching.pairs() {
        du_utilities[d.0] = instance.du_rate[d.0][c.0];
        cu_utilities[c.0] = instance.cu_value(c.0, d.0, mode);
    }
    D2dOutcome {
        system_utility: du_utilities.iter().sum::<f64>() + cu_utilities.iter().sum::<f64>(),
        matching: matching.clone(),
        du_utilities,
        cu_utilities,
        proposals,
    }
}

/// DU-proposing deferred acceptance.
pub fn d2d_match(instance: &D2dInstance, mode: CuMode) -> Result<D2dOutcome> {
    let profile = d2d_preferences(instance, mode)?;
    let da = deferred_acceptance_with_stats(&profile, Proposer::Users);
    Ok(evaluate(instance, mode, &da.matching, da.proposals))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheatReport {
    /// DUs strictly better off than under truthful reporting.
    pub cabal: Vec<usize>,
    /// DUs whose reported list differs from their true list.
    pub accomplices: Vec<usize>,
    pub true_profile: ValidatedProfile,
    /// As reported, before validation prunes the CU side.
    pub reported_profile: PreferenceProfile,
    pub truthful: D2dOutcome,
    pub cheated: D2dOutcome,
    /// Blocking pairs of the cheated matching under the true preferences.
    pub true_blocking_pairs: Vec<BlockingPair>,
}

/// Largest accomplice coalition tried by [`d2d_cheat`].
pub const MAX_ACCOMPLICES: usize = 2;

/// Coalition misreport search.
///
/// An accomplice either truncates its list after some position or drops a
/// single CU from it. Either move can reroute the rejection chains of
/// deferred acceptance and leave another DU, or the accomplice itself, with a
/// better partner. All coalitions of up to [`MAX_ACCOMPLICES`] DUs are tried.
/// A misreport qualifies when no DU ends up worse off in true rate and
/// system utility does not fall; the one with the highest total DU rate
/// wins, earliest in search order on ties. When the true preferences admit
/// a single stable matching, or nothing beats the truthful total, the
/// truthful outcome is returned.
pub fn d2d_cheat(instance: &D2dInstance, mode: CuMode) -> Result<CheatReport> {
    let true_profile = d2d_preferences(instance, mode)?;
    if instance.n_du() < 2 {
        return Err(invalid("n_du", "cheating needs at least two DUs"));
    }
    let da = deferred_acceptance_with_stats(&true_profile, Proposer::Users);
    let truthful = evaluate(instance, mode, &da.matching, da.proposals);
    let honest = true_profile.profile().clone();
    let unchanged = |truthful: D2dOutcome, true_profile: ValidatedProfile| CheatReport {
        cabal: Vec::new(),
        accomplices: Vec::new(),
        reported_profile: true_profile.profile().clone(),
        true_profile,
        cheated: truthful.clone(),
        truthful,
        true_blocking_pairs: Vec::new(),
    };
    if enumerate_stable_matchings(&true_profile)?.len() == 1 {
        return Ok(unchanged(truthful, true_profile));
    }

    let options: Vec<Vec<Vec<ResourceId>>> = honest.user_prefs.iter().map(|l| misreports(l)).collect();
    let mut coalitions: Vec<Vec<(usize, &[ResourceId])>> = Vec::new();
    for (a, first) in options.iter().enumerate() {
        for x in first {
            coalitions.push(vec![(a, x)]);
            if MAX_ACCOMPLICES >= 2 {
                for (b, second) in options.iter().enumerate().skip(a + 1) {
                    for y in second {
                        coalitions.push(vec![(a, x), (b, y)]);
                    }
                }
            }
        }
    }

    let mut best: Option<(D2dOutcome, PreferenceProfile, Vec<usize>)> = None;
    let mut best_total = truthful.total_du_utility();
    for coalition in coalitions {
        let mut reported = honest.clone();
        for &(d, list) in &coalition {
            reported.user_prefs[d] = list.to_vec();
        }
        let run = deferred_acceptance_with_stats(&reported.clone().validate()?, Proposer::Users);
        let outcome = evaluate(instance, mode, &run.matching, run.proposals);
        let nobody_loses = outcome
            .du_utilities
            .iter()
            .zip(&truthful.du_utilities)
            .all(|(c, t)| c >= t);
        let total = outcome.total_du_utility();
        if nobody_loses && outcome.system_utility >= truthful.system_utility && total > best_total {
            best_total = total;
            best = Some((outcome, reported, coalition.iter().map(|&(d, _)| d).collect()));
        }
    }

    let Some((cheated, reported_profile, accomplices)) = best else {
        return Ok(unchanged(truthful, true_profile));
    };
    let cabal = (0..instance.n_du())
        .filter(|&d| cheated.du_utilities[d] > truthful.du_utilities[d])
        .collect();
    let true_blocking_pairs = find_blocking_pairs(&cheated.matching, &true_profile)?;
    Ok(CheatReport {
        cabal,
        accomplices,
        true_profile,
        reported_profile,
        truthful,
        cheated,
        true_blocking_pairs,
    })
}

/// Distinct proper truncations and single-entry deletions of `list`.
fn misreports(list: &[ResourceId]) -> Vec<Vec<ResourceId>> {
    let mut out: Vec<Vec<ResourceId>> = (0..list.len()).map(|k| list[..k].to_vec()).collect();
    for i in 0..list.len().saturating_sub(1) {
        let mut l = list.to_vec();
        l.remove(i);
        out.push(l);
    }
    out
}

/// Instance generator parameters; powers are relative to unit noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2dConfig {
    pub n_cu: usize,
    pub n_du: usize,
    /// D2D link SNR on a CU band, log-normal.
    pub du_snr_mean_db: f64,
    pub du_snr_sigma_db: f64,
    pub cu_snr_mean_db: f64,
    pub cu_snr_sigma_db: f64,
    pub interference_mean_db: f64,
    pub interference_sigma_db: f64,
    /// Per-pair payment offers drawn uniformly from `[price_min, price_max]`.
    pub price_min: f64,
    pub price_max: f64,
    pub sinr_floor_cu_db: f64,
    pub rate_floor_du: f64,
    pub cu_mode: CuMode,
}

impl Default for D2dConfig {
    fn default() -> Self {
        D2dConfig {
            n_cu: 5,
            n_du: 5,
            du_snr_mean_db: 10.0,
            du_snr_sigma_db: 6.0,
            cu_snr_mean_db: 20.0,
            cu_snr_sigma_db: 4.0,
            interference_mean_db: 5.0,
            interference_sigma_db: 8.0,
            price_min: 0.0,
            price_max: 4.0,
            sinr_floor_cu_db: 5.0,
            rate_floor_du: 0.5,
            cu_mode: CuMode::Payment,
        }
    }
}

impl D2dConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cu == 0 || self.n_du == 0 {
            return Err(invalid("n_cu/n_du", "both sides need at least one agent"));
        }
        if !(0.0 <= self.price_min && self.price_min <= self.price_max && self.price_max.is_finite()) {
            return Err(invalid("price_min/price_max", "need 0 <= price_min <= price_max"));
        }
        check_all(
            "*_sigma_db",
            [self.du_snr_sigma_db, self.cu_snr_sigma_db, self.interference_sigma_db],
            0.0,
        )?;
        check_all("rate_floor_du", [self.rate_floor_du], 0.0)?;
        check_all(
            "*_db",
            [self.du_snr_mean_db, self.cu_snr_mean_db, self.interference_mean_db, self.sinr_floor_cu_db],
            f64::MIN,
        )
    }

    pub fn generate(&self, seed: u64) -> Result<D2dInstance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::INSTANCE));
        let normal = |m: f64, s: f64| Normal::new(m, s).map_err(|e| invalid("*_sigma_db", e.to_string()));
        let du_snr = normal(self.du_snr_mean_db, self.du_snr_sigma_db)?;
        let cu_snr = normal(self.cu_snr_mean_db, self.cu_snr_sigma_db)?;
        let interference = normal(self.interference_mean_db, self.interference_sigma_db)?;
        let du_rate = (0..self.n_du)
            .map(|_| (0..self.n_cu).map(|_| shannon_rate(db_to_linear(du_snr.sample(&mut rng)))).collect())
            .collect();
        let cu_interference = (0..self.n_cu)
            .map(|_| (0..self.n_du).map(|_| db_to_linear(interference.sample(&mut rng))).collect())
            .collect();
        let cu_signal = (0..self.n_cu).map(|_| db_to_linear(cu_snr.sample(&mut rng))).collect();
        let du_payment = (0..self.n_du)
            .map(|_| (0..self.n_cu).map(|_| rng.random_range(self.price_min..=self.price_max)).collect())
            .collect();
        let instance = D2dInstance {
            du_rate,
            cu_interference,
            cu_signal,
            noise_power: 1.0,
            du_payment,
            sinr_floor_cu: db_to_linear(self.sinr_floor_cu_db),
            rate_floor_du: self.rate_floor_du,
        };
        instance.validate()?;
        Ok(instance)
    }
}
