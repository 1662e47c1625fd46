//! Uplink user association across macro and small cells with a congested
//! backhaul.
//!
//! A user values a station by its link quality (bit error rate) minus the
//! queueing delay of the station's backhaul, which grows with every tenant:
//! that delay is the peer effect. Stations rank users by how strongly the
//! station, after cell biasing, stands out among the user's options.

use matchkit::externality::{
    exchange_stability_check, induced_instability, snapshot_preferences, transfer_phase, AgentUtilities,
    SwapRequest, TransferPolicy, UtilityContext,
};
use matchkit::{deferred_acceptance_with_stats, Matching, Proposer, Quotas, ResourceId, UserId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_all, invalid, Result};
use crate::radio::{db_to_linear, dbm_to_watts, path_loss_db, q_function};
use crate::seed::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// `Q(sqrt(2 snr))`
    #[default]
    Bpsk,
    /// Gray-coded, per bit at symbol SNR: `Q(sqrt(snr))`
    Qpsk,
}

impl Modulation {
    pub fn ber(self, sinr: f64) -> f64 {
        match self {
            Modulation::Bpsk => q_function((2.0 * sinr).sqrt()),
            Modulation::Qpsk => q_function(sinr.sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HetNetInstance {
    /// Linear gain, `gain[user][station]`.
    pub gain: Vec<Vec<f64>>,
    /// Watts.
    pub tx_power: f64,
    /// Watts.
    pub noise_power: f64,
    pub is_macro: Vec<bool>,
    pub quota: Vec<usize>,
    /// Backhaul service rate, packets/s.
    pub capacity: Vec<f64>,
    /// Arrival rate per user, packets/s.
    pub load: Vec<f64>,
    /// Weight of delay against link quality, in `[0, 1]`.
    pub lambda: f64,
    /// Cell-biasing factor per station.
    pub bias: Vec<f64>,
    /// Linear SINR below which a link is unusable.
    pub sinr_threshold: f64,
    pub ber_floor: f64,
    /// Converts seconds of delay into utility units.
    pub delay_scale: f64,
    #[serde(default)]
    pub modulation: Modulation,
}

impl HetNetInstance {
    pub fn n_users(&self) -> usize {
        self.gain.len()
    }

    pub fn n_stations(&self) -> usize {
        self.quota.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n_s = self.n_stations();
        if self.n_users() == 0 || n_s == 0 {
            return Err(invalid("n_users/n_stations", "both sides need at least one agent"));
        }
        if self.gain.iter().any(|row| row.len() != n_s)
            || self.is_macro.len() != n_s
            || self.capacity.len() != n_s
            || self.bias.len() != n_s
        {
            return Err(invalid("stations", format!("per-station tables must have {n_s} entries")));
        }
        if self.load.len() != self.n_users() {
            return Err(invalid("load", format!("expected {} entries", self.n_users())));
        }
        if self.quota.contains(&0) {
            return Err(invalid("quota", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid("lambda", "must lie in [0, 1]"));
        }
        check_all("gain", self.gain.iter().flatten().copied(), f64::MIN_POSITIVE)?;
        check_all("capacity", self.capacity.iter().copied(), f64::MIN_POSITIVE)?;
        check_all("load", self.load.iter().copied(), f64::MIN_POSITIVE)?;
        check_all("bias", self.bias.iter().copied(), f64::MIN_POSITIVE)?;
        check_all("tx_power/noise_power", [self.tx_power, self.noise_power], f64::MIN_POSITIVE)?;
        check_all("sinr_threshold/delay_scale", [self.sinr_threshold, self.delay_scale], 0.0)?;
        check_all("ber_floor", [self.ber_floor], f64::MIN_POSITIVE)
    }

    /// Orthogonal uplink: no inter-cell interference.
    pub fn sinr(&self, u: usize, s: usize) -> f64 {
        self.gain[u][s] * self.tx_power / self.noise_power
    }

    pub fn ber(&self, u: usize, s: usize) -> f64 {
        self.modulation.ber(self.sinr(u, s))
    }

    pub fn is_acceptable(&self, u: usize, s: usize) -> bool {
        self.sinr(u, s) >= self.sinr_threshold
    }

    /// `(1 - lambda) * -log10(BER)`, with the BER clamped at the floor.
    pub fn link_score(&self, u: usize, s: usize) -> f64 {
        (1.0 - self.lambda) * -self.ber(u, s).max(self.ber_floor).log10()
    }

    /// Mean residence time `1 / (C - load)`; infinite once the load reaches C.
    pub fn delay(&self, s: usize, total_load: f64) -> f64 {
        let slack = self.capacity[s] - total_load;
        if slack > 0.0 {
            1.0 / slack
        } else {
            f64::INFINITY
        }
    }

    fn utility_at_load(&self, u: usize, s: usize, total_load: f64) -> f64 {
        if !self.is_acceptable(u, s) {
            return f64::NEG_INFINITY;
        }
        if self.lambda == 0.0 {
            return self.link_score(u, s);
        }
        let d = self.delay(s, total_load);
        if d.is_infinite() {
            f64::NEG_INFINITY
        } else {
            self.link_score(u, s) - self.lambda * self.delay_scale * d
        }
    }

    fn station_score(&self, u: usize, s: usize) -> f64 {
        if !self.is_acceptable(u, s) {
            return f64::NEG_INFINITY;
        }
        let best = (0..self.n_stations())
            .map(|t| self.bias[t] * self.gain[u][t])
            .fold(0.0, f64::max);
        self.bias[s] * self.gain[u][s] / best
    }

    pub fn quotas(&self) -> Quotas {
        Quotas::many_to_one(self.n_users(), self.quota.clone())
    }
}

/// Utilities under the actual tenant sets.
#[derive(Debug, Clone, Copy)]
pub struct HetNetContext<'a> {
    pub instance: &'a HetNetInstance,
}

impl UtilityContext for HetNetContext<'_> {
    fn n_users(&self) -> usize {
        self.instance.n_users()
    }
    fn n_resources(&self) -> usize {
        self.instance.n_stations()
    }
    fn user_utility(&self, user: UserId, station: ResourceId, matching: &Matching) -> f64 {
        let others: f64 = matching
            .users_of(station)
            .iter()
            .filter(|&&t| t != user)
            .map(|t| self.instance.load[t.0])
            .sum();
        self.instance
            .utility_at_load(user.0, station.0, others + self.instance.load[user.0])
    }
    fn resource_utility(&self, station: ResourceId, user: UserId, _: &Matching) -> f64 {
        self.instance.station_score(user.0, station.0)
    }
}

/// Bootstrap utilities: every station is assumed full, with the heaviest
/// other users filling the remaining slots.
#[derive(Debug, Clone)]
pub struct WorstCaseContext<'a> {
    instance: &'a HetNetInstance,
    by_load: Vec<usize>,
}

impl<'a> WorstCaseContext<'a> {
    pub fn new(instance: &'a HetNetInstance) -> Self {
        let mut by_load: Vec<usize> = (0..instance.n_users()).collect();
        by_load.sort_by(|&a, &b| instance.load[b].total_cmp(&instance.load[a]).then(a.cmp(&b)));
        WorstCaseContext { instance, by_load }
    }

    fn co_tenant_load(&self, u: usize, s: usize) -> f64 {
        self.by_load
            .iter()
            .filter(|&&t| t != u)
            .take(self.instance.quota[s] - 1)
            .map(|&t| self.instance.load[t])
            .sum()
    }
}

impl UtilityContext for WorstCaseContext<'_> {
    fn n_users(&self) -> usize {
        self.instance.n_users()
    }
    fn n_resources(&self) -> usize {
        self.instance.n_stations()
    }
    fn user_utility(&self, user: UserId, station: ResourceId, _: &Matching) -> f64 {
        let load = self.co_tenant_load(user.0, station.0) + self.instance.load[user.0];
        self.instance.utility_at_load(user.0, station.0, load)
    }
    fn resource_utility(&self, station: ResourceId, user: UserId, _: &Matching) -> f64 {
        self.instance.station_score(user.0, station.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HetNetMethod {
    MatchingWithTransfers,
    BestNeighbor,
}

impl HetNetMethod {
    pub const ALL: [HetNetMethod; 2] = [HetNetMethod::MatchingWithTransfers, HetNetMethod::BestNeighbor];
}

#[derive(Debug, Clone, PartialEq)]
pub struct HetNetOutcome {
    pub matching: Matching,
    /// Mean true utility over all users; unmatched users count as zero.
    pub avg_user_utility: f64,
    pub da_rounds: usize,
    pub proposals: usize,
    pub swaps: Vec<SwapRequest>,
    /// Deferred-acceptance rounds plus executed transfers.
    pub iterations: usize,
    /// Two-sided instability under the preferences the final matching induces.
    pub blocking_pairs: usize,
    pub exchange_stable: bool,
    pub acceptable_pairs: usize,
}

pub fn avg_user_utility(instance: &HetNetInstance, matching: &Matching) -> f64 {
    let u = AgentUtilities::evaluate(&HetNetContext { instance }, matching);
    u.user_total() / instance.n_users() as f64
}

pub fn hetnet_associate(instance: &HetNetInstance, method: HetNetMethod) -> Result<HetNetOutcome> {
    instance.validate()?;
    let quotas = instance.quotas();
    let truth = HetNetContext { instance };
    let empty = Matching::new(instance.n_users(), instance.n_stations());
    let bootstrap = snapshot_preferences(&WorstCaseContext::new(instance), &empty, &quotas)?;
    let (matching, da_rounds, proposals, swaps) = match method {
        HetNetMethod::MatchingWithTransfers => {
            let da = deferred_acceptance_with_stats(&bootstrap, Proposer::Users);
            let moved = transfer_phase(&da.matching, &truth, &quotas, TransferPolicy::UserImproving)?;
            (moved.matching, da.rounds, da.proposals, moved.swaps)
        }
        HetNetMethod::BestNeighbor => (best_neighbor(instance), 0, 0, Vec::new()),
    };
    Ok(HetNetOutcome {
        avg_user_utility: avg_user_utility(instance, &matching),
        iterations: da_rounds + swaps.len(),
        blocking_pairs: induced_instability(&truth, &matching, &quotas)?,
        exchange_stable: exchange_stability_check(&matching, &truth, &quotas)?,
        acceptable_pairs: bootstrap.acceptable_pairs(),
        matching,
        da_rounds,
        proposals,
        swaps,
    })
}

/// Strongest usable station with a free slot, users in index order.
fn best_neighbor(instance: &HetNetInstance) -> Matching {
    let mut m = Matching::new(instance.n_users(), instance.n_stations());
    for u in 0..instance.n_users() {
        let pick = (0..instance.n_stations())
            .filter(|&s| instance.is_acceptable(u, s) && m.users_of(ResourceId(s)).len() < instance.quota[s])
            .reduce(|a, b| if instance.gain[u][b] > instance.gain[u][a] { b } else { a });
        if let Some(s) = pick {
            m.insert(UserId(u), ResourceId(s));
        }
    }
    m
}

/// Instance generator parameters. Stations and users are dropped uniformly
/// on a square; gains follow log-distance path loss with log-normal
/// shadowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HetNetConfig {
    pub n_users: usize,
    pub n_macro: usize,
    pub n_sbs: usize,
    /// Side of the square, metres.
    pub area: f64,
    pub path_loss_exponent: f64,
    /// Loss at one metre.
    pub reference_loss_db: f64,
    pub shadowing_sigma_db: f64,
    pub macro_rx_gain_db: f64,
    pub sbs_rx_gain_db: f64,
    pub user_tx_dbm: f64,
    pub noise_dbm: f64,
    pub macro_quota: usize,
    pub sbs_quota: usize,
    pub macro_capacity: f64,
    pub sbs_capacity: f64,
    /// Per-user arrival rate drawn uniformly from `[load_min, load_max]`.
    pub load_min: f64,
    pub load_max: f64,
    pub lambda: f64,
    pub macro_bias: f64,
    pub sbs_bias: f64,
    pub sinr_threshold_db: f64,
    pub ber_floor: f64,
    pub delay_scale: f64,
    pub modulation: Modulation,
}

impl Default for HetNetConfig {
    fn default() -> Self {
        HetNetConfig {
            n_users: 50,
            n_macro: 2,
            n_sbs: 10,
            area: 1000.0,
            path_loss_exponent: 3.5,
            reference_loss_db: 30.0,
            shadowing_sigma_db: 4.0,
            macro_rx_gain_db: 15.0,
            sbs_rx_gain_db: 5.0,
            user_tx_dbm: 23.0,
            noise_dbm: -104.0,
            macro_quota: 20,
            sbs_quota: 8,
            macro_capacity: 300.0,
            sbs_capacity: 100.0,
            load_min: 2.0,
            load_max: 8.0,
            lambda: 0.5,
            macro_bias: 1.0,
            sbs_bias: 2.0,
            sinr_threshold_db: 0.0,
            ber_floor: 1e-12,
            delay_scale: 1000.0,
            modulation: Modulation::Bpsk,
        }
    }
}

impl HetNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_macro + self.n_sbs == 0 {
            return Err(invalid("n_users/n_macro/n_sbs", "need at least one user and one station"));
        }
        if self.macro_quota == 0 || self.sbs_quota == 0 {
            return Err(invalid("macro_quota/sbs_quota", "must be at least 1"));
        }
        if !(self.load_min > 0.0 && self.load_min <= self.load_max && self.load_max.is_finite()) {
            return Err(invalid("load_min/load_max", "need 0 < load_min <= load_max"));
        }
        check_all(
            "area/macro_capacity/sbs_capacity/macro_bias/sbs_bias/ber_floor",
            [self.area, self.macro_capacity, self.sbs_capacity, self.macro_bias, self.sbs_bias, self.ber_floor],
            f64::MIN_POSITIVE,
        )?;
        check_all("shadowing_sigma_db/delay_scale/path_loss_exponent", [self.shadowing_sigma_db, self.delay_scale, self.path_loss_exponent], 0.0)?;
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid("lambda", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<HetNetInstance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream::INSTANCE));
        let shadow = Normal::new(0.0, self.shadowing_sigma_db).map_err(|e| invalid("shadowing_sigma_db", e.to_string()))?;
        let n_s = self.n_macro + self.n_sbs;
        let point = |rng: &mut ChaCha8Rng| (rng.random_range(0.0..self.area), rng.random_range(0.0..self.area));
        let stations: Vec<(f64, f64)> = (0..n_s).map(|_| point(&mut rng)).collect();
        let users: Vec<(f64, f64)> = (0..self.n_users).map(|_| point(&mut rng)).collect();
        let is_macro: Vec<bool> = (0..n_s).map(|s| s < self.n_macro).collect();
        let gain = users
            .iter()
            .map(|&(ux, uy)| {
                stations
                    .iter()
                    .zip(&is_macro)
                    .map(|(&(sx, sy), &mac)| {
                        let d = (ux - sx).hypot(uy - sy);
                        let rx = if mac { self.macro_rx_gain_db } else { self.sbs_rx_gain_db };
                        db_to_linear(rx - path_loss_db(d, self.reference_loss_db, self.path_loss_exponent) + shadow.sample(&mut rng))
                    })
                    .collect()
            })
            .collect();
        let load = (0..self.n_users).map(|_| rng.random_range(self.load_min..=self.load_max)).collect();
        fn pick<T>(mac: bool, a: T, b: T) -> T {
            if mac { a } else { b }
        }
        let instance = HetNetInstance {
            gain,
            tx_power: dbm_to_watts(self.user_tx_dbm),
            noise_power: dbm_to_watts(self.noise_dbm),
            quota: is_macro.iter().map(|&m| pick(m, self.macro_quota, self.sbs_quota)).collect(),
            capacity: is_macro.iter().map(|&m| pick(m, self.macro_capacity, self.sbs_capacity)).collect(),
            bias: is_macro.iter().map(|&m| pick(m, self.macro_bias, self.sbs_bias)).collect(),
            is_macro,
            load,
            lambda: self.lambda,
            sinr_threshold: db_to_linear(self.sinr_threshold_db),
            ber_floor: self.ber_floor,
            delay_scale: self.delay_scale,
            modulation: self.modulation,
        };
        instance.validate()?;
        Ok(instance)
    }
}

/// Mean `MatchingWithTransfers` iterations per user count.
pub fn hetnet_convergence_curve(config: &HetNetConfig, sizes: &[usize], seeds: &[u64]) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&n| {
            let cfg = HetNetConfig { n_users: n, ..config.clone() };
            let mut total = 0usize;
            for &seed in seeds {
                let inst = cfg.generate(seed)?;
                total += hetnet_associate(&inst, HetNetMethod::MatchingWithTransfers)?.iterations;
            }
            Ok((n, total as f64 / seeds.len().max(1) as f64))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(points: &[(usize, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| ((x as f64).ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
