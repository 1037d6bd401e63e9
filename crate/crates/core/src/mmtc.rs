//! Grant-free mMTC uplink on an NB-IoT carrier.
//!
//! A static population of single-antenna users sits uniformly in the cell.
//! In every slot each user sends a packet with probability `arrival_rate`
//! on a uniformly chosen tone. A tone carrying more packets than the
//! receiver can separate (`2M` for WL, `M` for CL) loses all of them; the
//! rest are detected jointly over a fresh Rayleigh channel and each packet
//! survives only if its link is not in outage. SIC receivers stop at the
//! first failed stage.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{db_to_linear, sample_distance, Pathloss};
use crate::montecarlo::{run_chunks, Estimate, MomentAccumulator, DEFAULT_CHUNK};
use crate::random_matrix::{sample_channel, wl_transform};
use crate::receivers::{sinr_report, Criterion, Family, ReceiverSpec};
use crate::rng::{child_seed, label_key, stream_rng, SimRng};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Least number of slots per run.
pub const MIN_SLOTS: usize = 1_000;

/// System parameters. Defaults describe a 180 kHz carrier with 48 tones,
/// 23 dBm users, 32 ms TTIs carrying 32-bit packets at R = 0.3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmtcConfig {
    pub bandwidth_hz: f64,
    pub tones: usize,
    pub subcarrier_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    /// Slot length.
    pub tti_ms: f64,
    pub packet_bits: u32,
    /// Packet probability per user per slot.
    pub arrival_rate: f64,
    /// Per-user rate in bits/s/Hz.
    pub rate: f64,
    pub users: usize,
    /// Base station antennas.
    pub m: usize,
    pub family: Family,
    pub criterion: Criterion,
    pub sic: bool,
    /// CL users send at twice the rate over half the TTI.
    pub half_tti: bool,
    pub drop_target: f64,
    pub cell_radius_km: f64,
    pub min_distance_km: f64,
    pub pathloss: Pathloss,
    pub shadow_sigma_db: f64,
}

impl Default for MmtcConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 180e3,
            tones: 48,
            subcarrier_hz: 3.75e3,
            tx_power_dbm: 23.0,
            noise_figure_db: 5.0,
            tti_ms: 32.0,
            packet_bits: 32,
            arrival_rate: 4.16e-6,
            rate: 0.3,
            users: 1_000,
            m: 2,
            family: Family::Wl,
            criterion: Criterion::Mmse,
            sic: true,
            half_tti: false,
            drop_target: 0.01,
            cell_radius_km: 0.91,
            min_distance_km: 0.001,
            pathloss: Pathloss::default(),
            shadow_sigma_db: 8.0,
        }
    }
}

impl MmtcConfig {
    pub fn validate(&self) -> Result<()> {
        let span = self.tones as f64 * self.subcarrier_hz;
        if self.tones == 0 || !((span - self.bandwidth_hz).abs() <= 1e-9 * self.bandwidth_hz) {
            return Err(Error::Domain(format!(
                "{} tones x {} Hz != {} Hz",
                self.tones, self.subcarrier_hz, self.bandwidth_hz
            )));
        }
        if !(self.arrival_rate > 0.0 && self.arrival_rate <= 1.0) {
            return Err(Error::Domain(format!(
                "arrival rate {} outside (0, 1]",
                self.arrival_rate
            )));
        }
        if !(self.drop_target > 0.0 && self.drop_target < 1.0) {
            return Err(Error::Domain(format!(
                "drop target {} outside (0, 1)",
                self.drop_target
            )));
        }
        if self.m == 0 || !(self.rate >= 0.0) || !(self.tti_ms > 0.0) || self.packet_bits == 0 {
            return Err(Error::Domain(
                "M, rate, TTI and packet size must be positive".into(),
            ));
        }
        if self.half_tti && self.family != Family::Cl {
            return Err(Error::Domain("half-TTI mode is defined for CL only".into()));
        }
        if !(self.cell_radius_km > self.min_distance_km && self.min_distance_km > 0.0)
            || !(self.shadow_sigma_db >= 0.0)
        {
            return Err(Error::Domain("bad cell geometry or shadowing".into()));
        }
        Ok(())
    }

    pub fn receiver(&self) -> ReceiverSpec {
        ReceiverSpec::new(self.family, self.criterion, self.sic)
    }

    /// Packets one tone can carry per slot.
    pub fn capacity(&self) -> usize {
        self.family.users_per_antenna() * self.m
    }

    /// Transmit power over the per-tone noise power (linear).
    pub fn tone_snr(&self) -> f64 {
        let noise_dbm =
            THERMAL_NOISE_DBM_HZ + 10.0 * self.subcarrier_hz.log10() + self.noise_figure_db;
        db_to_linear(self.tx_power_dbm - noise_dbm)
    }
}

/// CL users at rate `2R` over half the TTI with half the per-slot arrivals.
pub fn half_tti_mode(cfg: &MmtcConfig) -> Result<MmtcConfig> {
    if cfg.family != Family::Cl {
        return Err(Error::Domain("half-TTI mode is defined for CL only".into()));
    }
    if cfg.half_tti {
        return Err(Error::Domain(
            "configuration is already in half-TTI mode".into(),
        ));
    }
    Ok(MmtcConfig {
        rate: 2.0 * cfg.rate,
        arrival_rate: 0.5 * cfg.arrival_rate,
        tti_ms: 0.5 * cfg.tti_ms,
        half_tti: true,
        ..cfg.clone()
    })
}

/// Large-scale gains of a static user population.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    xi: Vec<f64>,
}

impl Population {
    pub fn draw(cfg: &MmtcConfig, seed: u64) -> Self {
        let mut rng = stream_rng(child_seed(seed, label_key("population")), 0);
        let xi = (0..cfg.users)
            .map(|_| {
                let r = sample_distance(cfg.cell_radius_km, cfg.min_distance_km, &mut rng);
                let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.shadow_sigma_db;
                db_to_linear(cfg.pathloss.gain_db(r) + shadow)
            })
            .collect();
        Self { xi }
    }

    pub fn from_gains(xi: Vec<f64>) -> Result<Self> {
        if xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Domain("gains must be positive and finite".into()));
        }
        Ok(Self { xi })
    }

    pub fn gains(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// What happened on one tone in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneEvent {
    pub slot: u64,
    pub tone: usize,
    pub users: Vec<usize>,
    pub decoded: Vec<usize>,
    pub overloaded: bool,
}

/// Packet counts over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmtcCounters {
    pub slots: u64,
    pub offered: u64,
    pub decoded: u64,
    pub dropped_overload: u64,
    pub dropped_outage: u64,
}

impl MmtcCounters {
    pub fn dropped(&self) -> u64 {
        self.dropped_overload + self.dropped_outage
    }

    fn add(&mut self, o: &Self) {
        self.slots += o.slots;
        self.offered += o.offered;
        self.decoded += o.decoded;
        self.dropped_overload += o.dropped_overload;
        self.dropped_outage += o.dropped_outage;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmtcResult {
    pub drop_prob: Estimate,
    /// Correctly decoded bits per second per Hz.
    pub throughput: Estimate,
    /// Mean packets offered per slot.
    pub offered_load: f64,
    pub counters: MmtcCounters,
    pub events: Option<Vec<ToneEvent>>,
}

/// Decoded subset of the packets on one tone (`users.len() <= capacity`).
fn decode_tone(
    cfg: &MmtcConfig,
    pop: &Population,
    users: &[usize],
    snr: f64,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let spec = cfg.receiver();
    let gt = cfg.family.threshold(cfg.rate);
    let xi: Vec<f64> = users.iter().map(|&u| pop.xi[u] * snr).collect();
    let hbar = sample_channel(cfg.m, users.len(), rng)?;
    let report = match cfg.family {
        Family::Wl => sinr_report(wl_transform(&hbar).as_matrix(), &xi, 1.0, spec),
        Family::Cl => sinr_report(hbar.as_matrix(), &xi, 1.0, spec),
    };
    let report = match report {
        Ok(r) => r,
        Err(Error::Rank(_)) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    if spec.sic {
        Ok(report
            .stage_trace
            .iter()
            .take_while(|s| s.sinr > gt)
            .map(|s| users[s.user])
            .collect())
    } else {
        Ok(report
            .per_user_sinr
            .iter()
            .zip(users)
            .filter(|(g, _)| **g > gt)
            .map(|(_, &u)| u)
            .collect())
    }
}

struct ChunkOut {
    counters: MmtcCounters,
    throughput: MomentAccumulator,
    events: Vec<ToneEvent>,
}

fn run_slots(
    cfg: &MmtcConfig,
    pop: &Population,
    slots: usize,
    log: bool,
    rng: &mut SimRng,
) -> Result<ChunkOut> {
    let arrivals = Binomial::new(pop.len() as u64, cfg.arrival_rate)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let snr = cfg.tone_snr();
    let cap = cfg.capacity();
    let per_packet = cfg.packet_bits as f64 / (cfg.tti_ms * 1e-3 * cfg.bandwidth_hz);
    let mut c = MmtcCounters::default();
    let mut thr = MomentAccumulator::new();
    let mut events = Vec::new();
    let mut on_tone: Vec<Vec<usize>> = vec![Vec::new(); cfg.tones];
    for slot in 0..slots {
        c.slots += 1;
        let k = arrivals.sample(rng) as usize;
        c.offered += k as u64;
        on_tone.iter_mut().for_each(Vec::clear);
        for u in index::sample(rng, pop.len(), k) {
            on_tone[rng.random_range(0..cfg.tones)].push(u);
        }
        let mut decoded_here = 0u64;
        for (tone, users) in on_tone.iter().enumerate().filter(|(_, u)| !u.is_empty()) {
            let overloaded = users.len() > cap;
            let decoded = if overloaded {
                c.dropped_overload += users.len() as u64;
                Vec::new()
            } else {
                let d = decode_tone(cfg, pop, users, snr, rng)?;
                c.dropped_outage += (users.len() - d.len()) as u64;
                d
            };
            decoded_here += decoded.len() as u64;
            if log {
                events.push(ToneEvent {
                    slot: slot as u64,
                    tone,
                    users: users.clone(),
                    decoded,
                    overloaded,
                });
            }
        }
        c.decoded += decoded_here;
        thr.push(decoded_here as f64 * per_packet);
    }
    Ok(ChunkOut {
        counters: c,
        throughput: thr,
        events,
    })
}

/// Simulate `slots` slots (each `cfg.tti_ms` long) over the population drawn
/// from `seed`; `log` keeps the per-tone event log.
pub fn run_scenario(cfg: &MmtcConfig, slots: usize, seed: u64, log: bool) -> Result<MmtcResult> {
    let pop = Population::draw(cfg, seed);
    run_with_population(cfg, &pop, slots, seed, log)
}

/// [`run_scenario`] over an explicit population.
pub fn run_with_population(
    cfg: &MmtcConfig,
    pop: &Population,
    slots: usize,
    seed: u64,
    log: bool,
) -> Result<MmtcResult> {
    cfg.validate()?;
    if slots < MIN_SLOTS {
        return Err(Error::Domain(format!(
            "need at least {MIN_SLOTS} slots, got {slots}"
        )));
    }
    if pop.is_empty() {
        return Ok(MmtcResult {
            drop_prob: Estimate::exact(0.0),
            throughput: Estimate::exact(0.0),
            offered_load: 0.0,
            counters: MmtcCounters {
                slots: slots as u64,
                ..MmtcCounters::default()
            },
            events: log.then(Vec::new),
        });
    }
    let traffic_seed = child_seed(seed, label_key("traffic"));
    let parts = run_chunks(traffic_seed, slots, DEFAULT_CHUNK, |rng, count| {
        run_slots(cfg, pop, count, log, rng)
    });
    let mut counters = MmtcCounters::default();
    let mut thr = MomentAccumulator::new();
    let mut events = Vec::new();
    for part in parts {
        let part = part?;
        let offset = counters.slots;
        counters.add(&part.counters);
        thr.merge(&part.throughput);
        if log {
            events.extend(part.events.into_iter().map(|mut e| {
                e.slot += offset;
                e
            }));
        }
    }
    Ok(MmtcResult {
        drop_prob: Estimate::from_proportion(counters.dropped(), counters.offered),
        throughput: Estimate::from_accumulator(&thr),
        offered_load: counters.offered as f64 / counters.slots as f64,
        counters,
        events: log.then_some(events),
    })
}

/// Check the per-run invariants on an event log: conservation, the capacity
/// rule and that only offered packets are decoded.
pub fn check_event_log(cfg: &MmtcConfig, result: &MmtcResult) -> Result<()> {
    let events = result
        .events
        .as_ref()
        .ok_or_else(|| Error::Contract("run was made without an event log".into()))?;
    let c = &result.counters;
    if c.decoded + c.dropped() != c.offered {
        return Err(Error::Contract(format!(
            "decoded {} + dropped {} != offered {}",
            c.decoded,
            c.dropped(),
            c.offered
        )));
    }
    let cap = cfg.capacity();
    let (mut offered, mut decoded) = (0u64, 0u64);
    for e in events {
        if e.decoded.len() > cap || (e.overloaded && !e.decoded.is_empty()) {
            return Err(Error::Contract(format!(
                "slot {} tone {} decodes {} packets",
                e.slot,
                e.tone,
                e.decoded.len()
            )));
        }
        if e.overloaded != (e.users.len() > cap) || e.decoded.iter().any(|u| !e.users.contains(u)) {
            return Err(Error::Contract(format!(
                "slot {} tone {} is inconsistent",
                e.slot, e.tone
            )));
        }
        offered += e.users.len() as u64;
        decoded += e.decoded.len() as u64;
    }
    if offered != c.offered || decoded != c.decoded {
        return Err(Error::Contract(
            "event log does not match the counters".into(),
        ));
    }
    Ok(())
}

/// Result of a user-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportedUsers {
    /// Largest qualifying grid point, 0 if none.
    pub users: usize,
    pub qualified: bool,
    pub sweep: Vec<(usize, MmtcResult)>,
}

/// Largest grid point whose drop probability has its 95% upper bound at or
/// below `drop_target`. Every grid point uses the same seed.
pub fn supported_users(
    cfg: &MmtcConfig,
    drop_target: f64,
    user_grid: &[usize],
    slots: usize,
    seed: u64,
) -> Result<SupportedUsers> {
    if user_grid.is_empty() || user_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "user grid must be non-empty and strictly ascending".into(),
        ));
    }
    if !(drop_target > 0.0 && drop_target <= 1.0) {
        return Err(Error::Domain(format!(
            "drop target {drop_target} outside (0, 1]"
        )));
    }
    let mut sweep = Vec::with_capacity(user_grid.len());
    for &users in user_grid {
        let point = MmtcConfig {
            users,
            ..cfg.clone()
        };
        sweep.push((users, run_scenario(&point, slots, seed, false)?));
    }
    let best = sweep
        .iter()
        .filter(|(_, r)| r.drop_prob.ci95.1 <= drop_target)
        .map(|(u, _)| *u)
        .max();
    Ok(SupportedUsers {
        users: best.unwrap_or(0),
        qualified: best.is_some(),
        sweep,
    })
}
