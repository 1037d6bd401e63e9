//! Uplink signal model: large-scale power variation, log-distance pathloss
//! with lognormal shadowing, and the real-valued received model.
//!
//! Noise power is normalised to one, so the transmit SNR equals the average
//! transmit power.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{run_chunks, Estimate, MomentAccumulator, DEFAULT_CHUNK};
use crate::random_matrix::{sample_channel, wl_transform, ComplexMatrix, RealMatrix};
use crate::rng::SimRng;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// How transmit power reacts to large-scale fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Every user transmits at the average power.
    NoControl,
    /// Large-scale fading is fully inverted; all users see `ξ_PPC`.
    Ppc,
}

/// Per-user received power factors `ξ_i` (linear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    xi: Vec<f64>,
    mode: PowerMode,
}

impl PowerProfile {
    pub fn new(xi: Vec<f64>, mode: PowerMode) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Dimension("empty power profile".into()));
        }
        if xi.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Contract(
                "power factors must be positive and finite".into(),
            ));
        }
        if mode == PowerMode::Ppc && xi.iter().any(|&x| x != xi[0]) {
            return Err(Error::Contract("PPC profile must be constant".into()));
        }
        Ok(Self { xi, mode })
    }

    /// `n` users all at `xi_ppc`.
    pub fn ppc(n: usize, xi_ppc: f64) -> Result<Self> {
        Self::new(vec![xi_ppc; n], PowerMode::Ppc)
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn mode(&self) -> PowerMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.xi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.xi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Ψ = diag(ξ)`.
    pub fn psi(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.xi))
    }

    /// Profile with user `k` removed.
    pub fn without(&self, k: usize) -> Result<Self> {
        if k >= self.xi.len() {
            return Err(Error::Dimension(format!("user {k} of {}", self.xi.len())));
        }
        let mut xi = self.xi.clone();
        xi.remove(k);
        Self::new(xi, self.mode)
    }
}

/// Log-distance pathloss `intercept + slope·log10(r_km)` in dB (negative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pathloss {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl Default for Pathloss {
    fn default() -> Self {
        Self {
            intercept_db: -120.9,
            slope_db: 37.6,
        }
    }
}

impl Pathloss {
    /// Pathloss gain in dB at distance `r_km`.
    pub fn gain_db(&self, r_km: f64) -> f64 {
        self.intercept_db - self.slope_db * r_km.log10()
    }
}

/// Link-level parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Receive antennas.
    pub m: usize,
    /// Active users.
    pub n: usize,
    /// Linear transmit SNR.
    pub snr: f64,
    /// Target rate in bits/s/Hz.
    pub rate: f64,
    pub cell_radius_km: f64,
    pub min_distance_km: f64,
    pub pathloss: Pathloss,
    pub shadow_sigma_db: f64,
    pub power_mode: PowerMode,
    pub xi_ppc: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            m: 2,
            n: 4,
            snr: db_to_linear(30.0),
            rate: 2.0,
            cell_radius_km: 0.91,
            min_distance_km: 0.001,
            pathloss: Pathloss::default(),
            shadow_sigma_db: 8.0,
            power_mode: PowerMode::Ppc,
            xi_ppc: 1.0,
        }
    }
}

impl LinkConfig {
    /// Check ranges; `max_users_per_antenna` is 2 for WL and 1 for CL.
    pub fn validate(&self, max_users_per_antenna: usize) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Domain(format!("M = {}, N = {}", self.m, self.n)));
        }
        if self.n > max_users_per_antenna * self.m {
            return Err(Error::Domain(format!(
                "N = {} exceeds {} x M = {}",
                self.n,
                max_users_per_antenna,
                max_users_per_antenna * self.m
            )));
        }
        if !(self.snr > 0.0) || !(self.rate >= 0.0) {
            return Err(Error::Domain(format!(
                "snr = {}, rate = {}",
                self.snr, self.rate
            )));
        }
        if !(self.cell_radius_km > 0.0)
            || !(self.min_distance_km > 0.0)
            || self.min_distance_km >= self.cell_radius_km
        {
            return Err(Error::Domain(format!(
                "radius {} km with floor {} km",
                self.cell_radius_km, self.min_distance_km
            )));
        }
        if !(self.shadow_sigma_db >= 0.0) || !(self.xi_ppc > 0.0) {
            return Err(Error::Domain(
                "negative shadowing or non-positive xi_ppc".into(),
            ));
        }
        Ok(())
    }
}

/// Area-uniform distance in a disk, floored at `min_km`.
pub fn sample_distance<R: Rng + ?Sized>(radius_km: f64, min_km: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (radius_km * u.sqrt()).max(min_km)
}

/// Large-scale gain `ξ = β ψ` (linear) of one user without power control.
pub fn sample_large_scale<R: Rng + ?Sized>(cfg: &LinkConfig, rng: &mut R) -> f64 {
    let r = sample_distance(cfg.cell_radius_km, cfg.min_distance_km, rng);
    let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.shadow_sigma_db;
    db_to_linear(cfg.pathloss.gain_db(r) + shadow)
}

/// Draw the `N` power factors for one channel use.
pub fn sample_power_profile<R: Rng + ?Sized>(
    cfg: &LinkConfig,
    rng: &mut R,
) -> Result<PowerProfile> {
    match cfg.power_mode {
        PowerMode::Ppc => PowerProfile::ppc(cfg.n, cfg.xi_ppc),
        PowerMode::NoControl => {
            let xi = (0..cfg.n).map(|_| sample_large_scale(cfg, rng)).collect();
            PowerProfile::new(xi, PowerMode::NoControl)
        }
    }
}

/// `1/E{(βψ)⁻¹}` by Monte Carlo; the value a PPC system would settle at.
pub fn estimate_xi_ppc(cfg: &LinkConfig, trials: usize, seed: u64) -> Result<Estimate> {
    if trials < 2 {
        return Err(Error::Domain("need at least 2 trials".into()));
    }
    let parts = run_chunks(seed, trials, DEFAULT_CHUNK, |rng, count| {
        let mut acc = MomentAccumulator::new();
        for _ in 0..count {
            acc.push(1.0 / sample_large_scale(cfg, rng));
        }
        acc
    });
    let inv = crate::montecarlo::merge_all(&parts).estimate();
    // Delta method for the reciprocal.
    let mean = 1.0 / inv.mean;
    let stderr = inv.stderr / (inv.mean * inv.mean);
    Ok(Estimate {
        mean,
        stderr,
        trials: inv.trials,
        ci95: (
            1.0 / inv.ci95.1.max(f64::MIN_POSITIVE),
            1.0 / inv.ci95.0.max(f64::MIN_POSITIVE),
        ),
    })
}

/// One channel use: complex channel, its real stacking and the power profile.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub complex: ComplexMatrix,
    pub real: RealMatrix,
    pub profile: PowerProfile,
}

impl ChannelRealization {
    pub fn sample(cfg: &LinkConfig, rng: &mut SimRng) -> Result<Self> {
        let complex = sample_channel(cfg.m, cfg.n, rng)?;
        let real = wl_transform(&complex);
        let profile = sample_power_profile(cfg, rng)?;
        Ok(Self {
            complex,
            real,
            profile,
        })
    }
}

/// Real-valued received model `y = √snr · H Ψ^{1/2} x + n`, `n ~ N(0, ½I)`.
#[derive(Debug, Clone)]
pub struct ReceivedModel {
    pub channel: RealMatrix,
    pub profile: PowerProfile,
    pub snr: f64,
    /// `H Ψ^{1/2}`.
    pub effective: DMatrix<f64>,
    pub noise_variance: f64,
}

impl ReceivedModel {
    /// Draw a received vector for real symbols `x`.
    pub fn observe<R: Rng + ?Sized>(&self, x: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        if x.len() != self.effective.ncols() {
            return Err(Error::Dimension(format!(
                "{} symbols for {} users",
                x.len(),
                self.effective.ncols()
            )));
        }
        let noise = Normal::new(0.0, self.noise_variance.sqrt())
            .map_err(|e| Error::Domain(e.to_string()))?;
        let clean = &self.effective * x * self.snr.sqrt();
        Ok(clean.map(|v| v + noise.sample(rng)))
    }
}

pub fn build_received_model(
    hbar: &ComplexMatrix,
    profile: &PowerProfile,
    snr: f64,
) -> Result<ReceivedModel> {
    if hbar.cols() != profile.len() {
        return Err(Error::Dimension(format!(
            "{} channel columns for {} power factors",
            hbar.cols(),
            profile.len()
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::Domain(format!("snr = {snr}")));
    }
    let channel = wl_transform(hbar);
    let mut effective = channel.as_matrix().clone();
    for (j, &x) in profile.xi().iter().enumerate() {
        effective.column_mut(j).scale_mut(x.sqrt());
    }
    Ok(ReceivedModel {
        channel,
        profile: profile.clone(),
        snr,
        effective,
        noise_variance: 0.5,
    })
}
