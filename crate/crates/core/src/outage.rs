//! Outage probability: Monte Carlo curves and the high-SNR law
//! `P_out ≈ (C·snr)^{−d}` for every receiver variant.
//!
//! Expectations inside the coding gains are evaluated by Monte Carlo over the
//! power profile and, where needed, the high-SNR MMSE residual and Haar
//! eigenvector coordinates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::link::{db_to_linear, sample_power_profile, ChannelRealization, LinkConfig, PowerMode};
use crate::montecarlo::{run_chunks, Estimate, MomentAccumulator, DEFAULT_CHUNK, Z95};
use crate::random_matrix::{
    sample_channel, sample_complex_haar_unit_vector, sample_haar_unit_vector, wl_transform,
};
use crate::receivers::{
    linear_sinrs, residual_surrogate, sic_tagged_sinr, Criterion, Family, ReceiverSpec,
};
use crate::rng::SimRng;
use crate::wishart::beta1;

/// Share of the sum carried by the ten largest samples above which a moment
/// estimate is flagged as heavy-tailed.
pub const HEAVY_TAIL_SHARE: f64 = 0.05;

/// `d_WL = M − (N−1)/2`.
pub fn d_wl(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 || n > 2 * m {
        return Err(Error::Domain(format!(
            "WL needs 1 <= N <= 2M, got M={m}, N={n}"
        )));
    }
    Ok(m as f64 - 0.5 * (n - 1) as f64)
}

/// `d_CL = M − N + 1`.
pub fn d_cl(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 || n > m {
        return Err(Error::Domain(format!(
            "CL needs 1 <= N <= M, got M={m}, N={n}"
        )));
    }
    Ok((m - n + 1) as f64)
}

pub fn diversity(family: Family, m: usize, n: usize) -> Result<f64> {
    match family {
        Family::Wl => d_wl(m, n),
        Family::Cl => d_cl(m, n),
    }
}

/// `𝓛(R) = 2(2^R−1)/(2^{2R}−1)`, equal to `2/(2^R+1)`.
pub fn ell_ratio(rate: f64) -> f64 {
    2.0 / (rate.exp2() + 1.0)
}

/// Leading coefficient of `F_{χ²_k}(x)` at the origin:
/// `1/((k/2)·2^{k/2}·Γ(k/2))`.
pub fn chi2_cdf_poly_coeff(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("chi-square with 0 degrees of freedom".into()));
    }
    let h = 0.5 * k as f64;
    Ok((-(h.ln() + h * std::f64::consts::LN_2 + ln_gamma(h))).exp())
}

/// `E{μ^d}` for `μ = |ν₁|²`, `ν` uniform on the complex unit sphere in `ℂ^N`
/// (`μ ~ Beta(1, N−1)`).
pub fn complex_haar_moment(n: usize, d: f64) -> f64 {
    (ln_gamma(1.0 + d) + ln_gamma(n as f64) - ln_gamma(n as f64 + d)).exp()
}

/// `E{u^d}` for `u = v₁²`, `v` uniform on the real unit sphere in `ℝ^N`
/// (`u ~ Beta(1/2, (N−1)/2)`).
pub fn real_haar_moment(n: usize, d: f64) -> f64 {
    let h = 0.5 * n as f64;
    (ln_gamma(0.5 + d) + ln_gamma(h) - ln_gamma(0.5) - ln_gamma(h + d)).exp()
}

/// Coefficient of `Pr(λ₁ < ε) ≈ β ε^d` for the Gram matrix the SIC analysis
/// runs on: `2HᵀH` (WL, `n = N`, `m = 2M`) or `H̄ᴴH̄` (CL).
pub fn beta_family(family: Family, m: usize, n: usize) -> Result<f64> {
    match family {
        Family::Wl => {
            d_wl(m, n)?;
            beta1(n, 2 * m)
        }
        Family::Cl => {
            let d = d_cl(m, n)?;
            Ok(1.0 / (d * gamma(d) * complex_haar_moment(n, d)))
        }
    }
}

/// Diversity and coding gain of one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSummary {
    pub receiver: ReceiverSpec,
    pub d: f64,
    /// Headline coding gain (linear).
    pub c: f64,
    /// 95% interval of `c` propagated from the Monte Carlo moment.
    pub c_ci: (f64, f64),
    /// MMSE-SIC: lower bound on `C` from a fixed, not SINR-maximising,
    /// decoding order.
    pub c_lower: Option<f64>,
    pub c_lower_ci: Option<(f64, f64)>,
    /// MMSE-SIC: `C` bounds from the `ξ_max`/`ξ_min` regularised SINR
    /// bounds. Infinite when the first-order outage term vanishes.
    pub c_bounds: Option<(f64, f64)>,
    /// The moment was dominated by a handful of samples.
    pub heavy_tail: bool,
    pub trials: u64,
}

impl GainSummary {
    /// `(C·snr)^{−d}`.
    pub fn asymptote(&self, snr: f64) -> f64 {
        (self.c * snr).powf(-self.d)
    }
}

/// Analytical outage values on a dB grid.
pub fn asymptote_curve(gain: &GainSummary, snr_grid_db: &[f64]) -> Result<Vec<f64>> {
    if !(gain.d > 0.0 && gain.c > 0.0) {
        return Err(Error::Domain(format!("d = {}, C = {}", gain.d, gain.c)));
    }
    Ok(snr_grid_db
        .iter()
        .map(|&s| gain.asymptote(db_to_linear(s)))
        .collect())
}

/// `C = prefactor · [E X]^{−1/d}` with its interval and tail flag.
fn gain_from_moment(
    prefactor: f64,
    d: f64,
    acc: &MomentAccumulator,
) -> Result<(f64, (f64, f64), bool)> {
    let mean = acc.mean();
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Range(format!(
            "moment estimate {mean} is not positive"
        )));
    }
    let c = prefactor * mean.powf(-1.0 / d);
    let half = Z95 * acc.stderr();
    let hi = if mean - half > 0.0 {
        prefactor * (mean - half).powf(-1.0 / d)
    } else {
        f64::INFINITY
    };
    let lo = prefactor * (mean + half).powf(-1.0 / d);
    Ok((c, (lo, hi), acc.top_share() > HEAVY_TAIL_SHARE))
}

/// Run `f` per trial and accumulate each of its `k` outputs.
fn accumulate<F>(k: usize, trials: usize, seed: u64, f: F) -> Result<Vec<MomentAccumulator>>
where
    F: Fn(&mut SimRng, &mut [f64]) -> Result<()> + Sync,
{
    if trials < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    let parts = run_chunks(
        seed,
        trials,
        DEFAULT_CHUNK,
        |rng, count| -> Result<Vec<MomentAccumulator>> {
            let mut accs = vec![MomentAccumulator::new(); k];
            let mut buf = vec![0.0; k];
            for _ in 0..count {
                f(rng, &mut buf)?;
                for (a, &x) in accs.iter_mut().zip(&buf) {
                    a.push(x);
                }
            }
            Ok(accs)
        },
    );
    let mut out = vec![MomentAccumulator::new(); k];
    for part in parts {
        for (o, p) in out.iter_mut().zip(part?) {
            o.merge(&p);
        }
    }
    Ok(out)
}

fn positive_part_pow(x: f64, d: f64) -> f64 {
    if x > 0.0 {
        x.powf(d)
    } else {
        0.0
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!(
            "coding gain needs a positive rate, got {rate}"
        )));
    }
    Ok(())
}

/// High-SNR residual of user `n` for a fresh channel draw.
fn sample_residual(
    family: Family,
    m: usize,
    xi: &[f64],
    n: usize,
    rng: &mut SimRng,
) -> Result<f64> {
    loop {
        let hbar = sample_channel(m, xi.len(), rng)?;
        let eta = match family {
            Family::Wl => residual_surrogate(wl_transform(&hbar).as_matrix(), xi, n),
            Family::Cl => residual_surrogate(hbar.as_matrix(), xi, n),
        };
        // Singular draws have probability zero; redraw.
        if !matches!(eta, Err(Error::Rank(_))) {
            return eta;
        }
    }
}

/// Residuals of all users for one channel draw.
fn sample_residuals(family: Family, m: usize, xi: &[f64], rng: &mut SimRng) -> Result<Vec<f64>> {
    let all = |h: &dyn Fn(usize) -> Result<f64>| (0..xi.len()).map(h).collect::<Result<Vec<_>>>();
    loop {
        let hbar = sample_channel(m, xi.len(), rng)?;
        let etas = match family {
            Family::Wl => {
                let h = wl_transform(&hbar).into_inner();
                all(&|n| residual_surrogate(&h, xi, n))
            }
            Family::Cl => {
                let h = hbar.into_inner();
                all(&|n| residual_surrogate(&h, xi, n))
            }
        };
        if !matches!(etas, Err(Error::Rank(_))) {
            return etas;
        }
    }
}

/// Squared first coordinates of a Haar vector (`u_n` for WL, `μ_n` for CL).
fn sample_haar_weights(family: Family, n: usize, rng: &mut SimRng) -> Result<Vec<f64>> {
    Ok(match family {
        Family::Wl => sample_haar_unit_vector(n, rng)?
            .iter()
            .map(|v| v * v)
            .collect(),
        Family::Cl => sample_complex_haar_unit_vector(n, rng)?
            .iter()
            .map(|z| z.norm_sqr())
            .collect(),
    })
}

/// Gains of the non-SIC ZF/MMSE receivers through `ξ_n` and `η_n`.
fn direct_gains(
    family: Family,
    cfg: &LinkConfig,
    criterion: Criterion,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    check_rate(cfg.rate)?;
    let d = diversity(family, cfg.m, cfg.n)?;
    let gt = family.threshold(cfg.rate);
    let pre = match family {
        Family::Wl => 2.0,
        Family::Cl => 1.0,
    } * (d * gamma(d)).powf(1.0 / d)
        / gt;
    let accs = accumulate(1, trials, seed, |rng, out| {
        let xi = sample_power_profile(cfg, rng)?;
        out[0] = match criterion {
            Criterion::Zf => xi.xi()[0].powf(-d),
            Criterion::Mmse => {
                let eta = sample_residual(family, cfg.m, xi.xi(), 0, rng)?;
                positive_part_pow(1.0 / xi.xi()[0] - eta / gt, d)
            }
        };
        Ok(())
    })?;
    let (c, c_ci, heavy_tail) = gain_from_moment(pre, d, &accs[0])?;
    Ok(GainSummary {
        receiver: ReceiverSpec::new(family, criterion, false),
        d,
        c,
        c_ci,
        c_lower: None,
        c_lower_ci: None,
        c_bounds: None,
        heavy_tail,
        trials: accs[0].count,
    })
}

/// WL-ZF / WL-MMSE gains.
pub fn wl_gains(
    cfg: &LinkConfig,
    criterion: Criterion,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    direct_gains(Family::Wl, cfg, criterion, trials, seed)
}

/// CL-ZF / CL-MMSE gains.
pub fn cl_gains(
    cfg: &LinkConfig,
    criterion: Criterion,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    direct_gains(Family::Cl, cfg, criterion, trials, seed)
}

/// Non-SIC gains through the smallest eigenvalue and its eigenvector:
/// `C = β^{−1/d}/γ_T · [E{(v_n²[1/ξ_n − η_n/γ_T]⁺)^d}]^{−1/d}` (`η = 0` for ZF).
/// Equals the direct form in expectation.
pub fn eigen_gains(
    family: Family,
    cfg: &LinkConfig,
    criterion: Criterion,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    check_rate(cfg.rate)?;
    let d = diversity(family, cfg.m, cfg.n)?;
    let gt = family.threshold(cfg.rate);
    let beta = beta_family(family, cfg.m, cfg.n)?;
    let pre = beta.powf(-1.0 / d) / gt;
    let accs = accumulate(1, trials, seed, |rng, out| {
        let xi = sample_power_profile(cfg, rng)?;
        let eta = match criterion {
            Criterion::Zf => 0.0,
            Criterion::Mmse => sample_residual(family, cfg.m, xi.xi(), 0, rng)?,
        };
        let u = sample_haar_weights(family, cfg.n, rng)?[0];
        out[0] = positive_part_pow(u * (1.0 / xi.xi()[0] - eta / gt), d);
        Ok(())
    })?;
    let (c, c_ci, heavy_tail) = gain_from_moment(pre, d, &accs[0])?;
    Ok(GainSummary {
        receiver: ReceiverSpec::new(family, criterion, false),
        d,
        c,
        c_ci,
        c_lower: None,
        c_lower_ci: None,
        c_bounds: None,
        heavy_tail,
        trials: accs[0].count,
    })
}

/// SIC gains with SINR-maximising order.
///
/// ZF-SIC: `C = β^{−1/d}/γ_T · [E{θ_min^d}]^{−1/d}`, `θ_n = v_n²/ξ_n`.
///
/// MMSE-SIC: `c_lower` is `β^{−1/d}/γ_T · [E{([ϑ_min]⁺)^d}]^{−1/d}` with
/// `ϑ_n = v_n²(1/ξ_n − η_n/γ_T)`; `c_bounds` uses
/// `β^{−1/d}/(γ_T+1) · [E{([θ_min − 1/(ξ(γ_T+1))]⁺)^d}]^{−1/d}` at
/// `ξ = ξ_max` and `ξ_min`. With constant power the two bounds coincide and
/// give the headline unless they degenerate; otherwise the headline is
/// `c_lower`.
pub fn sic_gains(
    cfg: &LinkConfig,
    spec: ReceiverSpec,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    if !spec.sic {
        return Err(Error::Domain(format!("{spec} is not a SIC receiver")));
    }
    check_rate(cfg.rate)?;
    let family = spec.family;
    let d = diversity(family, cfg.m, cfg.n)?;
    let gt = family.threshold(cfg.rate);
    let beta = beta_family(family, cfg.m, cfg.n)?;
    let b = beta.powf(-1.0 / d);
    let n = cfg.n;
    match spec.criterion {
        Criterion::Zf => {
            let accs = accumulate(1, trials, seed, |rng, out| {
                let xi = sample_power_profile(cfg, rng)?;
                let u = sample_haar_weights(family, n, rng)?;
                let theta_min = u
                    .iter()
                    .zip(xi.xi())
                    .map(|(u, x)| u / x)
                    .fold(f64::INFINITY, f64::min);
                out[0] = theta_min.powf(d);
                Ok(())
            })?;
            let (c, c_ci, heavy_tail) = gain_from_moment(b / gt, d, &accs[0])?;
            Ok(GainSummary {
                receiver: spec,
                d,
                c,
                c_ci,
                c_lower: None,
                c_lower_ci: None,
                c_bounds: None,
                heavy_tail,
                trials: accs[0].count,
            })
        }
        Criterion::Mmse => {
            let accs = accumulate(3, trials, seed, |rng, out| {
                let xi = sample_power_profile(cfg, rng)?;
                let eta = sample_residuals(family, cfg.m, xi.xi(), rng)?;
                let u = sample_haar_weights(family, n, rng)?;
                let xs = xi.xi();
                let vartheta_min = (0..n)
                    .map(|k| u[k] * (1.0 / xs[k] - eta[k] / gt))
                    .fold(f64::INFINITY, f64::min);
                let theta_min = (0..n).map(|k| u[k] / xs[k]).fold(f64::INFINITY, f64::min);
                out[0] = positive_part_pow(vartheta_min, d);
                out[1] = positive_part_pow(theta_min - 1.0 / (xi.max() * (gt + 1.0)), d);
                out[2] = positive_part_pow(theta_min - 1.0 / (xi.min() * (gt + 1.0)), d);
                Ok(())
            })?;
            let (c43, ci43, heavy43) = gain_from_moment(b / gt, d, &accs[0])?;
            let bound = |acc: &MomentAccumulator| -> Result<(f64, (f64, f64), bool)> {
                if acc.mean() == 0.0 {
                    Ok((f64::INFINITY, (f64::INFINITY, f64::INFINITY), false))
                } else {
                    gain_from_moment(b / (gt + 1.0), d, acc)
                }
            };
            let (c_lb, ci_lb, heavy_lb) = bound(&accs[1])?;
            let (c_ub, _, heavy_ub) = bound(&accs[2])?;
            let ppc = cfg.power_mode == PowerMode::Ppc;
            let (c, c_ci) = if ppc && c_lb.is_finite() {
                (c_lb, ci_lb)
            } else {
                (c43, ci43)
            };
            Ok(GainSummary {
                receiver: spec,
                d,
                c,
                c_ci,
                c_lower: Some(c43),
                c_lower_ci: Some(ci43),
                c_bounds: Some((c_lb, c_ub)),
                heavy_tail: heavy43 || heavy_lb || heavy_ub,
                trials: accs[0].count,
            })
        }
    }
}

/// Gains for any receiver variant.
pub fn gains(
    cfg: &LinkConfig,
    spec: ReceiverSpec,
    trials: usize,
    seed: u64,
) -> Result<GainSummary> {
    spec.check_users(cfg.m, cfg.n)?;
    match (spec.sic, spec.family) {
        (true, _) => sic_gains(cfg, spec, trials, seed),
        (false, Family::Wl) => wl_gains(cfg, spec.criterion, trials, seed),
        (false, Family::Cl) => cl_gains(cfg, spec.criterion, trials, seed),
    }
}

/// Ratio `E{x^d}/E{x_min^d}` of Haar eigenvector coordinate moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRatio {
    pub ratio: Estimate,
    /// `N^d`.
    pub reference: f64,
}

/// Estimate `E{u_n^d}/E{u_min^d}` for real (WL) or complex (CL) Haar vectors
/// in dimension `n`. The interval uses the delta method with the sample
/// covariance of numerator and denominator.
pub fn moment_ratio_check(
    family: Family,
    n: usize,
    d: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentRatio> {
    if n == 0 || !(d > 0.0) {
        return Err(Error::Domain(format!("N = {n}, d = {d}")));
    }
    if trials < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    // Per chunk: [Σa, Σb, Σa², Σb², Σab] with a = mean_n u_n^d, b = u_min^d.
    let parts = run_chunks(
        seed,
        trials,
        DEFAULT_CHUNK,
        |rng, count| -> Result<[f64; 5]> {
            let mut s = [0.0; 5];
            for _ in 0..count {
                let u = sample_haar_weights(family, n, rng)?;
                let a = u.iter().map(|x| x.powf(d)).sum::<f64>() / n as f64;
                let b = u.iter().copied().fold(f64::INFINITY, f64::min).powf(d);
                s[0] += a;
                s[1] += b;
                s[2] += a * a;
                s[3] += b * b;
                s[4] += a * b;
            }
            Ok(s)
        },
    );
    let mut s = [0.0; 5];
    for p in parts {
        for (t, v) in s.iter_mut().zip(p?) {
            *t += v;
        }
    }
    let t = trials as f64;
    let (ma, mb) = (s[0] / t, s[1] / t);
    let va = (s[2] / t - ma * ma) * t / (t - 1.0);
    let vb = (s[3] / t - mb * mb) * t / (t - 1.0);
    let cab = (s[4] / t - ma * mb) * t / (t - 1.0);
    let r = ma / mb;
    let var = r * r * (va / (ma * ma) + vb / (mb * mb) - 2.0 * cab / (ma * mb)) / t;
    let stderr = var.max(0.0).sqrt();
    Ok(MomentRatio {
        ratio: Estimate {
            mean: r,
            stderr,
            trials: trials as u64,
            ci95: (r - Z95 * stderr, r + Z95 * stderr),
        },
        reference: (n as f64).powf(d),
    })
}

/// Simulated outage probabilities on an SNR grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub label: String,
    pub snr_grid_db: Vec<f64>,
    pub p_out: Vec<Estimate>,
    pub p_asym: Option<Vec<f64>>,
}

impl OutageCurve {
    /// Attach `(C·snr)^{−d}` values.
    pub fn with_asymptote(mut self, gain: &GainSummary) -> Result<Self> {
        self.p_asym = Some(asymptote_curve(gain, &self.snr_grid_db)?);
        Ok(self)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty()
        || grid.windows(2).any(|w| !(w[0] < w[1]))
        || grid.iter().any(|x| !x.is_finite())
    {
        return Err(Error::Domain(
            "SNR grid must be non-empty, finite and strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Count outage events of the tagged user (user 0) for each receiver and grid
/// point, sharing each channel draw across all of them.
fn outage_counts_one(
    specs: &[ReceiverSpec],
    cfg: &LinkConfig,
    snrs: &[f64],
    rng: &mut SimRng,
    counts: &mut [u64],
) -> Result<()> {
    let real = ChannelRealization::sample(cfg, rng)?;
    let xi = real.profile.xi();
    for (si, spec) in specs.iter().enumerate() {
        let gt = spec.family.threshold(cfg.rate);
        let row = &mut counts[si * snrs.len()..(si + 1) * snrs.len()];
        let sinr_at = |snr: f64| -> Result<f64> {
            match spec.family {
                Family::Wl => tagged_sinr(real.real.as_matrix(), xi, snr, *spec),
                Family::Cl => tagged_sinr(real.complex.as_matrix(), xi, snr, *spec),
            }
        };
        match spec.criterion {
            // ZF SINRs and the ZF-SIC order scale linearly with snr.
            Criterion::Zf => {
                let g = sinr_at(1.0)?;
                for (c, &snr) in row.iter_mut().zip(snrs) {
                    if snr * g <= gt {
                        *c += 1;
                    }
                }
            }
            Criterion::Mmse => {
                for (c, &snr) in row.iter_mut().zip(snrs) {
                    if sinr_at(snr)? <= gt {
                        *c += 1;
                    }
                }
            }
        }
    }
    Ok(())
}

fn tagged_sinr<T: nalgebra::ComplexField<RealField = f64>>(
    h: &DMatrix<T>,
    xi: &[f64],
    snr: f64,
    spec: ReceiverSpec,
) -> Result<f64> {
    let sinr = if spec.sic {
        sic_tagged_sinr(h, xi, snr, spec.family, spec.criterion, 0)
    } else {
        linear_sinrs(h, xi, snr, spec.family, spec.criterion).map(|g| g[0])
    };
    // A numerically singular channel is a deep fade.
    match sinr {
        Err(Error::Rank(_)) => Ok(0.0),
        other => other,
    }
}

/// Outage curves of several receivers over the same channel draws.
pub fn outage_mc_multi(
    specs: &[ReceiverSpec],
    cfg: &LinkConfig,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<OutageCurve>> {
    if trials < 1_000 {
        return Err(Error::Domain(format!(
            "need at least 1e3 trials, got {trials}"
        )));
    }
    check_grid(snr_grid_db)?;
    for s in specs {
        s.check_users(cfg.m, cfg.n)?;
    }
    let snrs: Vec<f64> = snr_grid_db.iter().map(|&x| db_to_linear(x)).collect();
    let width = specs.len() * snrs.len();
    let parts = run_chunks(
        seed,
        trials,
        DEFAULT_CHUNK,
        |rng, count| -> Result<Vec<u64>> {
            let mut counts = vec![0u64; width];
            for _ in 0..count {
                outage_counts_one(specs, cfg, &snrs, rng, &mut counts)?;
            }
            Ok(counts)
        },
    );
    let mut counts = vec![0u64; width];
    for p in parts {
        for (c, v) in counts.iter_mut().zip(p?) {
            *c += v;
        }
    }
    Ok(specs
        .iter()
        .enumerate()
        .map(|(si, spec)| OutageCurve {
            label: spec.to_string(),
            snr_grid_db: snr_grid_db.to_vec(),
            p_out: counts[si * snrs.len()..(si + 1) * snrs.len()]
                .iter()
                .map(|&c| Estimate::from_proportion(c, trials as u64))
                .collect(),
            p_asym: None,
        })
        .collect())
}

/// Outage curve of one receiver. Rate is `½log₂(1+γ)` for WL and
/// `log₂(1+γ)` for CL; SIC receivers lose the tagged user if any stage up to
/// its own is in outage.
pub fn outage_mc(
    spec: ReceiverSpec,
    cfg: &LinkConfig,
    snr_grid_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<OutageCurve> {
    Ok(outage_mc_multi(&[spec], cfg, snr_grid_db, trials, seed)?.remove(0))
}
