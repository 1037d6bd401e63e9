//! Experiment registry and runners.

use wlsim_core::link::{db_to_linear, LinkConfig, PowerMode};
use wlsim_core::mmtc::{half_tti_mode, supported_users, MmtcConfig};
use wlsim_core::montecarlo::fit_diversity;
use wlsim_core::outage::{gains, outage_mc_multi, GainSummary};
use wlsim_core::receivers::{Criterion, Family, ReceiverSpec};
use wlsim_core::rng::{child_seed, label_key};
use wlsim_core::wishart::{empirical_cdf_at, fit_eig_cdf, sample_order_statistic, EigenAsymptote};

use crate::config::{ExperimentConfig, MmtcVariant, Panel};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub default_trials: usize,
}

pub const REGISTRY: [ExperimentInfo; 6] = [
    ExperimentInfo {
        name: "fig1-eig-cdf",
        description: "CDF of the k-th smallest eigenvalue of a real Wishart matrix vs. its small-argument law",
        default_trials: 1_000_000,
    },
    ExperimentInfo {
        name: "fig2-wl-outage",
        description: "Simulated and asymptotic outage of the four WL receivers (M=2, N=4, R=2)",
        default_trials: 1_000_000,
    },
    ExperimentInfo {
        name: "fig3-wl-vs-cl",
        description: "Asymptotic outage of WL and CL receivers for several user counts and rates (M=2)",
        default_trials: 200_000,
    },
    ExperimentInfo {
        name: "fig4-mmtc-drop",
        description: "mMTC packet drop probability vs. number of users, WL vs. CL and CL half-TTI",
        default_trials: 20_000,
    },
    ExperimentInfo {
        name: "fig5-mmtc-throughput",
        description: "mMTC system throughput vs. number of users and at the supported user count",
        default_trials: 20_000,
    },
    ExperimentInfo {
        name: "custom",
        description: "Outage curves and coding gains for any link configuration and receiver list",
        default_trials: 100_000,
    },
];

pub fn lookup(name: &str) -> Result<&'static ExperimentInfo> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::UnknownExperiment {
            name: name.to_string(),
            valid: REGISTRY
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Run the configured experiment and return its tables.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "fig1-eig-cdf" => fig1(cfg),
        "fig2-wl-outage" => outage_experiment(cfg, "fig2", fig2_link(cfg), &fig2_receivers()),
        "fig3-wl-vs-cl" => fig3(cfg),
        "fig4-mmtc-drop" => mmtc_experiment(cfg, "fig4"),
        "fig5-mmtc-throughput" => mmtc_experiment(cfg, "fig5"),
        "custom" => {
            let link = cfg.link.clone().unwrap_or_default();
            let all = all_receivers(&link);
            outage_experiment(cfg, "custom", link, &all)
        }
        other => Err(lookup(other)
            .err()
            .unwrap_or_else(|| CliError::Config(format!("no runner for {other}")))),
    }
}

fn file_label(spec: ReceiverSpec) -> String {
    spec.to_string().to_lowercase().replace('-', "_")
}

fn parse_receivers(names: &[String]) -> Result<Vec<ReceiverSpec>> {
    names
        .iter()
        .map(|s| s.parse::<ReceiverSpec>().map_err(CliError::Core))
        .collect()
}

fn log_grid(lo_exp: f64, hi_exp: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / steps as f64))
        .collect()
}

fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn fig1(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let trials = cfg.trials()?;
    if trials < 100_000 {
        return Err(CliError::Config(
            "fig1-eig-cdf needs at least 1e5 trials for its fit window".into(),
        ));
    }
    let cases = cfg
        .sweep
        .cases
        .clone()
        .unwrap_or_else(|| vec![[1, 2, 4], [1, 3, 6], [1, 4, 4], [2, 2, 2]]);
    let eps = cfg
        .sweep
        .epsilon
        .clone()
        .unwrap_or_else(|| log_grid(-4.0, 0.0, 20));
    let mut fits = Table::new(
        "fig1_fit",
        &[
            "k",
            "n",
            "m",
            "exponent",
            "slope_fit",
            "coefficient_fit",
            "coefficient_asym",
            "asym_source",
        ],
    );
    let mut tables = Vec::new();
    for [k, n, m] in cases {
        let asym = EigenAsymptote::new(k, n, m)?;
        let seed = child_seed(cfg.seed, label_key(&format!("eig-{k}-{n}-{m}")));
        let sorted = sample_order_statistic(k, n, m, trials, seed)?;
        let fit = fit_eig_cdf(&sorted, asym.exponent, 1e-4, 1e-2, 9)?;
        let (coef, source) = match asym.coefficient {
            Some(c) => (c, "theory"),
            None => (fit.coefficient, "fit"),
        };
        fits.push(vec![
            k.into(),
            n.into(),
            m.into(),
            asym.exponent.into(),
            fit.slope.into(),
            fit.coefficient.into(),
            coef.into(),
            source.into(),
        ]);
        let mut t = Table::new(
            format!("fig1_k{k}_n{n}_m{m}"),
            &[
                "k", "n", "m", "epsilon", "cdf_emp", "ci_lo", "ci_hi", "cdf_asym",
            ],
        );
        for &e in &eps {
            let p = empirical_cdf_at(&sorted, e);
            t.push(vec![
                k.into(),
                n.into(),
                m.into(),
                e.into(),
                p.cdf.mean.into(),
                p.cdf.ci95.0.into(),
                p.cdf.ci95.1.into(),
                (coef * e.powf(asym.exponent)).min(1.0).into(),
            ]);
        }
        tables.push(t);
    }
    tables.push(fits);
    Ok(tables)
}

fn fig2_link(cfg: &ExperimentConfig) -> LinkConfig {
    cfg.link.clone().unwrap_or(LinkConfig {
        m: 2,
        n: 4,
        rate: 2.0,
        power_mode: PowerMode::Ppc,
        ..LinkConfig::default()
    })
}

fn fig2_receivers() -> Vec<ReceiverSpec> {
    [Criterion::Zf, Criterion::Mmse]
        .into_iter()
        .flat_map(|c| [false, true].map(|sic| (c, sic)))
        .map(|(c, sic)| ReceiverSpec::new(Family::Wl, c, sic))
        .collect()
}

fn all_receivers(link: &LinkConfig) -> Vec<ReceiverSpec> {
    [Family::Wl, Family::Cl]
        .into_iter()
        .flat_map(|f| {
            [Criterion::Zf, Criterion::Mmse]
                .into_iter()
                .flat_map(move |c| [false, true].map(|sic| ReceiverSpec::new(f, c, sic)))
        })
        .filter(|s| s.check_users(link.m, link.n).is_ok())
        .collect()
}

fn gain_row(spec: ReceiverSpec, n: usize, g: &GainSummary) -> Vec<Cell> {
    vec![
        spec.to_string().into(),
        n.into(),
        g.d.into(),
        g.c.into(),
        g.c_ci.0.into(),
        g.c_ci.1.into(),
        g.c_lower.unwrap_or(g.c).into(),
        g.heavy_tail.into(),
    ]
}

const GAIN_HEADER: [&str; 8] = [
    "receiver",
    "n",
    "d",
    "c",
    "c_ci_lo",
    "c_ci_hi",
    "c_lower",
    "heavy_tail",
];

/// Simulated outage plus asymptote per receiver, coding gains and slope fits.
fn outage_experiment(
    cfg: &ExperimentConfig,
    prefix: &str,
    link: LinkConfig,
    defaults: &[ReceiverSpec],
) -> Result<Vec<Table>> {
    let trials = cfg.trials()?;
    let specs = match &cfg.sweep.receivers {
        Some(names) => parse_receivers(names)?,
        None => defaults.to_vec(),
    };
    if specs.is_empty() {
        return Err(CliError::Config("no receivers to simulate".into()));
    }
    let grid = cfg
        .sweep
        .snr_db
        .clone()
        .unwrap_or_else(|| db_grid(20.0, 65.0, 5.0));
    let gain_trials = cfg.sweep.gain_trials.unwrap_or(200_000);
    let curves = outage_mc_multi(
        &specs,
        &link,
        &grid,
        trials,
        child_seed(cfg.seed, label_key("outage")),
    )?;
    let mut gains_t = Table::new(format!("{prefix}_gains"), &GAIN_HEADER);
    let mut fits = Table::new(
        format!("{prefix}_fit"),
        &[
            "receiver",
            "d_fit",
            "c_fit",
            "window_lo_db",
            "window_hi_db",
            "r2",
        ],
    );
    let mut tables = Vec::new();
    for (spec, curve) in specs.iter().zip(curves) {
        let g = gains(
            &link,
            *spec,
            gain_trials,
            child_seed(cfg.seed, label_key(&format!("gain-{spec}"))),
        )?;
        gains_t.push(gain_row(*spec, link.n, &g));
        if let Ok(fit) = fit_diversity(&curve, None) {
            fits.push(vec![
                spec.to_string().into(),
                fit.diversity().into(),
                fit.coding_gain().into(),
                fit.window.0.into(),
                fit.window.1.into(),
                fit.r2.into(),
            ]);
        }
        let mut t = Table::new(
            format!("{prefix}_{}", file_label(*spec)),
            &["snr_db", "p_out", "ci_lo", "ci_hi", "p_asym"],
        );
        for (s, e) in grid.iter().zip(&curve.p_out) {
            t.push(vec![
                (*s).into(),
                e.mean.into(),
                e.ci95.0.into(),
                e.ci95.1.into(),
                g.asymptote(db_to_linear(*s)).min(1.0).into(),
            ]);
        }
        tables.push(t);
    }
    tables.push(gains_t);
    tables.push(fits);
    Ok(tables)
}

fn fig3(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let trials = cfg.trials()?;
    let base = cfg.link.clone().unwrap_or(LinkConfig {
        m: 2,
        ..LinkConfig::default()
    });
    let panels = cfg.sweep.panels.clone().unwrap_or_else(|| {
        vec![
            Panel {
                n_wl: 2,
                n_cl: 2,
                rate: 2.0,
            },
            Panel {
                n_wl: 3,
                n_cl: 2,
                rate: 4.0,
            },
            Panel {
                n_wl: 3,
                n_cl: 2,
                rate: 0.3,
            },
            Panel {
                n_wl: 4,
                n_cl: 2,
                rate: 0.3,
            },
        ]
    });
    let grid = cfg
        .sweep
        .snr_db
        .clone()
        .unwrap_or_else(|| db_grid(0.0, 60.0, 2.5));
    let mut summary = Table::new(
        "fig3_gains",
        &[
            "panel",
            "rate",
            "receiver",
            "n",
            "d",
            "c",
            "c_ci_lo",
            "c_ci_hi",
            "c_lower",
            "heavy_tail",
        ],
    );
    let mut tables = Vec::new();
    for (p, panel) in panels.iter().enumerate() {
        let p = p + 1;
        for family in [Family::Wl, Family::Cl] {
            let n = match family {
                Family::Wl => panel.n_wl,
                Family::Cl => panel.n_cl,
            };
            let link = LinkConfig {
                n,
                rate: panel.rate,
                ..base.clone()
            };
            for criterion in [Criterion::Zf, Criterion::Mmse] {
                for sic in [false, true] {
                    let spec = ReceiverSpec::new(family, criterion, sic);
                    let seed = child_seed(cfg.seed, label_key(&format!("fig3-{p}-{spec}")));
                    let mut g = gains(&link, spec, trials, seed)?;
                    // MMSE-SIC curves use the lower bound of the coding gain.
                    if let Some(lo) = g.c_lower {
                        g.c = lo;
                        g.c_ci = g.c_lower_ci.unwrap_or((lo, lo));
                    }
                    let mut row = vec![p.into(), panel.rate.into()];
                    row.extend(gain_row(spec, n, &g));
                    summary.push(row);
                    let mut t = Table::new(
                        format!("fig3_panel{p}_{}", file_label(spec)),
                        &["snr_db", "p_asym"],
                    );
                    for &s in &grid {
                        t.push(vec![s.into(), g.asymptote(db_to_linear(s)).min(1.0).into()]);
                    }
                    tables.push(t);
                }
            }
        }
    }
    tables.push(summary);
    Ok(tables)
}

/// Desk-scale arrival multiplier applied on top of the configured rate.
pub const DEFAULT_LOAD_SCALE: f64 = 100.0;

pub fn default_user_grid() -> Vec<usize> {
    (0..=26)
        .map(|k| (200.0 * 1.3f64.powi(k)).round() as usize)
        .collect()
}

fn default_variants() -> Vec<MmtcVariant> {
    let v = |r: &str, half_tti| MmtcVariant {
        receiver: r.to_string(),
        half_tti,
    };
    vec![
        v("WL-MMSE-SIC", false),
        v("WL-ZF", false),
        v("CL-MMSE-SIC", false),
        v("CL-MMSE-SIC", true),
    ]
}

/// Build the per-variant system configuration. Half-TTI variants get twice
/// the slots so every variant covers the same airtime.
pub fn variant_config(
    base: &MmtcConfig,
    m: usize,
    variant: &MmtcVariant,
    slots: usize,
) -> Result<(MmtcConfig, usize)> {
    let spec: ReceiverSpec = variant.receiver.parse()?;
    let cfg = MmtcConfig {
        m,
        family: spec.family,
        criterion: spec.criterion,
        sic: spec.sic,
        half_tti: false,
        ..base.clone()
    };
    if variant.half_tti {
        Ok((half_tti_mode(&cfg)?, 2 * slots))
    } else {
        Ok((cfg, slots))
    }
}

fn variant_label(v: &MmtcVariant) -> String {
    let spec = v.receiver.to_lowercase().replace('-', "_");
    if v.half_tti {
        format!("{spec}_half")
    } else {
        spec
    }
}

fn mmtc_experiment(cfg: &ExperimentConfig, prefix: &str) -> Result<Vec<Table>> {
    let slots = cfg.trials()?;
    let scale = cfg.sweep.load_scale.unwrap_or(DEFAULT_LOAD_SCALE);
    if !(scale > 0.0) {
        return Err(CliError::Config(format!("load_scale = {scale}")));
    }
    let mut base = cfg.mmtc.clone().unwrap_or_default();
    base.arrival_rate *= scale;
    let antennas = cfg.sweep.antennas.clone().unwrap_or_else(|| vec![1, 2]);
    let grid = cfg.sweep.users.clone().unwrap_or_else(default_user_grid);
    let variants = cfg.sweep.variants.clone().unwrap_or_else(default_variants);
    let mut summary = Table::new(
        format!("{prefix}_supported"),
        &[
            "m",
            "receiver",
            "half_tti",
            "supported_users",
            "qualified",
            "throughput",
        ],
    );
    let mut tables = Vec::new();
    for &m in &antennas {
        for v in &variants {
            let (vcfg, vslots) = variant_config(&base, m, v, slots)?;
            let seed = child_seed(cfg.seed, label_key(&format!("mmtc-{m}")));
            let res = supported_users(&vcfg, vcfg.drop_target, &grid, vslots, seed)?;
            let thr = res
                .sweep
                .iter()
                .find(|(u, _)| *u == res.users)
                .map_or(0.0, |(_, r)| r.throughput.mean);
            summary.push(vec![
                m.into(),
                v.receiver.as_str().into(),
                v.half_tti.into(),
                res.users.into(),
                res.qualified.into(),
                thr.into(),
            ]);
            let mut t = Table::new(
                format!("{prefix}_m{m}_{}", variant_label(v)),
                &[
                    "users",
                    "family",
                    "half_tti",
                    "drop_prob",
                    "ci_lo",
                    "ci_hi",
                    "throughput",
                ],
            );
            for (u, r) in &res.sweep {
                t.push(vec![
                    (*u).into(),
                    vcfg.family.to_string().into(),
                    v.half_tti.into(),
                    r.drop_prob.mean.into(),
                    r.drop_prob.ci95.0.into(),
                    r.drop_prob.ci95.1.into(),
                    r.throughput.mean.into(),
                ]);
            }
            tables.push(t);
        }
    }
    tables.push(summary);
    Ok(tables)
}
