use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use wlsim_core::mmtc::{check_event_log, run_scenario, MmtcConfig};
use wlsim_core::montecarlo::{
    linear_fit, merge_all, run_chunks, wilson_interval, MomentAccumulator,
};
use wlsim_core::outage::{d_cl, d_wl, ell_ratio};
use wlsim_core::random_matrix::{
    ordered_eig_sym, sample_channel, sample_real_wishart, wl_transform,
};
use wlsim_core::receivers::{linear_sinrs, sic_sinr_stages, Criterion, Family};
use wlsim_core::rng::stream_rng;
use wlsim_core::wishart::{pfaffian, SkewSymmetricMatrix};

fn skew(size: usize, entries: &[f64]) -> SkewSymmetricMatrix {
    let mut it = entries.iter().copied().cycle();
    SkewSymmetricMatrix::from_upper(size, |_, _| it.next().unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pfaffian_squared_is_determinant(
        half in 1usize..=6,
        entries in proptest::collection::vec(-1.0f64..1.0, 66),
    ) {
        let a = skew(2 * half, &entries);
        let pf = pfaffian(&a).unwrap();
        let det = a.as_matrix().clone().determinant();
        prop_assume!(det.abs() > 1e-12);
        prop_assert!(rel(pf * pf, det) < 1e-9, "pf² {} det {}", pf * pf, det);
    }

    #[test]
    fn pfaffian_scales_and_flips(
        half in 1usize..=5,
        entries in proptest::collection::vec(-1.0f64..1.0, 45),
        c in 0.2f64..3.0,
    ) {
        let n = 2 * half;
        let a = skew(n, &entries);
        let pf = pfaffian(&a).unwrap();
        let scaled = SkewSymmetricMatrix::new(a.as_matrix() * c).unwrap();
        let want = c.powi(half as i32) * pf;
        prop_assert!((pfaffian(&scaled).unwrap() - want).abs() <= 1e-10 * want.abs().max(1e-6));
        // Swapping two indices negates the Pfaffian.
        let mut p = DMatrix::<f64>::identity(n, n);
        p.swap_rows(0, 1);
        let swapped = SkewSymmetricMatrix::new(&p * a.as_matrix() * p.transpose()).unwrap();
        prop_assert!((pfaffian(&swapped).unwrap() + pf).abs() <= 1e-10 * pf.abs().max(1e-6));
    }

    #[test]
    fn wilson_interval_is_a_bracket(n in 1u64..100_000, frac in 0.0f64..=1.0) {
        let s = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(s, n, 1.96);
        let p = s as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        // Four times the data at the same proportion narrows the interval.
        let (lo4, hi4) = wilson_interval(4 * s, 4 * n, 1.96);
        prop_assert!(hi4 - lo4 <= hi - lo + 1e-15);
    }

    #[test]
    fn accumulator_merge_matches_sequential(
        xs in proptest::collection::vec(-100.0f64..100.0, 2..200),
        split in 0usize..200,
    ) {
        let split = split.min(xs.len());
        let mut all = MomentAccumulator::new();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = MomentAccumulator::new();
        let mut b = MomentAccumulator::new();
        xs[..split].iter().for_each(|&x| a.push(x));
        xs[split..].iter().for_each(|&x| b.push(x));
        let merged = merge_all([&a, &b]);
        prop_assert_eq!(merged.count, all.count);
        prop_assert!((merged.mean() - all.mean()).abs() < 1e-9);
        prop_assert!((merged.variance() - all.variance()).abs() < 1e-7 * all.variance().max(1.0));
    }

    #[test]
    fn linear_fit_recovers_lines(
        a in -10.0f64..10.0,
        b in -5.0f64..5.0,
        xs in proptest::collection::btree_set(-1000i32..1000, 2..20),
    ) {
        let xs: Vec<f64> = xs.into_iter().map(|x| x as f64 / 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let (slope, intercept, r2) = linear_fit(&xs, &ys).unwrap();
        prop_assert!((slope - b).abs() < 1e-9 && (intercept - a).abs() < 1e-8);
        prop_assert!(r2 > 1.0 - 1e-9 || b.abs() < 1e-12);
    }

    #[test]
    fn ell_is_a_decreasing_fraction(r in 0.0f64..10.0, dr in 0.01f64..2.0) {
        let l = ell_ratio(r);
        prop_assert!(l > 0.0 && l <= 1.0);
        prop_assert!(ell_ratio(r + dr) < l);
        let g_cl = 2f64.powf(r) - 1.0;
        let g_wl = 2f64.powf(2.0 * r) - 1.0;
        if r > 0.0 {
            prop_assert!(rel(l, 2.0 * g_cl / g_wl) < 1e-12);
        }
    }

    #[test]
    fn wl_diversity_dominates_below_the_break_even_load(m in 1usize..=8, n_cl in 1usize..=8, n_wl in 1usize..=16) {
        prop_assume!(n_cl <= m && n_wl <= 2 * m);
        let (w, c) = (d_wl(m, n_wl).unwrap(), d_cl(m, n_cl).unwrap());
        if n_wl < 2 * n_cl - 1 {
            prop_assert!(w > c);
        } else if n_wl == 2 * n_cl - 1 {
            prop_assert_eq!(w, c);
        } else {
            prop_assert!(w < c);
        }
    }

    #[test]
    fn ordered_eigendecomposition(seed in any::<u64>(), n in 1usize..=6, extra in 0usize..4) {
        let mut rng = stream_rng(seed, 0);
        let w = sample_real_wishart(n, n + extra, &mut rng);
        let e = ordered_eig_sym(&w).unwrap();
        prop_assert!(e.eigenvalues.as_slice().windows(2).all(|p| p[0] <= p[1]));
        prop_assert!((e.reconstruct() - &w).norm() < 1e-9 * w.norm());
    }

    #[test]
    fn receiver_sinr_orderings(seed in any::<u64>(), m in 1usize..=3, load in 0.3f64..1.0, snr_db in 0.0f64..40.0) {
        let n = ((2 * m) as f64 * load).ceil() as usize;
        let mut rng = stream_rng(seed, 1);
        let h = wl_transform(&sample_channel(m, n, &mut rng).unwrap()).into_inner();
        let xi: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        let snr = 10f64.powf(snr_db / 10.0);
        let (Ok(zf), Ok(mmse)) = (
            linear_sinrs(&h, &xi, snr, Family::Wl, Criterion::Zf),
            linear_sinrs(&h, &xi, snr, Family::Wl, Criterion::Mmse),
        ) else {
            return Ok(());
        };
        for k in 0..n {
            prop_assert!(zf[k] >= 0.0);
            prop_assert!(mmse[k] >= zf[k] * (1.0 - 1e-9));
        }
        // ZF output SINR is linear in snr.
        let zf2 = linear_sinrs(&h, &xi, 2.0 * snr, Family::Wl, Criterion::Zf).unwrap();
        for k in 0..n {
            prop_assert!(rel(zf2[k], 2.0 * zf[k]) < 1e-9);
        }
        // The SIC stage taken first is the best linear stream.
        let report = sic_sinr_stages(&h, &xi, snr, Family::Wl, Criterion::Zf).unwrap();
        let best = zf.iter().copied().fold(0.0, f64::max);
        prop_assert!(rel(report.stage_trace[0].sinr, best) < 1e-9);
        prop_assert_eq!(report.stage_trace.len(), n);
    }

    #[test]
    fn mmtc_event_logs_conserve_packets(seed in 0u64..1_000, users in 1usize..3_000, m in 1usize..=2, wl in any::<bool>()) {
        let cfg = MmtcConfig {
            users,
            m,
            family: if wl { Family::Wl } else { Family::Cl },
            arrival_rate: 2e-3,
            ..MmtcConfig::default()
        };
        let r = run_scenario(&cfg, 1_000, seed, true).unwrap();
        let c = r.counters;
        prop_assert_eq!(c.offered, c.decoded + c.dropped());
        check_event_log(&cfg, &r).unwrap();
        for e in r.events.as_ref().unwrap() {
            prop_assert!(e.decoded.len() <= cfg.capacity());
            prop_assert!(e.decoded.iter().all(|u| e.users.contains(u)));
            prop_assert!(!e.overloaded || e.decoded.is_empty());
        }
    }
}

#[test]
fn chunked_runs_are_reproducible() {
    let f = |rng: &mut wlsim_core::rng::SimRng, count: usize| {
        (0..count).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
    };
    assert_eq!(run_chunks(5, 1000, 64, f), run_chunks(5, 1000, 64, f));
    assert_ne!(run_chunks(5, 1000, 64, f), run_chunks(6, 1000, 64, f));
}
