use liouville_core::brute::{brute_force_distance, brute_force_sets};
use liouville_core::catalog::BallCatalog;
use liouville_core::distance::{crossing_distance, crossing_strips, fixed_to_f64, CrossingMode, Weighting};
use liouville_core::experiments::{
    chi_estimate, crossings_of, diameter_lattice, efron_stein_decomposition, efron_stein_linear, holder_sample,
    lattice_diameter, logvar_scan, q_delta_scan, quantile_gap_bound, rsw_ratio, run_crossings, CrossingRecord,
    ExperimentConfig, QuantileTable, ScaleSetup, Verdict,
};
use liouville_core::stats::{ks_two_sample, linear_fit, lower_quantile};
use liouville_core::MeasureGrid;
use proptest::prelude::*;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        scales: vec![16, 32],
        samples: 10,
        aux_samples: 4,
        bootstrap_resamples: 100,
        ..ExperimentConfig::default()
    }
}

/// Records with the same hard and easy values at every scale.
fn injected(cfg: &ExperimentConfig, values: &[f64]) -> Vec<CrossingRecord> {
    let mut out = Vec::new();
    for &scale in &cfg.scales {
        for (i, &v) in values.iter().enumerate() {
            out.push(CrossingRecord {
                scale,
                sample: i,
                seed: i as u64,
                delta: cfg.delta(),
                lr: Some(v),
                easy: Some(v),
                hard: Some(v),
            });
        }
    }
    out
}

fn uniform_setup(cfg: &ExperimentConfig, scale: usize) -> (ScaleSetup, BallCatalog) {
    let setup = ScaleSetup::new(cfg, scale).unwrap();
    let cat = setup.catalog(&MeasureGrid::uniform(&setup.spec)).unwrap();
    (setup, cat)
}

#[test]
fn lower_quantile_convention() {
    assert_eq!(lower_quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
    assert_eq!(lower_quantile(&[3.0, 1.0, 2.0], 1.0 / 3.0), 1.0);
    assert_eq!(lower_quantile(&[3.0, 1.0, 2.0], 1.0), 3.0);
}

#[test]
fn quantile_table_marks_degenerate_cells() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        percentiles: vec![0.5],
        ..small_config()
    };
    let mut records = injected(&cfg, &[1.0, 2.0, 3.0]);
    let table = QuantileTable::from_records(&cfg, &records);
    assert!(table.cells.iter().all(|c| c.valid));
    for r in records.iter_mut().take(2) {
        r.hard = None;
    }
    let table = QuantileTable::from_records(&cfg, &records);
    assert!(table.cells.iter().any(|c| !c.valid));
}

#[test]
fn quantile_gap_bound_values() {
    let v = quantile_gap_bound(1.0, 0.5, 0.5).unwrap();
    assert!((v - (2.0 * 2f64.sqrt()).exp()).abs() < 1e-12 * v);
    assert_eq!(quantile_gap_bound(0.0, 0.1, 0.9).unwrap(), 1.0);
    assert!(quantile_gap_bound(1.0, 0.0, 0.5).is_err());
    assert!(quantile_gap_bound(1.0, 0.5, 1.0).is_err());
    assert!(quantile_gap_bound(-1.0, 0.5, 0.5).is_err());
}

proptest! {
    #[test]
    fn quantile_gap_bound_is_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0, p in 0.01f64..0.99, q in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile_gap_bound(lo, p, q).unwrap() <= quantile_gap_bound(hi, p, q).unwrap());
    }

    #[test]
    fn ks_of_identical_samples_is_zero(x in prop::collection::vec(0.1f64..100.0, 1..50)) {
        let (d, p) = ks_two_sample(&x, &x);
        prop_assert_eq!(d, 0.0);
        prop_assert!(p > 0.99);
    }
}

#[test]
fn injected_equal_distributions() {
    let cfg = small_config();
    let records = injected(&cfg, &[1.0, 2.0, 3.0, 5.0, 8.0, 13.0]);
    let rsw = rsw_ratio(&cfg, &records).unwrap();
    assert!(rsw.scales.iter().all(|s| s.ratio == 1.0));
    assert_eq!(rsw.stability, 1.0);
    let chi = chi_estimate(&cfg, &records).unwrap();
    // chi compares the upper hard quantile with the lower easy one.
    assert!(chi.scales.iter().all(|s| s.chi >= 1.0));
    let mut same = cfg.clone();
    same.p0 = 0.5;
    same.p1 = 0.5;
    let chi = chi_estimate(&same, &records).unwrap();
    assert!(chi.scales.iter().all(|s| s.chi == 1.0));
}

#[test]
fn constant_sample_has_zero_log_variance() {
    let cfg = small_config();
    let lv = logvar_scan(&cfg, &injected(&cfg, &[4.0; 8])).unwrap();
    assert!(lv.scales.iter().all(|s| s.variance == 0.0 && s.gap_bound == 1.0 && s.gap_ok));
}

#[test]
fn mostly_unreachable_scale_is_rejected() {
    let cfg = small_config();
    let mut records = injected(&cfg, &[1.0, 2.0, 3.0]);
    for r in records.iter_mut().filter(|r| r.scale == 32).take(2) {
        r.hard = None;
    }
    assert!(rsw_ratio(&cfg, &records).is_err());
}

#[test]
fn uniform_crossings_are_deterministic_and_match_brute_force() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        r_cap_fraction: 0.5,
        ..small_config()
    };
    let (setup, cat) = uniform_setup(&cfg, 16);
    let delta = 1e9;
    let recs = crossings_of(&cat, &setup, &[delta], 0).unwrap();
    let w = Weighting::Kappa {
        delta,
        r_max: setup.r_cap(),
    };
    let (from, to) = crossing_strips(cat.domain, CrossingMode::LeftRight).unwrap();
    let slow = brute_force_sets(&cat, w, |b| cat.meets_rect(b, from), |b| cat.meets_rect(b, to)).unwrap();
    assert_eq!(recs[0].lr, Some(slow.value));
    assert_eq!(crossings_of(&cat, &setup, &[delta], 1).unwrap()[0].lr, recs[0].lr);
}

#[test]
fn uniform_q_delta_staircase_matches_brute_force() {
    let cfg = ExperimentConfig {
        scales: vec![32],
        ..small_config()
    };
    let (setup, cat) = uniform_setup(&cfg, 32);
    let (from, to) = crossing_strips(cat.domain, CrossingMode::LeftRight).unwrap();
    let mut prev = 0.0;
    for delta in [200.0, 50.0, 12.0, 3.0] {
        let fast = crossing_distance(&cat, delta, setup.r_cap(), CrossingMode::LeftRight).unwrap();
        let w = Weighting::Kappa {
            delta,
            r_max: setup.r_cap(),
        };
        let slow = brute_force_sets(&cat, w, |b| cat.meets_rect(b, from), |b| cat.meets_rect(b, to)).unwrap();
        assert_eq!(fast.fixed, slow.fixed, "delta {delta}");
        assert!(fast.value >= prev);
        prev = fast.value;
    }
}

#[test]
fn q_delta_scan_needs_three_octaves() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        deltas: vec![10.0, 20.0, 40.0],
        ..small_config()
    };
    assert!(q_delta_scan(&cfg, &[]).is_err());
}

#[test]
fn q_delta_scan_is_monotone_per_sample() {
    let cfg = ExperimentConfig {
        scales: vec![32],
        samples: 8,
        deltas: vec![2.0, 4.0, 8.0, 16.0],
        ..small_config()
    };
    let scan = q_delta_scan(&cfg, &run_crossings(&cfg).unwrap()).unwrap();
    assert_eq!(scan.monotone_violations, 0);
    assert!(scan.points.windows(2).all(|w| w[0].median <= w[1].median));
}

#[test]
fn uniform_diameter_matches_all_pairs() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        ..small_config()
    };
    let (setup, cat) = uniform_setup(&cfg, 16);
    let w = Weighting::Kappa {
        delta: 1e9,
        r_max: setup.r_cap(),
    };
    let points = diameter_lattice(&setup, 3);
    let fast = lattice_diameter(&cat, w, &points).unwrap().unwrap();
    let mut slow = 0u128;
    for &p in &points {
        for &q in &points {
            slow = slow.max(brute_force_distance(&cat, w, p, q).unwrap().fixed);
        }
    }
    assert_eq!(fast, fixed_to_f64(slow));
}

#[test]
fn uniform_scaling_is_exact() {
    // Doubling the cell size doubles every length and multiplies uniform
    // masses by four while keeping the same cells in every ball.
    let cfg = ExperimentConfig {
        scales: vec![16],
        ..small_config()
    };
    let (small, a) = uniform_setup(&cfg, 16);
    let doubled = ExperimentConfig { cell_size: 2.0, ..cfg };
    let (big, b) = uniform_setup(&doubled, 16);
    assert_eq!(big.r_cap(), 2.0 * small.r_cap());
    for delta in [3.0, 12.0, 50.0] {
        let da = crossing_distance(&a, delta, small.r_cap(), CrossingMode::LeftRight).unwrap();
        let db = crossing_distance(&b, 4.0 * delta, big.r_cap(), CrossingMode::LeftRight).unwrap();
        assert_eq!(da.fixed, db.fixed, "delta {delta}");
    }
}

#[test]
fn uniform_forward_exponent_is_one() {
    let cfg = ExperimentConfig {
        scales: vec![64],
        deltas: vec![1e9],
        r_cap_fraction: 0.125,
        holder_sources: 6,
        holder_targets: 40,
        ..small_config()
    };
    let (setup, cat) = uniform_setup(&cfg, 64);
    let s = holder_sample(&cat, &setup, &cfg, 0, 1).unwrap();
    // Only separations spanning several of the largest balls.
    let (x, y): (Vec<f64>, Vec<f64>) = s
        .pairs
        .iter()
        .filter(|(e, _)| *e >= 3.0 * setup.r_cap())
        .map(|&(e, d)| (e.ln(), d.ln()))
        .unzip();
    let fit = linear_fit(&x, &y, 0.95).unwrap();
    assert!((fit.slope - 1.0).abs() < 0.15, "slope {}", fit.slope);
}

#[test]
fn efron_stein_linear_statistic_is_tight() {
    let cfg = ExperimentConfig {
        scales: vec![32],
        samples: 300,
        bootstrap_resamples: 1000,
        ..small_config()
    };
    let r = efron_stein_linear(&cfg).unwrap();
    let target = r.analytic_variance.unwrap();
    assert_eq!(target, r.blocks_used as f64 + 1.0);
    assert!(r.variance_ci.contains(target), "{:?} vs {target}", r.variance_ci);
    assert!(r.margin_ci3.contains(0.0), "{:?}", r.margin_ci3);
    assert_ne!(r.verdict, Verdict::Fail);
}

#[test]
fn efron_stein_on_small_box_runs_and_is_reproducible() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        samples: 3,
        bootstrap_resamples: 20,
        ..small_config()
    };
    let a = efron_stein_decomposition(&cfg).unwrap();
    let b = efron_stein_decomposition(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert!(a.coarse_term >= 0.0 && a.block_term >= 0.0);
    assert!(a.records.iter().all(|r| r.per_block.len() == a.blocks_used));
}
