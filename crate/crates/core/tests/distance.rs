mod common;

use common::{random_instance, random_measure, uniform_measure};
use liouville_core::brute::{brute_force_circuit, brute_force_distance, brute_force_min_separated, brute_force_sets};
use liouville_core::catalog::{build_catalog, BallCatalog, CatalogOptions};
use liouville_core::distance::{
    around_distance, count_distance, crossing_distance, crossing_strips, min_separated_distance, modified_distance,
    set_distance, Annulus, ClipRect, CrossingMode, Weighting,
};
use liouville_core::{CellRect, Point};

#[test]
fn count_and_modified_match_brute_force() {
    for seed in 0..20 {
        for (w, h) in [(8, 8), (8, 16)] {
            let inst = random_instance(w, h, 1, 4.0, seed);
            let c = &inst.catalog;
            let fast = count_distance(c, inst.delta, inst.x, inst.y).unwrap();
            let slow = brute_force_distance(c, Weighting::Count { delta: inst.delta }, inst.x, inst.y).unwrap();
            assert_eq!((fast.fixed, fast.count, fast.reached), (slow.fixed, slow.count, slow.reached));
            let fast = modified_distance(c, inst.delta, 4.0, inst.x, inst.y).unwrap();
            let w = Weighting::Kappa { delta: inst.delta, r_max: 4.0 };
            let slow = brute_force_distance(c, w, inst.x, inst.y).unwrap();
            assert_eq!((fast.fixed, fast.count), (slow.fixed, slow.count));
        }
    }
}

#[test]
fn crossings_match_brute_force_on_uniform_measure() {
    let m = uniform_measure(16, 8);
    let c = build_catalog(&m, 1, 4.0).unwrap();
    for mode in [CrossingMode::LeftRight, CrossingMode::Easy, CrossingMode::Hard] {
        let fast = crossing_distance(&c, 1e9, 4.0, mode).unwrap();
        let (from, to) = crossing_strips(c.domain, mode).unwrap();
        let w = Weighting::Kappa { delta: 1e9, r_max: 4.0 };
        let slow = brute_force_sets(&c, w, |b| c.meets_rect(b, from), |b| c.meets_rect(b, to)).unwrap();
        assert_eq!(fast.fixed, slow.fixed, "{mode:?}");
    }
}

#[test]
fn unlimited_delta_uses_every_ball() {
    let inst = random_instance(8, 8, 1, 4.0, 3);
    let c = &inst.catalog;
    let total = c.measure.total_mass() * 2.0;
    let fast = count_distance(c, total, Point::new(0.5, 0.5), Point::new(7.5, 7.5)).unwrap();
    let uniform = uniform_measure(8, 8);
    let u = build_catalog(&uniform, 1, 4.0).unwrap();
    let geometric = count_distance(&u, 1e9, Point::new(0.5, 0.5), Point::new(7.5, 7.5)).unwrap();
    assert_eq!(fast.count, geometric.count);
}

#[test]
fn min_separated_matches_all_pairs_oracle_and_is_monotone() {
    for seed in 0..4 {
        let inst = random_instance(8, 8, 1, 4.0, 50 + seed);
        let c = &inst.catalog;
        let mut last = 0u128;
        for a in [0.3, 0.5, 0.7, 0.9] {
            let fast = min_separated_distance(c, inst.delta, 4.0, a, 1).unwrap();
            let w = Weighting::Kappa { delta: inst.delta, r_max: 4.0 };
            let slow = brute_force_min_separated(c, w, a, 1).unwrap();
            assert_eq!((fast.fixed, fast.count), (slow.fixed, slow.count));
            assert!(fast.fixed >= last);
            last = fast.fixed;
        }
    }
}

fn annulus_24() -> Annulus {
    Annulus {
        outer: CellRect::new(0, 0, 24, 24),
        inner: CellRect::new(8, 8, 8, 8),
    }
}

#[test]
fn circuit_matches_bounded_enumeration() {
    let m = uniform_measure(24, 24);
    let cat = build_catalog(&m, 2, 4.0).unwrap();
    let ann = annulus_24();
    let fast = around_distance(&cat, 1e9, 4.0, &ann, None).unwrap();
    let sub = liouville_core::distance::annulus_catalog(&cat, &ann, None).unwrap();
    let w = Weighting::Kappa { delta: 1e9, r_max: 4.0 };
    let slow = brute_force_circuit(&sub, w, ann.center(1.0), 20).unwrap();
    assert!(fast.reached);
    assert_eq!(fast.fixed, slow.fixed);
    assert!(fast.count <= 20);
}

#[test]
fn circuit_invariant_under_joint_rescaling() {
    let m = random_measure(24, 24, 1.0, 8);
    let cat = build_catalog(&m, 2, 4.0).unwrap();
    let ann = annulus_24();
    let delta = cat.masses()[cat.len() / 2];
    let base = around_distance(&cat, delta, 4.0, &ann, None).unwrap();
    let m4 = m.scale_measure(4.0).unwrap();
    let cat4 = build_catalog(&m4, 2, 4.0).unwrap();
    let scaled = around_distance(&cat4, 4.0 * delta, 4.0, &ann, None).unwrap();
    assert_eq!(base.fixed, scaled.fixed);
}

#[test]
fn straight_corridor_reduces_to_crossing() {
    let m = random_measure(24, 24, 1.0, 4);
    let cat = build_catalog(&m, 1, 4.0).unwrap();
    let delta = cat.masses()[cat.len() / 3];
    let clip = ClipRect {
        x0: -4,
        y0: 17,
        x1: 28,
        y1: 23,
    };
    let around = around_distance(&cat, delta, 4.0, &annulus_24(), Some(&clip)).unwrap();
    let corridor = BallCatalog::new(
        &m,
        &CatalogOptions {
            domain: Some(CellRect::new(0, 17, 24, 6)),
            ..CatalogOptions::new(1, 4.0)
        },
    )
    .unwrap();
    let crossing = crossing_distance(&corridor, delta, 4.0, CrossingMode::BottomTop).unwrap();
    assert!(around.reached);
    assert_eq!(around.fixed, crossing.fixed);
}

#[test]
fn clip_with_wrong_topology_is_rejected() {
    let m = uniform_measure(24, 24);
    let cat = build_catalog(&m, 2, 4.0).unwrap();
    let clip = ClipRect {
        x0: -4,
        y0: -4,
        x1: 30,
        y1: 30,
    };
    assert!(around_distance(&cat, 1.0, 4.0, &annulus_24(), Some(&clip)).is_err());
    let bad = Annulus {
        outer: CellRect::new(0, 0, 10, 10),
        inner: CellRect::new(0, 2, 4, 4),
    };
    assert!(around_distance(&cat, 1.0, 4.0, &bad, None).is_err());
}

#[test]
fn geodesic_inside_subbox_equals_subbox_distance() {
    let mut checked = 0;
    for seed in 0..30 {
        let m = random_measure(32, 32, 1.0, 200 + seed);
        let cat = build_catalog(&m, 1, 4.0).unwrap();
        let delta = cat.masses()[cat.len() / 2];
        let (x, y) = (Point::new(12.5, 13.5), Point::new(19.5, 18.5));
        let full = modified_distance(&cat, delta, 4.0, x, y).unwrap();
        let sub = CellRect::new(8, 8, 16, 16);
        let inside = full.chain.iter().all(|&b| {
            let (cx, cy) = cat.center_cell(cat.center_of(b as usize));
            sub.contains_cell(cx, cy)
        });
        if !inside {
            continue;
        }
        let restricted = BallCatalog::new(
            &m,
            &CatalogOptions {
                domain: Some(sub),
                ..CatalogOptions::new(1, 4.0)
            },
        )
        .unwrap();
        let d = modified_distance(&restricted, delta, 4.0, x, y).unwrap();
        assert_eq!(d.fixed, full.fixed);
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} geodesics stayed inside");
}

#[test]
fn separated_strips_add_up() {
    for seed in 0..10 {
        let m = random_measure(48, 16, 1.0, 300 + seed);
        let cat = build_catalog(&m, 1, 4.0).unwrap();
        let delta = cat.masses()[cat.len() / 2];
        let r = 2.0;
        let d = modified_distance(&cat, delta, r, Point::new(0.5, 8.5), Point::new(47.5, 8.5)).unwrap();
        // Strips of width 6 separated by gaps of 6 > 2R.
        let mut sum = 0u128;
        for x0 in [6, 18, 30] {
            let left = CellRect::new(x0, 0, 1, 16);
            let right = CellRect::new(x0 + 5, 0, 1, 16);
            let w = Weighting::Kappa { delta, r_max: r };
            let c = set_distance(&cat, w, &cat.balls_meeting(left), &cat.balls_meeting(right)).unwrap();
            sum += c.fixed;
        }
        assert!(d.fixed >= sum);
    }
}

#[test]
fn radius_cap_relaxation_bound() {
    let m = uniform_measure(32, 32);
    let cat = build_catalog(&m, 1, 8.0).unwrap();
    let (x, y) = (Point::new(0.5, 0.5), Point::new(31.5, 31.5));
    for delta in [5.0, 20.0, 80.0] {
        let dr = modified_distance(&cat, delta, 8.0, x, y).unwrap();
        for rp in [2.0, 4.0] {
            let drp = modified_distance(&cat, delta, rp, x, y).unwrap();
            let r = 8.0;
            // Enlarged box area for R = 8 around the 32x32 box.
            let leb = (32.0 + 2.0 * r) * (32.0 + 2.0 * r);
            let bound = 8.0 * std::f64::consts::PI.powi(2) * (r / rp).ceil() * leb / (rp * rp);
            assert!(drp.value >= dr.value);
            assert!(drp.value <= dr.value + bound);
        }
    }
}
