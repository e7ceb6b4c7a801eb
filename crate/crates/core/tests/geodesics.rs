use proptest::prelude::*;
use qhgeo::engine::{connect, exp_map, polyline_upper_bound, prolong, qh_distance, shoot, GeodesicPath};
use qhgeo::lab::checks::regularity_margins;
use qhgeo::lab::random::{random_domain, random_point, trial_rng, MIN_START_DELTA};
use qhgeo::{Point, VoronoiDomain};

fn setup(seed: u64) -> (VoronoiDomain, Point) {
    let mut rng = trial_rng(seed, 0xabc, 0);
    let d = random_domain(&mut rng);
    let x = random_point(&mut rng, &d, MIN_START_DELTA);
    (d, x)
}

fn geodesic(seed: u64, phi: f64, r: f64) -> (VoronoiDomain, GeodesicPath) {
    let (d, x) = setup(seed);
    let g = shoot(&d, x, Point::polar(phi), r).unwrap();
    (d, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pieces_join_with_continuous_tangent(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..3.0) {
        let (d, g) = geodesic(seed, phi, r);
        prop_assert!((g.total_qh_len - r).abs() <= 1e-12 * r.max(1.0));
        for w in g.pieces.windows(2) {
            let gap = w[0].end().dist(w[1].start());
            prop_assert!(gap <= 1e-10 * d.scale(), "position jump {gap}");
            let turn = w[0].tangent(w[0].qh_len()).dist(w[1].tangent(0.0));
            prop_assert!(turn <= 1e-8, "tangent jump {turn}");
        }
    }

    #[test]
    fn canonical_speed_and_lipschitz_tangent(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..3.0) {
        let (d, g) = geodesic(seed, phi, r);
        let worst = regularity_margins(&d, &g, 400).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= -1e-9, "margin {worst}");
    }

    #[test]
    fn gehring_palka_along_shots(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..3.0) {
        let (d, g) = geodesic(seed, phi, r);
        let dx = d.delta(g.start);
        for k in 0..=50 {
            let t = r * k as f64 / 50.0;
            let p = g.eval(t);
            prop_assert!((d.delta(p) / dx).ln().abs() <= t + 1e-9);
            prop_assert!(p.dist(g.start) <= (t.exp() - 1.0) * dx * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn distance_never_exceeds_shot_length(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..2.0) {
        let (d, g) = geodesic(seed, phi, r);
        let dist = qh_distance(&d, g.start, g.end()).unwrap();
        prop_assert!(dist <= r * (1.0 + 1e-8));
        // short initial arcs are minimizing
        let s = (0.05 * r).min(0.05);
        let ds = qh_distance(&d, g.start, g.eval(s)).unwrap();
        prop_assert!((ds - s).abs() <= 1e-7 * s, "{ds} vs {s}");
    }

    #[test]
    fn truncate_then_prolong_round_trips(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.1f64..3.0, frac in 0.05f64..0.95) {
        let (d, g) = geodesic(seed, phi, r);
        let s = frac * r;
        let head = g.truncate(s).unwrap();
        prop_assert!((head.total_qh_len - s).abs() <= 1e-12 * r.max(1.0));
        let back = prolong(&d, &head, r - s).unwrap();
        prop_assert!((back.total_qh_len - r).abs() <= 1e-12 * r.max(1.0));
        for k in 0..=40 {
            let t = r * k as f64 / 40.0;
            let err = back.eval(t).dist(g.eval(t));
            prop_assert!(err <= 1e-8 * d.delta(g.start), "t = {t}: {err}");
        }
    }

    #[test]
    fn exp_map_is_continuous_in_angle(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..2.0) {
        let (d, x) = setup(seed);
        let eps = 1e-7;
        let a = exp_map(&d, x, phi, r).unwrap();
        let b = exp_map(&d, x, phi + eps, r).unwrap();
        prop_assert!(a.dist(b) <= 10.0 * (2.0 * r).exp() * eps * d.delta(x) * (1.0 + r));
    }

    #[test]
    fn reversal_runs_backwards(seed in any::<u64>(), phi in -3.14f64..3.14, r in 0.05f64..3.0) {
        let (d, g) = geodesic(seed, phi, r);
        let back = g.reversed().unwrap();
        prop_assert!((back.total_qh_len - r).abs() <= 1e-12 * r.max(1.0));
        for k in 0..=40 {
            let t = r * k as f64 / 40.0;
            prop_assert!(back.eval(r - t).dist(g.eval(t)) <= 1e-9 * d.delta(g.eval(t)));
            prop_assert!((back.eval_tangent(r - t) + g.eval_tangent(t)).norm() <= 1e-8);
        }
    }

    #[test]
    fn distance_is_symmetric_and_triangular(seed in any::<u64>(), a in -3.14f64..3.14, b in -3.14f64..3.14, r in 0.1f64..1.5, s in 0.1f64..1.5) {
        let (d, x) = setup(seed);
        let y = exp_map(&d, x, a, r).unwrap();
        let z = exp_map(&d, x, b, s).unwrap();
        let dxy = qh_distance(&d, x, y).unwrap();
        let dyx = qh_distance(&d, y, x).unwrap();
        prop_assert!((dxy - dyx).abs() <= 1e-7 * dxy.max(1e-3));
        let dyz = qh_distance(&d, y, z).unwrap();
        let dxz = qh_distance(&d, x, z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-7);
        prop_assert!(dyz <= dyx + dxz + 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // independent endpoints often need geodesics that slide on an edge
    #[test]
    fn independent_pairs_connect_both_ways(seed in any::<u64>()) {
        let (d, x) = setup(seed);
        let y = random_point(&mut trial_rng(seed, 0xabd, 0), &d, MIN_START_DELTA);
        let ub = polyline_upper_bound(&d, x, y).unwrap();
        prop_assume!(ub <= 3.0);
        let fwd = connect(&d, x, y).unwrap();
        let back = connect(&d, y, x).unwrap();
        prop_assert!(fwd.distance <= ub * (1.0 + 1e-9));
        prop_assert!((fwd.distance - back.distance).abs() <= 1e-7 * fwd.distance.max(1e-3));
        let p = &fwd.paths[0];
        prop_assert!(p.end().dist(y) <= 1e-8 * d.delta(y));
        for w in p.pieces.windows(2) {
            prop_assert!(w[0].end().dist(w[1].start()) <= 1e-10 * d.scale());
            prop_assert!(w[0].tangent(w[0].qh_len()).dist(w[1].tangent(0.0)) <= 1e-8);
        }
    }
}

#[test]
fn connect_paths_end_at_target() {
    let (d, x) = setup(11);
    let y = exp_map(&d, x, 0.9, 1.7).unwrap();
    let res = connect(&d, x, y).unwrap();
    assert!(res.unique);
    let p = &res.paths[0];
    assert!(p.end().dist(y) <= 1e-8 * d.delta(y));
    assert!((p.total_qh_len - res.distance).abs() < 1e-15);
    assert!(res.distance <= 1.7 * (1.0 + 1e-8));
}

#[test]
fn geodesic_json_has_pieces_and_events() {
    let (_, g) = geodesic(3, 0.2, 2.5);
    let v: serde_json::Value = serde_json::to_value(&g).unwrap();
    assert_eq!(v["pieces"].as_array().unwrap().len(), g.pieces.len());
    assert_eq!(v["events"].as_array().unwrap().len(), g.events.len());
    assert!(v["pieces"][0]["type"].is_string());
}
