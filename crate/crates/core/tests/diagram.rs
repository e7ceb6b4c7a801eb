use proptest::prelude::*;
use qhgeo::lab::random::{random_domain, trial_rng};
use qhgeo::voronoi::LOCATE_TOL;
use qhgeo::CellLocation;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_ends_match_corners(seed in any::<u64>()) {
        let d = random_domain(&mut trial_rng(seed, 1, 0));
        for (ei, e) in d.edges().iter().enumerate() {
            for (side, end) in e.ends.iter().enumerate() {
                let s = if side == 0 { e.lo } else { e.hi };
                match end {
                    Some(c) => {
                        let corner = &d.corners()[*c];
                        // round-off grows with the distance of far corners
                        let tol = 1e-9 * (d.scale() + corner.point.norm());
                        prop_assert!(s.is_finite());
                        prop_assert!(corner.point.dist(e.carrier.at(s)) <= tol);
                        prop_assert!(corner.edges.contains(&ei));
                    }
                    None => prop_assert!(s.is_infinite()),
                }
            }
        }
    }

    #[test]
    fn corners_are_equidistant_and_locate(seed in any::<u64>()) {
        let d = random_domain(&mut trial_rng(seed, 2, 0));
        for (ci, c) in d.corners().iter().enumerate() {
            prop_assert!(c.cells.len() >= 3);
            let r = d.delta(c.point);
            for &k in &c.cells {
                prop_assert!((d.cells()[k].nucleus.dist(c.point) - r).abs() <= 1e-9 * (d.scale() + r));
            }
            prop_assert_eq!(d.locate(c.point, LOCATE_TOL), CellLocation::Corner { corner: ci });
        }
    }

    #[test]
    fn edges_bisect_their_nuclei(seed in any::<u64>()) {
        let d = random_domain(&mut trial_rng(seed, 3, 0));
        for e in d.edges() {
            let [a, b] = e.neighbors;
            let (sa, sb) = (d.cells()[a].nucleus, d.cells()[b].nucleus);
            prop_assert!(e.carrier.offset(sa) > 0.0 && e.carrier.offset(sb) < 0.0);
            prop_assert!((e.h - 0.5 * sa.dist(sb)).abs() <= 1e-12 * d.scale());
        }
    }
}
