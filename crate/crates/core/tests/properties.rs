mod common;

use common::{random_link, random_rigid_motion, rel_close};
use proptest::prelude::*;
use ropewalk::contactmap::build_contact_plot;
use ropewalk::formats::{link_to_string, parse_link};
use ropewalk::gradients::{length_gradient, strut_gradient};
use ropewalk::smoothing::{round_corners, smooth_length, smooth_ropelength_bound};
use ropewalk::thickness::{enumerate_dcsd, enumerate_dcsd_bruteforce};
use ropewalk::{arclength_coordinates, minrad, strut_set, thickness, total_length, turning_angle, PolyLink, Strut};

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn vertex_values(link: &PolyLink, comp: usize, f: impl Fn(&PolyLink, usize, usize) -> f64) -> Vec<f64> {
    sorted((0..link.component_len(comp)).map(|i| f(link, comp, i)).collect())
}

fn by_key(mut s: Vec<Strut>) -> Vec<Strut> {
    s.sort_by_key(|s| s.key());
    s
}

fn same_struts(a: Vec<Strut>, b: Vec<Strut>) -> Result<(), TestCaseError> {
    let (a, b) = (by_key(a), by_key(b));
    prop_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        prop_assert_eq!(x.key(), y.key());
        prop_assert!((x.a.param - y.a.param).abs() <= 1e-12 && (x.b.param - y.b.param).abs() <= 1e-12);
        prop_assert!(rel_close(x.chord, y.chord, 1e-12));
    }
    Ok(())
}

fn link_params() -> impl Strategy<Value = PolyLink> {
    (any::<u64>(), 16usize..=64, any::<bool>()).prop_map(|(seed, n, two)| random_link(seed, n, two))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minrad_is_rigid_and_scales_linearly(link in link_params(), motion in any::<u64>()) {
        let moved = link.map_points(random_rigid_motion(motion)).unwrap();
        for comp in 0..link.num_components() {
            for i in 0..link.component_len(comp) {
                let r = minrad(&link, comp, i).unwrap();
                prop_assert!(r > 0.0);
                prop_assert!(rel_close(minrad(&moved, comp, i).unwrap(), r, 1e-12));
                for c in [0.5, 2.0, 10.0] {
                    prop_assert!(rel_close(minrad(&link.scaled(c), comp, i).unwrap(), c * r, 1e-12));
                }
            }
        }
    }

    #[test]
    fn lengths_and_offsets_agree(link in link_params()) {
        let total = total_length(&link);
        let per: f64 = (0..link.num_components()).map(|c| link.component_length(c)).sum();
        prop_assert!(rel_close(total, per, 1e-12));
        let index = arclength_coordinates(&link);
        prop_assert!(rel_close(index.total_length(), total, 1e-12));
        let offsets = index.component_offsets();
        prop_assert!(offsets.windows(2).all(|w| w[0] < w[1]));
        for comp in 0..link.num_components() {
            prop_assert!(index.edge_offsets(comp).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn reversal_keeps_angle_and_radius_multisets(link in link_params()) {
        for comp in 0..link.num_components() {
            let rev = link.reversed_component(comp);
            prop_assert!(rel_close(total_length(&rev), total_length(&link), 1e-12));
            let angle = |l: &PolyLink, c, i| turning_angle(l, c, i).unwrap();
            let radius = |l: &PolyLink, c, i| minrad(l, c, i).unwrap();
            for (a, b) in vertex_values(&rev, comp, angle).iter().zip(vertex_values(&link, comp, angle)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            for (a, b) in vertex_values(&rev, comp, radius).iter().zip(vertex_values(&link, comp, radius)) {
                prop_assert!(rel_close(*a, b, 1e-12));
            }
        }
    }

    #[test]
    fn thickness_is_rigid_and_scale_covariant(link in link_params(), motion in any::<u64>(), c in 0.1f64..10.0) {
        let r = thickness(&link).unwrap();
        let moved = thickness(&link.map_points(random_rigid_motion(motion)).unwrap()).unwrap();
        prop_assert!(rel_close(moved.pthi, r.pthi, 1e-10));
        prop_assert!(rel_close(moved.prop, r.prop, 1e-10));
        let scaled = thickness(&link.scaled(c)).unwrap();
        prop_assert!(rel_close(scaled.pthi, c * r.pthi, 1e-12));
        prop_assert!(rel_close(scaled.prop, r.prop, 1e-12));
        prop_assert!(r.pthi <= r.min_minrad && r.pthi <= r.min_strut_halfdist);
        prop_assert!(r.pthi == r.min_minrad || r.pthi == r.min_strut_halfdist);
    }

    #[test]
    fn no_strut_is_shorter_than_the_tube_diameter(link in link_params()) {
        let r = thickness(&link).unwrap();
        for s in enumerate_dcsd(&link) {
            prop_assert!(s.chord >= 2.0 * r.pthi - 1e-12);
            prop_assert!(rel_close(s.realized_chord(&link), s.chord, 1e-12));
        }
    }

    #[test]
    fn midpoint_insertion_never_thickens(link in link_params()) {
        let fine = link.subdivided();
        prop_assert!(rel_close(total_length(&fine), total_length(&link), 1e-12));
        prop_assert!(thickness(&fine).unwrap().pthi <= thickness(&link).unwrap().pthi + 1e-12);
    }

    #[test]
    fn length_gradient_is_translation_free(link in link_params()) {
        let g = length_gradient(&link).unwrap();
        for comp in 0..link.num_components() {
            let start = link.component_starts()[comp];
            let sum = g.0[start..start + link.component_len(comp)].iter().fold(ropewalk::Vec3::zeros(), |a, b| a + b);
            prop_assert!(sum.norm() <= 1e-10);
        }
    }

    #[test]
    fn strut_gradient_ignores_orientation(link in link_params()) {
        for s in enumerate_dcsd(&link).into_iter().take(10) {
            prop_assert_eq!(strut_gradient(&link, &s).unwrap(), strut_gradient(&link, &s.swapped()).unwrap());
        }
    }

    #[test]
    fn link_files_round_trip_bit_exactly(link in link_params(), motion in any::<u64>()) {
        let awkward = link.map_points(random_rigid_motion(motion)).unwrap();
        let back = parse_link(&link_to_string(&awkward)).unwrap();
        prop_assert_eq!(back.component_starts(), awkward.component_starts());
        for (a, b) in back.points().iter().zip(awkward.points()) {
            for k in 0..3 {
                prop_assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn contact_plot_follows_the_link(link in link_params(), motion in any::<u64>(), c in 0.1f64..10.0) {
        let mut struts = strut_set(&link, &thickness(&link).unwrap(), 0.05 * thickness(&link).unwrap().pthi);
        for (k, s) in struts.iter_mut().enumerate() {
            s.lambda = Some(if k % 3 == 2 { 0.0 } else { 1.0 + k as f64 });
        }
        let positive = struts.iter().filter(|s| s.lambda.unwrap() > 0.0).count();
        let plot = build_contact_plot(&link, &struts).unwrap();
        prop_assert_eq!(plot.boxes.len(), positive);
        for b in &plot.boxes {
            prop_assert!(0.0 <= b.s && b.s < b.t && b.t <= plot.total_length && b.size > 0.0);
        }
        let swapped: Vec<Strut> = struts.iter().map(Strut::swapped).collect();
        prop_assert_eq!(&build_contact_plot(&link, &swapped).unwrap().boxes, &plot.boxes);
        let moved = build_contact_plot(&link.map_points(random_rigid_motion(motion)).unwrap(), &struts).unwrap();
        let scaled = build_contact_plot(&link.scaled(c), &struts).unwrap();
        for ((b, m), s) in plot.boxes.iter().zip(&moved.boxes).zip(&scaled.boxes) {
            prop_assert!((b.s - m.s).abs() <= 1e-9 && (b.t - m.t).abs() <= 1e-9 && (b.size - m.size).abs() <= 1e-9);
            prop_assert!(rel_close(s.s, c * b.s, 1e-12));
            prop_assert!(rel_close(s.t, c * b.t, 1e-12));
            prop_assert!(rel_close(s.size, c * b.size, 1e-12));
        }
    }

    #[test]
    fn rounding_shortens_monotonically(link in link_params()) {
        let rho = thickness(&link).unwrap().pthi;
        let lengths: Vec<f64> = [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|f| smooth_length(&round_corners(&link, f * rho).unwrap()))
            .collect();
        prop_assert!(lengths[0] <= total_length(&link));
        prop_assert!(lengths.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accelerated_dcsd_matches_bruteforce(link in link_params()) {
        same_struts(enumerate_dcsd(&link), enumerate_dcsd_bruteforce(&link))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn smooth_bound_never_exceeds_polygonal_ropelength(seed in any::<u64>(), n in 16usize..=40) {
        let link = random_link(seed, n, false);
        let prop = thickness(&link).unwrap().prop;
        prop_assert!(smooth_ropelength_bound(&link).unwrap() < prop);
    }
}
