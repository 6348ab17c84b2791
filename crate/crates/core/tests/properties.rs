use proptest::prelude::*;
use solenoid::forms::{build_dictionary, Monomial, Phase, TrigPoly};
use solenoid::levelset::{contour_trace, FieldGrid, ScalarFieldBundle};
use solenoid::suspension::{homology_class, realize_class, rs_current, RealizeConfig};

fn quick() -> RealizeConfig {
    RealizeConfig { ue_iterations: 2000, ..RealizeConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn realized_class_matches_target(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assume!(a.abs() + b.abs() > 0.05);
        let s = realize_class(&[a, b], &quick()).unwrap();
        let h = homology_class(&s).unwrap();
        prop_assert!((h[0] * s.scale() - a).abs() <= 1e-3);
        prop_assert!((h[1] * s.scale() - b).abs() <= 1e-3);
    }

    #[test]
    fn coordinate_pairings_give_the_class(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assume!(a.abs() + b.abs() > 0.05);
        let dict = build_dictionary(2, 1, 1).unwrap();
        let s = realize_class(&[a, b], &quick()).unwrap();
        let c = rs_current(&s, &dict).unwrap();
        let h = homology_class(&s).unwrap();
        prop_assert_eq!(&dict.entry(0).label, "dx");
        prop_assert_eq!(&dict.entry(1).label, "dy");
        prop_assert!((c.pairings[0] - h[0]).abs() <= 1e-9);
        prop_assert!((c.pairings[1] - h[1]).abs() <= 1e-9);
    }

    #[test]
    fn vertical_level_sets_have_length_two(c in -0.09f64..0.09) {
        // Level sets of 0.1 sin(2 pi x) are two vertical circles.
        let f = TrigPoly::monomial(2, Monomial::new(&[(1, Phase::Sin)]), 0.1).into();
        let grid = FieldGrid::sample(&ScalarFieldBundle::new(f).unwrap(), 64).unwrap();
        let contours = contour_trace(&grid, c, None).unwrap();
        prop_assert_eq!(contours.len(), 2);
        let len: f64 = contours.iter().map(|k| k.length()).sum();
        prop_assert!((len - 2.0).abs() <= 1e-9);
    }
}
