mod common;

use common::*;
use nsens::chaos::efron_stein_with;
use nsens::influence::{binary_difference_moments, composition_influence_check, disagreement_with_independent_copy, influence_profile};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boolean_influences(f in arb_binary_space(6).prop_flat_map(arb_boolean_on)) {
        let prof = influence_profile(&f).unwrap();
        for k in 0..f.space().n() {
            let copy = disagreement_with_independent_copy(&f, k).unwrap();
            prop_assert!((prof.inf1[k] - 2.0 * prof.inf2[k]).abs() < 1e-10);
            prop_assert!((prof.inf1[k] - copy).abs() < 1e-10);
        }
    }

    #[test]
    fn binary_coordinates_real_values(f in arb_binary_space(6).prop_flat_map(arb_function_on)) {
        let prof = influence_profile(&f).unwrap();
        for k in 0..f.space().n() {
            let (m1, m2, p) = binary_difference_moments(&f, k).unwrap().unwrap();
            prop_assert!((prof.inf1[k] - 2.0 * p * (1.0 - p) * m1).abs() < 1e-10);
            prop_assert!((prof.inf2[k] - p * (1.0 - p) * m2).abs() < 1e-10);
        }
    }

    #[test]
    fn inf2_is_component_mass(f in arb_function(5, 3)) {
        let prof = influence_profile(&f).unwrap();
        let dec = efron_stein_with(&f, 0.0).unwrap();
        let n = f.space().n();
        for k in 0..n {
            let mass: f64 = (0..1u64 << n).filter(|m| m >> k & 1 == 1).map(|m| dec.component_norm_sq(m)).sum();
            prop_assert!((prof.inf2[k] - mass).abs() < 1e-10 * f.variance().max(1.0));
        }
        prop_assert!(prof.classical.iter().all(|c| c.is_some() == f.space().all_binary()));
    }

    #[test]
    fn composition_with_lipschitz_maps(f in arb_function(4, 3)) {
        prop_assert!(composition_influence_check(&f, f64::tanh, None).unwrap().holds);
        prop_assert!(composition_influence_check(&f, f64::abs, None).unwrap().holds);
        prop_assert!(composition_influence_check(&f, |x| x.clamp(-0.5, 0.5), Some(1.0)).unwrap().holds);
    }
}
