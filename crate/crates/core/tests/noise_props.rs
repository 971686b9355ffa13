mod common;

use common::*;
use nsens::chaos::{efron_stein, variance_spectrum};
use nsens::noise::{bruteforce_cross_cov, bruteforce_noise_cov, conditional_noise_table, exact_noise_cov, NoiseParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_formula_matches_resampling(f in arb_function(5, 3), eps in 0.0f64..=1.0) {
        let p = NoiseParams::new(eps).unwrap();
        let exact = exact_noise_cov(&variance_spectrum(&f).unwrap(), p);
        let brute = bruteforce_noise_cov(&f, p).unwrap();
        prop_assert!((exact - brute).abs() < 1e-10 * f.variance().max(1.0));
    }

    #[test]
    fn nonincreasing_in_eps(f in arb_function(5, 3), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let s = variance_spectrum(&f).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c = |e| exact_noise_cov(&s, NoiseParams::new(e).unwrap());
        prop_assert!(c(hi) <= c(lo) + 1e-12);
    }

    #[test]
    fn conditional_mean_is_the_noise_operator(f in arb_function(4, 3), eps in 0.0f64..1.0) {
        let table = conditional_noise_table(&f, NoiseParams::new(eps).unwrap()).unwrap();
        let op = efron_stein(&f).unwrap().apply_noise_operator(1.0 - eps).unwrap();
        prop_assert!(max_abs_diff(table.values(), op.values()) < 1e-10 * f.variance().max(1.0));
    }

    #[test]
    fn cross_covariance_cauchy_schwarz((f, g) in arb_pair(4, 3), eps in 0.0f64..=1.0) {
        let p = NoiseParams::new(eps).unwrap();
        let cross = bruteforce_cross_cov(&f, &g, p).unwrap();
        let cf = bruteforce_noise_cov(&f, p).unwrap();
        let cg = bruteforce_noise_cov(&g, p).unwrap();
        prop_assert!(cross.abs() <= (cf * cg).sqrt() + 1e-10);
    }
}
