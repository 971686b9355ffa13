mod common;

use common::*;
use nsens::chaos::variance_spectrum;
use nsens::influence::influence_profile;
use nsens::noise::{bruteforce_noise_cov, exact_noise_cov, NoiseParams};
use nsens::prob::TabulatedFunction;
use nsens::tribes::{tribes_evaluate_indices, tribes_stats, TribesSpec};
use proptest::prelude::*;

fn single_tribe(t: usize, a: u64) -> TabulatedFunction {
    TabulatedFunction::from_fn(rademacher_cube(t), |x| (x.iter().sum::<f64>() == a as f64) as u8 as f64).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_nonincreasing(t in 4u64..5000, gamma in 0.05f64..0.45, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let Ok(spec) = TribesSpec::new(t, gamma, 0.0) else { return Ok(()) };
        let at = |e: f64| tribes_stats(&TribesSpec { epsilon: e, ..spec.clone() }).unwrap();
        prop_assert!((at(0.0).q_t_eps - 1.0).abs() < 1e-12);
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(at(hi).q_t_eps <= at(lo).q_t_eps * (1.0 + 1e-12));
        let s = at(e1);
        prop_assert!(s.cov_exact >= -1e-15 && s.cov_exact <= s.var_exact * (1.0 + 1e-12));
    }
}

#[test]
fn single_tribe_enumeration() {
    for (t, eps) in [(4usize, 0.3), (9, 0.5), (12, 0.1)] {
        let spec = TribesSpec::new(t as u64, 0.25, eps).unwrap();
        let s = tribes_stats(&spec).unwrap();
        let y = single_tribe(t, spec.a_t);
        assert!((y.mean() - s.p_t).abs() < 1e-12);
        let joint = bruteforce_noise_cov(&y, NoiseParams::new(eps).unwrap()).unwrap() + s.p_t * s.p_t;
        assert!((joint / s.p_t - s.q_t_eps).abs() < 1e-10, "t = {t}");
        let joint = exact_noise_cov(&variance_spectrum(&y).unwrap(), NoiseParams::new(eps).unwrap()) + s.p_t * s.p_t;
        assert!((joint / s.p_t - s.q_t_eps).abs() < 1e-10);
    }
}

#[test]
fn small_tribes_match_enumeration() {
    // t = 4, a = 2, two tribes: 8 signs.
    let spec = TribesSpec::new(4, 0.25, 0.4).unwrap().with_m(2.0);
    assert_eq!(spec.a_t, 2);
    let s = tribes_stats(&spec).unwrap();
    let f = TabulatedFunction::from_config_fn(rademacher_cube(8), |c| {
        tribes_evaluate_indices(4, 2, &c.indices) as u8 as f64
    })
    .unwrap();
    assert!((f.variance() - s.var_exact).abs() < 1e-12);
    let cov = bruteforce_noise_cov(&f, NoiseParams::new(0.4).unwrap()).unwrap();
    assert!((cov - s.cov_exact).abs() < 1e-12);
    let prof = influence_profile(&f).unwrap();
    assert!((prof.w_total - s.w_exact).abs() < 1e-12);
    let classical: f64 = prof.classical.iter().map(|c| c.unwrap().powi(2)).sum();
    assert!((classical - s.w_classical).abs() < 1e-12);
    assert!((s.w_classical - 4.0 * s.w_exact).abs() < 1e-15);
}
