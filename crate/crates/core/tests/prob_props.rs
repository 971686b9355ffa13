mod common;

use common::*;
use nsens::prob::{FiniteLaw, ProductSpace};
use nsens::rng::Stream;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_are_a_probability(space in arb_space(6, 4)) {
        let w = space.weights().unwrap();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enumeration_order_is_canonical(space in arb_space(5, 4)) {
        let w = space.weights().unwrap();
        for (i, (c, wc)) in space.configs().unwrap().enumerate() {
            prop_assert_eq!(space.index_of(&c), i);
            prop_assert_eq!(&space.config_at(i), &c);
            prop_assert!((wc - w[i]).abs() < 1e-15);
        }
        let sizes = space.sizes();
        let c = space.config_at(1);
        prop_assert_eq!(c.indices[0], 1.min(sizes[0] as u32 - 1));
    }
}

#[test]
fn sampled_marginals_pass_chi_square() {
    let laws = vec![
        FiniteLaw::rademacher(),
        FiniteLaw::binary(0.0, 1.0, 0.9).unwrap(),
        FiniteLaw::new(vec![-1.0, 0.0, 2.0], vec![0.5, 0.3, 0.2]).unwrap(),
        FiniteLaw::uniform_range(4).unwrap(),
    ];
    let space = ProductSpace::new(laws).unwrap();
    let draws = 100_000;
    let mut counts: Vec<Vec<u64>> = space.sizes().iter().map(|&s| vec![0; s]).collect();
    let mut stream = Stream::new(1, 0);
    for _ in 0..draws {
        let c = space.sample_config(&mut stream);
        for (k, &i) in c.indices.iter().enumerate() {
            counts[k][i as usize] += 1;
        }
    }
    for (k, law) in space.laws().iter().enumerate() {
        let stat: f64 = law
            .probs()
            .iter()
            .zip(&counts[k])
            .map(|(&p, &o)| {
                let e = p * draws as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let crit = ChiSquared::new((law.size() - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-3);
        assert!(stat < crit, "coordinate {k}: {stat} >= {crit}");
    }
}
