use nsens::noise::paired_cov;
use nsens::polymer::*;
use nsens::prob::FiniteLaw;
use nsens::rng::Stream;

const MC_TOL: f64 = 1e-4;

fn bump_spec(r: f64) -> ZSpec {
    ZSpec::new(TestFunction2D::bump(r), TestFunction2D::bump(r))
}

#[test]
fn influence_formula_matches_monte_carlo() {
    let p = PolymerParams::new(64, 0.0, three_point_law(), 1e-6).unwrap();
    let g = TestFunction2D::gaussian_bump(0.3, 0.75);
    let spec = ZSpec::new(g.clone(), g.clone());
    let inf = polymer_influence(&p, &g, &g, 32, (0, 0)).unwrap();
    let exact = inf.exact.unwrap();
    let ratio = exact / inf.bound;
    assert!((ratio - p.zeta_abs_mean() / p.sigma_n).abs() < 1e-12 && ratio < 1.0);
    let mc = mc_site_influence(&p, &spec, 32, (0, 0), 100_000, 5).unwrap();
    assert!((mc.estimate - exact).abs() < 3.0 * mc.stderr, "mc {mc:?} exact {exact}");
}

#[test]
fn overlap_matches_two_walk_simulation() {
    let n = 32;
    let samples = 200_000;
    let mut s = Stream::new(17, 0);
    let mut step = |p: &mut (i64, i64)| match (s.uniform() * 4.0) as u8 {
        0 => p.0 += 1,
        1 => p.0 -= 1,
        2 => p.1 += 1,
        _ => p.1 -= 1,
    };
    let meets: Vec<f64> = (0..samples)
        .map(|_| {
            let (mut a, mut b) = ((0, 0), (0, 0));
            (0..n).filter(|_| {
                step(&mut a);
                step(&mut b);
                a == b
            })
            .count() as f64
        })
        .collect();
    let mean = meets.iter().sum::<f64>() / samples as f64;
    let sd = (meets.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (samples - 1) as f64).sqrt();
    let r = overlap_r(n);
    assert!((mean - r).abs() < 3.0 * sd / (samples as f64).sqrt(), "{mean} vs {r}");
}

#[test]
fn overlap_grows_like_log_over_pi() {
    let rel = |n: usize| overlap_r(n) / ((n as f64).ln() / std::f64::consts::PI);
    let (a, b) = (rel(4096), rel(16384));
    assert!((a - 1.0).abs() < 0.15, "{a}");
    assert!((b - 1.0).abs() < (a - 1.0).abs(), "{a} {b}");
    let rs = return_probabilities(200);
    assert!(rs.iter().all(|&c| c > 0.0));
    assert!((overlap_r(1) - 0.25).abs() < 1e-15);
}

#[test]
fn partition_function_is_multilinear_in_site_weights() {
    let p = PolymerParams::new(64, 0.0, three_point_law(), 1e-6).unwrap();
    let spec = bump_spec(0.5);
    let w = p.weights();
    let mut s = Stream::new(3, 0);
    for i in 0..100 {
        let layer = 1 + (s.uniform() * 64.0) as usize;
        let z = ((s.uniform() * 9.0) as i64 - 4, (s.uniform() * 9.0) as i64 - 4);
        let zs = site_perturbation_values(&p, &spec, 11, i, layer, z).unwrap();
        let slope = (zs[2] - zs[0]) / (w[2] - w[0]);
        let pred = zs[0] + slope * (w[1] - w[0]);
        assert!((pred - zs[1]).abs() <= 1e-12 * zs[1].abs().max(1e-300), "site {layer} {z:?}: {zs:?}");
    }
}

#[test]
fn white_noise_moments() {
    let p = PolymerParams::rademacher(64, 0.0).unwrap();
    let rho = SpaceTimeFunction::bump(0.2, 0.9, 0.75);
    let b = p.box_radius(1.0);
    let samples = 10_000;
    let xs: Vec<f64> = (0..samples).map(|r| white_noise_functional_hashed(&p, b, &rho, 8, r).unwrap()).collect();
    let nf = samples as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    assert!(mean.abs() < 3.0 * (m2 / nf).sqrt());
    let exact = white_noise_variance(64, &rho).unwrap();
    assert!((m2 - exact).abs() < 3.0 * ((m4 - m2 * m2) / nf).sqrt(), "{m2} vs {exact}");
    assert_eq!(white_noise_functional_hashed(&p, b, &SpaceTimeFunction::zero(), 8, 0).unwrap(), 0.0);
}

#[test]
fn partition_function_is_unbiased() {
    let spec = bump_spec(0.5);
    for n in [64, 128, 256] {
        let p = PolymerParams::rademacher(n, 0.0).unwrap().with_trunc_tol(MC_TOL);
        let free = kernel_formula_value(&p, &spec).unwrap();
        let mc = mc_partition_mean(&p, &spec, 2000, 21).unwrap();
        assert!((mc.estimate - free).abs() < 3.0 * mc.stderr, "N = {n}: {mc:?} vs {free}");
    }
}

#[test]
fn no_noise_gives_the_variance() {
    let p = PolymerParams::rademacher(64, 0.0).unwrap().with_trunc_tol(MC_TOL);
    let pairs = sample_pairs(&p, &[bump_spec(0.5)], 0.0, 2000, 4).unwrap();
    let z: Vec<f64> = pairs.iter().map(|q| q.0[0]).collect();
    let zn: Vec<f64> = pairs.iter().map(|q| q.1[0]).collect();
    assert_eq!(z, zn);
    let cov = mc_polymer_noise_cov(&p, &[bump_spec(0.5)], 0.0, 2000, 4, None).unwrap();
    let var = paired_cov(&z, &z);
    assert!((cov.estimate - var.estimate).abs() <= 3.0 * cov.stderr);
}

#[test]
fn smoothed_squares_give_positive_partition_functions() {
    let p = PolymerParams::new(64, 0.0, three_point_law(), 1e-6).unwrap();
    let sq = TestFunction2D::smoothed_square(1.0, 0.25);
    let spec = ZSpec::new(sq.clone(), sq);
    for r in 0..20 {
        assert!(partition_value_hashed(&p, &spec, 2, r).unwrap() > 0.0);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let p = PolymerParams::rademacher(64, 0.0).unwrap().with_trunc_tol(MC_TOL);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| mc_polymer_noise_cov(&p, &[bump_spec(0.5)], 0.5, 300, 9, None).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn three_point_law_is_admissible_only_below_its_ceiling() {
    // σ² < 1/p_max − 1 = 1 for the three-point law.
    let law = three_point_law();
    assert!(solve_beta(&law, 0.99).is_ok());
    assert!(solve_beta(&law, 1.01).is_err());
    assert!(PolymerParams::new(64, 0.0, FiniteLaw::uniform(vec![-1.0, 0.0]).unwrap(), 1e-6).is_err());
}
