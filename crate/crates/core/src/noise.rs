//! ε-resampling and noise covariances: exact, brute force and Monte Carlo.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chaos::{cond_expect_coord, VarianceSpectrum};
use crate::error::{Error, Result};
use crate::prob::{Config, ProductSpace, TabulatedFunction};
use crate::rng::Stream;

/// Cap on `config_count · 2^n` for the brute-force oracle.
pub const BRUTE_FORCE_CAP: u64 = 1 << 24;

/// Samples per Monte Carlo block; each block owns one stream.
pub const MC_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub epsilon: f64,
}

impl NoiseParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange { what: "epsilon", detail: format!("{epsilon} not in [0, 1]") });
        }
        Ok(Self { epsilon })
    }
}

/// `ω^ε`: each coordinate is kept with probability `1 − ε`, else redrawn from its marginal.
pub fn resample(space: &ProductSpace, c: &Config, params: NoiseParams, stream: &mut Stream) -> Config {
    let indices = c
        .indices
        .iter()
        .zip(space.laws())
        .map(|(&i, law)| {
            if stream.uniform() < params.epsilon {
                law.sample_index(stream) as u32
            } else {
                i
            }
        })
        .collect();
    Config { indices }
}

/// `Σ_{d≥1} (1 − ε)^d ‖f^{(d)}‖²`.
pub fn exact_noise_cov(spec: &VarianceSpectrum, params: NoiseParams) -> f64 {
    spec.noise_weighted(1.0 - params.epsilon)
}

/// Table of `E[f(ω^ε) | ω]`, summing over the resampled subset `S` with
/// weight `ε^{|S|}(1 − ε)^{n−|S|}` and integrating the coordinates of `S`.
pub fn conditional_noise_table(f: &TabulatedFunction, params: NoiseParams) -> Result<TabulatedFunction> {
    let space = f.space();
    let n = space.n();
    let count = space.check_enumerable()? as u128;
    let work = count.saturating_mul(1u128 << n.min(64));
    if work > BRUTE_FORCE_CAP as u128 {
        return Err(Error::CapExceeded { count: work, cap: BRUTE_FORCE_CAP });
    }
    let eps = params.epsilon;
    let mut acc = vec![0.0; f.values().len()];
    fn walk(k: usize, g: TabulatedFunction, w: f64, eps: f64, acc: &mut [f64]) -> Result<()> {
        if w == 0.0 {
            return Ok(());
        }
        if k == g.space().n() {
            acc.iter_mut().zip(g.values()).for_each(|(a, &v)| *a += w * v);
            return Ok(());
        }
        let integrated = cond_expect_coord(&g, k)?;
        walk(k + 1, g, w * (1.0 - eps), eps, acc)?;
        walk(k + 1, integrated, w * eps, eps, acc)
    }
    walk(0, f.clone(), 1.0, eps, &mut acc)?;
    f.with_values(acc)
}

/// `Cov[f(ω^ε), f(ω)]` by the resample-subset expansion.
pub fn bruteforce_noise_cov(f: &TabulatedFunction, params: NoiseParams) -> Result<f64> {
    let t = conditional_noise_table(f, params)?;
    let m = f.mean();
    Ok(f.inner(&t) - m * m)
}

/// `Cov[f(ω^ε), g(ω)]`, same expansion.
pub fn bruteforce_cross_cov(f: &TabulatedFunction, g: &TabulatedFunction, params: NoiseParams) -> Result<f64> {
    let t = conditional_noise_table(f, params)?;
    Ok(g.inner(&t) - f.mean() * g.mean())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Plug-in covariance of paired samples with the standard error of the mean
/// of the centred products.
pub fn paired_cov(xs: &[f64], ys: &[f64]) -> McEstimate {
    let n = xs.len();
    let nf = n as f64;
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if n == 0 || constant(xs) || constant(ys) {
        return McEstimate { estimate: 0.0, stderr: 0.0, samples: n };
    }
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let c = prods.iter().sum::<f64>() / nf;
    let v = prods.iter().map(|p| (p - c) * (p - c)).sum::<f64>() / (nf - 1.0).max(1.0);
    McEstimate { estimate: c * nf / (nf - 1.0).max(1.0), stderr: (v / nf).sqrt(), samples: n }
}

fn blocks(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(MC_BLOCK))
        .map(|b| (b, MC_BLOCK.min(samples - b * MC_BLOCK)))
        .collect()
}

/// Paired Monte Carlo estimate of `Cov[f(ω^ε), f(ω)]`.
///
/// Block `b` draws from stream `(seed, b)`, so the result does not depend on
/// the number of workers.
pub fn mc_noise_cov<F>(evaluator: F, space: &ProductSpace, params: NoiseParams, samples: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&Config) -> f64 + Sync,
{
    Ok(mc_noise_cov_sweep(evaluator, space, &[params.epsilon], samples, seed)?[0])
}

/// Sweep over several `ε` with common random numbers: each sample shares `ω`,
/// the uniforms `U_i` and the fresh values across all `ε`.
pub fn mc_noise_cov_sweep<F>(evaluator: F, space: &ProductSpace, eps: &[f64], samples: usize, seed: u64) -> Result<Vec<McEstimate>>
where
    F: Fn(&Config) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
    }
    for &e in eps {
        NoiseParams::new(e)?;
    }
    let n = space.n();
    let per_block: Vec<(Vec<f64>, Vec<Vec<f64>>)> = blocks(samples)
        .into_par_iter()
        .map(|(b, len)| {
            let mut stream = Stream::new(seed, b as u64);
            let mut xs = Vec::with_capacity(len);
            let mut ys = vec![Vec::with_capacity(len); eps.len()];
            let mut u = vec![0.0; n];
            let mut fresh = vec![0u32; n];
            for _ in 0..len {
                let omega = space.sample_config(&mut stream);
                for k in 0..n {
                    u[k] = stream.uniform();
                    fresh[k] = space.law(k).sample_index(&mut stream) as u32;
                }
                xs.push(evaluator(&omega));
                for (j, &e) in eps.iter().enumerate() {
                    let indices = (0..n).map(|k| if u[k] < e { fresh[k] } else { omega.indices[k] }).collect();
                    ys[j].push(evaluator(&Config { indices }));
                }
            }
            (xs, ys)
        })
        .collect();
    let mut xs = Vec::with_capacity(samples);
    let mut ys = vec![Vec::with_capacity(samples); eps.len()];
    for (bx, by) in per_block {
        xs.extend(bx);
        for (dst, src) in ys.iter_mut().zip(by) {
            dst.extend(src);
        }
    }
    Ok(ys.iter().map(|y| paired_cov(y, &xs)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub cov_exact: Option<f64>,
    pub cov_mc: f64,
    pub stderr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::variance_spectrum;
    use crate::prob::FiniteLaw;
    use std::sync::Arc;

    fn cube(n: usize) -> Arc<ProductSpace> {
        Arc::new(ProductSpace::iid(FiniteLaw::rademacher(), n).unwrap())
    }

    #[test]
    fn exact_cov_examples() {
        let par = TabulatedFunction::from_fn(cube(3), |x| x[0] * x[1] * x[2]).unwrap();
        let s = variance_spectrum(&par).unwrap();
        assert!((exact_noise_cov(&s, NoiseParams::new(0.5).unwrap()) - 0.125).abs() < 1e-15);
        let maj = TabulatedFunction::from_fn(cube(3), |x| (x[0] + x[1] + x[2]).signum()).unwrap();
        let s = variance_spectrum(&maj).unwrap();
        let half = NoiseParams::new(0.5).unwrap();
        assert!((exact_noise_cov(&s, half) - 0.40625).abs() < 1e-14);
        assert!((bruteforce_noise_cov(&maj, half).unwrap() - 0.40625).abs() < 1e-14);
        assert!((exact_noise_cov(&s, NoiseParams::new(0.0).unwrap()) - 1.0).abs() < 1e-14);
        assert!(bruteforce_noise_cov(&maj, NoiseParams::new(1.0).unwrap()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn resample_extremes() {
        let sp = cube(8);
        let mut s = Stream::new(3, 0);
        let c = sp.sample_config(&mut s);
        assert_eq!(resample(&sp, &c, NoiseParams::new(0.0).unwrap(), &mut s), c);
        assert!(NoiseParams::new(1.1).is_err());
    }

    #[test]
    fn resample_agreement_rate() {
        let sp = cube(8);
        let mut s = Stream::new(9, 1);
        let params = NoiseParams::new(0.3).unwrap();
        let draws = 100_000;
        let mut agree = [0usize; 8];
        for _ in 0..draws {
            let c = sp.sample_config(&mut s);
            let d = resample(&sp, &c, params, &mut s);
            for k in 0..8 {
                agree[k] += (c.indices[k] == d.indices[k]) as usize;
            }
        }
        let p = 0.85;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for a in agree {
            assert!((a as f64 / draws as f64 - p).abs() < 3.0 * se);
        }
    }

    #[test]
    fn mc_constant_and_parity() {
        let sp = cube(8);
        let params = NoiseParams::new(0.3).unwrap();
        let c = mc_noise_cov(|_| 2.0, &sp, params, 1000, 1).unwrap();
        assert_eq!((c.estimate, c.stderr), (0.0, 0.0));
        let parity = |c: &Config| c.indices.iter().map(|&i| if i == 1 { 1.0 } else { -1.0 }).product::<f64>();
        let est = mc_noise_cov(parity, &sp, params, 100_000, 5).unwrap();
        let exact = 0.7f64.powi(8);
        assert!((est.estimate - exact).abs() < 3.0 * est.stderr, "{est:?}");
    }
}
