//! A sequence with vanishing influences that is not noise sensitive.
//!
//! Each coordinate is uniform on `N` atoms and `Y_i` indicates the top atom;
//! `f_N = Σ_i Y_i` has chaos components of degree 0 and 1 only, so its noise
//! covariance never decays, while `W[f_N] ≤ 4/N`. The constants `M_q` of the
//! coordinates grow like `N^{1/2 − 1/q}`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::influence::influence_profile;
use crate::noise::{bruteforce_noise_cov, NoiseParams};
use crate::prob::{FiniteLaw, ProductSpace, TabulatedFunction};

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub var: f64,
    pub cov: f64,
    pub cov_over_var: f64,
    pub inf1: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_times_N")]
    pub w_times_n: f64,
    pub q: f64,
    pub mq_lower: f64,
    pub n_power: f64,
}

/// `Y = 1{ω = top atom}` on one coordinate uniform on `N` atoms.
pub fn top_indicator(n: usize) -> Result<TabulatedFunction> {
    if n < 2 {
        return Err(Error::OutOfRange { what: "N", detail: format!("{n} < 2") });
    }
    let space = Arc::new(ProductSpace::new(vec![FiniteLaw::uniform_range(n)?])?);
    let top = (n - 1) as f64;
    TabulatedFunction::from_fn(space, move |x| (x[0] == top) as u8 as f64)
}

/// The row for `f_N`. Per-coordinate quantities are computed exactly on one
/// coordinate and summed over the `N` identical, independent coordinates.
pub fn counterexample_row(n: usize, eps: f64, q: f64) -> Result<CounterexampleRow> {
    let params = NoiseParams::new(eps)?;
    if q <= 2.0 {
        return Err(Error::OutOfRange { what: "q", detail: format!("{q} <= 2") });
    }
    let y = top_indicator(n)?;
    let nf = n as f64;
    let var = nf * y.variance();
    let cov = nf * bruteforce_noise_cov(&y, params)?;
    let inf1 = influence_profile(&y)?.inf1[0];
    let w = nf * inf1 * inf1;
    let centred = y.map(|v| v - 1.0 / nf)?;
    let mq_lower = centred.norm_q(q) / centred.norm2();
    Ok(CounterexampleRow {
        n,
        epsilon: eps,
        var,
        cov,
        cov_over_var: cov / var,
        inf1,
        w,
        w_times_n: w * nf,
        q,
        mq_lower,
        n_power: nf.powf(0.5 - 1.0 / q),
    })
}

pub fn counterexample_demo(grid: &[usize], eps: f64, q: f64) -> Result<Vec<CounterexampleRow>> {
    grid.iter().map(|&n| counterexample_row(n, eps, q)).collect()
}

/// `f_N` on the full product of `N` coordinates, for small `N`.
pub fn full_function(n: usize) -> Result<TabulatedFunction> {
    let law = FiniteLaw::uniform_range(n)?;
    let space = Arc::new(ProductSpace::iid(law, n)?);
    let top = (n - 1) as f64;
    TabulatedFunction::from_fn(space, move |x| x.iter().filter(|&&v| v == top).count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::variance_spectrum;

    #[test]
    fn closed_forms() {
        let r = counterexample_row(100, 0.5, 4.0).unwrap();
        assert!((r.cov_over_var - 0.5).abs() < 1e-12);
        assert!((r.var - 0.99).abs() < 1e-12);
        assert!((r.inf1 - 0.02 * 0.99).abs() < 1e-15);
        assert!(r.w <= 0.04);
        let r0 = counterexample_row(100, 0.0, 4.0).unwrap();
        assert!((r0.cov - r0.var).abs() < 1e-12);
    }

    #[test]
    fn full_product_has_degree_one_only() {
        let f = full_function(5).unwrap();
        let s = variance_spectrum(&f).unwrap();
        assert!((s.norms_sq[1] - 5.0 * 0.2 * 0.8).abs() < 1e-12);
        assert!(s.norms_sq[2..].iter().all(|e| e.abs() < 1e-12));
        let cov = bruteforce_noise_cov(&f, NoiseParams::new(0.3).unwrap()).unwrap();
        assert!((cov - 0.7 * f.variance()).abs() < 1e-12);
    }

    #[test]
    fn mq_lower_bound_tracks_power() {
        let q = 4.0;
        let ratios: Vec<f64> = [100, 1000, 10000].iter().map(|&n| {
            let r = counterexample_row(n, 0.5, q).unwrap();
            r.mq_lower / r.n_power
        }).collect();
        for r in &ratios {
            assert!((r - 1.0).abs() < 0.05, "{ratios:?}");
        }
    }
}
