//! Monte Carlo over disorder replicates.

use rayon::prelude::*;
use serde::Serialize;

use super::field::{DisorderField, HashedDisorder};
use super::transfer::{Prepared, ZSpec};
use super::{PolymerParams, SpaceTimeFunction};
use crate::error::{Error, Result};
use crate::noise::{paired_cov, McEstimate};

/// A map applied to the vector of observables of one replicate.
pub type VectorMap = dyn Fn(&[f64]) -> f64 + Sync;

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
    }
    Ok(())
}

fn prepare_all(params: &PolymerParams, specs: &[ZSpec]) -> Result<Vec<Prepared>> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("at least one observable is required".into()));
    }
    specs.iter().map(|s| Prepared::new(params, params.box_radius(s.support_radius()), s)).collect()
}

/// Mean of `Z` over `samples` replicates, with its standard error.
pub fn mc_partition_mean(params: &PolymerParams, spec: &ZSpec, samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    let prep = Prepared::new(params, params.box_radius(spec.support_radius()), spec)?;
    let weights = params.weights();
    let zs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|r| prep.eval_hashed(&weights, &HashedDisorder::new(&params.disorder_law, seed, r)))
        .collect();
    let nf = samples as f64;
    let mean = zs.iter().sum::<f64>() / nf;
    let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(McEstimate { estimate: mean, stderr: (var / nf).sqrt(), samples })
}

/// Paired observables `(Z⃗(ω), Z⃗(ω^ε))` per replicate, in replicate order.
pub fn sample_pairs(params: &PolymerParams, specs: &[ZSpec], eps: f64, samples: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    check_samples(samples)?;
    crate::noise::NoiseParams::new(eps)?;
    let preps = prepare_all(params, specs)?;
    let weights = params.weights();
    Ok((0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let d = HashedDisorder::new(&params.disorder_law, seed, r);
            preps.iter().map(|p| p.eval_pair(&weights, &d, eps)).unzip()
        })
        .collect())
}

/// `Cov[φ(Z⃗(ω^ε)), ψ(Z⃗(ω))]`; without maps, the covariance of the single observable.
pub fn mc_polymer_noise_cov(
    params: &PolymerParams,
    specs: &[ZSpec],
    eps: f64,
    samples: usize,
    seed: u64,
    maps: Option<(&VectorMap, &VectorMap)>,
) -> Result<McEstimate> {
    if maps.is_none() && specs.len() != 1 {
        return Err(Error::InvalidParameter("vector observables need maps".into()));
    }
    let pairs = sample_pairs(params, specs, eps, samples, seed)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = match maps {
        Some((phi, psi)) => pairs.iter().map(|(z, zn)| (phi(zn), psi(z))).unzip(),
        None => pairs.iter().map(|(z, zn)| (zn[0], z[0])).unzip(),
    };
    Ok(paired_cov(&xs, &ys))
}

/// `Z` with `ω(n, z)` forced to each atom in turn, everything else from `(seed, replicate)`.
pub fn site_perturbation_values(
    params: &PolymerParams,
    spec: &ZSpec,
    seed: u64,
    replicate: u64,
    layer: usize,
    z: (i64, i64),
) -> Result<Vec<f64>> {
    let prep = Prepared::new(params, params.box_radius(spec.support_radius()), spec)?;
    let k = site_step(&prep, layer)?;
    Ok(perturbed(&prep, params, &HashedDisorder::new(&params.disorder_law, seed, replicate), k, z))
}

/// Monte Carlo estimate of `Inf¹_{(n,z)} = E|Z − E_{(n,z)} Z|`. Each replicate
/// averages exactly over the atom at `(n, z)`.
pub fn mc_site_influence(params: &PolymerParams, spec: &ZSpec, layer: usize, z: (i64, i64), samples: usize, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    let prep = Prepared::new(params, params.box_radius(spec.support_radius()), spec)?;
    let k = site_step(&prep, layer)?;
    let probs = params.disorder_law.probs();
    let draws: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|r| {
            let zs = perturbed(&prep, params, &HashedDisorder::new(&params.disorder_law, seed, r), k, z);
            let mean: f64 = zs.iter().zip(probs).map(|(v, p)| v * p).sum();
            zs.iter().zip(probs).map(|(v, p)| p * (v - mean).abs()).sum()
        })
        .collect();
    let nf = samples as f64;
    let mean = draws.iter().sum::<f64>() / nf;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(McEstimate { estimate: mean, stderr: (var / nf).sqrt(), samples })
}

fn site_step(prep: &Prepared, layer: usize) -> Result<usize> {
    let plan = &prep.plan;
    layer.checked_sub(plan.first).filter(|&k| k >= 1 && k <= plan.steps()).ok_or_else(|| Error::OutOfRange {
        what: "layer",
        detail: format!("{layer} outside {}..={}", plan.first + 1, plan.first + plan.steps()),
    })
}

fn perturbed(prep: &Prepared, params: &PolymerParams, d: &HashedDisorder, k: usize, z: (i64, i64)) -> Vec<f64> {
    let weights = params.weights();
    let plan = &prep.plan;
    let mut e = prep.engine();
    let mut atoms = Vec::new();
    for j in 1..k {
        d.fill(plan.first + j, plan.windows[j], &mut atoms);
        e.step(plan.windows[j], Some((&atoms, &weights)));
    }
    let w = plan.windows[k] as i64;
    let inside = z.0.abs() <= w && z.1.abs() <= w;
    let site = ((z.1 + w) * (2 * w + 1) + z.0 + w) as usize;
    d.fill(plan.first + k, plan.windows[k], &mut atoms);
    (0..params.disorder_law.size())
        .map(|a| {
            let mut branch = e.clone();
            let mut layer_atoms = atoms.clone();
            if inside {
                layer_atoms[site] = a as u8;
            }
            branch.step(plan.windows[k], Some((&layer_atoms, &weights)));
            let mut buf = Vec::new();
            for j in k + 1..=plan.steps() {
                d.fill(plan.first + j, plan.windows[j], &mut buf);
                branch.step(plan.windows[j], Some((&buf, &weights)));
            }
            branch.finish(&prep.h, plan.n)
        })
        .collect()
}

/// Nonzero lattice samples `(layer, x, y, ρ(n/N, z/√N))` of a space-time test function.
fn rho_sites(n: usize, box_radius: usize, rho: &SpaceTimeFunction) -> Result<Vec<(usize, i64, i64, f64)>> {
    let sq = (n as f64).sqrt();
    let (t0, t1) = rho.time_support();
    if t0 < 0.0 || t1 > 1.0 {
        return Err(Error::OutOfRange { what: "rho time support", detail: format!("[{t0}, {t1}] not inside [0, 1]") });
    }
    let r = (rho.support_radius() * sq).floor() as usize;
    if r > box_radius {
        return Err(Error::SupportEscape { needed: rho.support_radius() * sq, box_radius });
    }
    let r = r as i64;
    let mut out = Vec::new();
    for layer in 1..=n {
        let s = layer as f64 / n as f64;
        if s < t0 || s > t1 {
            continue;
        }
        for y in -r..=r {
            for x in -r..=r {
                let v = rho.eval(s, x as f64 / sq, y as f64 / sq);
                if v != 0.0 {
                    out.push((layer, x, y, v));
                }
            }
        }
    }
    Ok(out)
}

/// `ξ_N(ρ) = (1/N) Σ_{(n,z)} ρ(n/N, z/√N) ω(n, z)`.
pub fn white_noise_functional(field: &DisorderField, rho: &SpaceTimeFunction) -> Result<f64> {
    let sites = rho_sites(field.n, field.box_radius, rho)?;
    let sum: f64 = sites.iter().map(|&(l, x, y, v)| v * field.value(l, x, y).unwrap()).sum();
    Ok(sum / field.n as f64)
}

/// [`white_noise_functional`] on the replicate `(seed, replicate)`, within the box of `box_radius`.
pub fn white_noise_functional_hashed(params: &PolymerParams, box_radius: usize, rho: &SpaceTimeFunction, seed: u64, replicate: u64) -> Result<f64> {
    let sites = rho_sites(params.n, box_radius, rho)?;
    let d = HashedDisorder::new(&params.disorder_law, seed, replicate);
    Ok(xi_from_sites(&sites, params, &d))
}

fn xi_from_sites(sites: &[(usize, i64, i64, f64)], params: &PolymerParams, d: &HashedDisorder) -> f64 {
    let atoms = params.disorder_law.atoms();
    sites.iter().map(|&(l, x, y, v)| v * atoms[d.atom(l, x, y) as usize]).sum::<f64>() / params.n as f64
}

/// `Var[ξ_N(ρ)] = (1/N²) Σ ρ(n/N, z/√N)²` for unit-variance disorder.
pub fn white_noise_variance(n: usize, rho: &SpaceTimeFunction) -> Result<f64> {
    let sites = rho_sites(n, usize::MAX / 4, rho)?;
    Ok(sites.iter().map(|s| s.3 * s.3).sum::<f64>() / (n * n) as f64)
}

/// A monomial in `ξ_N(ρ_0), …, ξ_N(ρ_{l−1})`, as a nondecreasing index list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Monomial(pub Vec<usize>);

impl Monomial {
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|i| format!("xi{i}")).collect::<Vec<_>>().join("*")
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.0.iter().map(|&i| xi[i]).product()
    }
}

/// All monomials of total degree `1..=d` in `l` variables.
pub fn monomials(l: usize, d: usize) -> Vec<Monomial> {
    fn rec(start: usize, l: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Monomial>) {
        if left == 0 {
            out.push(Monomial(cur.clone()));
            return;
        }
        for i in start..l {
            cur.push(i);
            rec(i, l, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 1..=d {
        rec(0, l, deg, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub psi: String,
    pub degree: usize,
    pub cov: f64,
    pub stderr: f64,
    pub within_3se: bool,
    /// Same for every row of a monomial: within 3 SE at the largest `N`, or
    /// smaller in magnitude there than at the smallest `N`.
    pub trend_ok: bool,
}

/// Estimates `Cov[φ(Z_N), ψ(ξ_N(ρ⃗))]` over an `N` grid for every monomial
/// `ψ` of degree at most `degree`. The default `φ` is `tanh(Z − E Z)`.
pub fn independence_diagnostic(
    grid: &[PolymerParams],
    spec: &ZSpec,
    rhos: &[SpaceTimeFunction],
    degree: usize,
    phi: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    samples: usize,
    seed: u64,
) -> Result<Vec<IndependenceRow>> {
    check_samples(samples)?;
    if !(1..=3).contains(&degree) {
        return Err(Error::OutOfRange { what: "degree", detail: format!("{degree} not in 1..=3") });
    }
    if rhos.is_empty() || grid.is_empty() {
        return Err(Error::InvalidParameter("need at least one rho and one N".into()));
    }
    let monos = monomials(rhos.len(), degree);
    let mut rows = Vec::new();
    for params in grid {
        let box_radius = params.box_radius(spec.support_radius());
        let prep = Prepared::new(params, box_radius, spec)?;
        let sites = rhos.iter().map(|r| rho_sites(params.n, box_radius, r)).collect::<Result<Vec<_>>>()?;
        let mean_z = prep.eval(None, |_, _, _| {});
        let weights = params.weights();
        let draws: Vec<(f64, Vec<f64>)> = (0..samples as u64)
            .into_par_iter()
            .map(|r| {
                let d = HashedDisorder::new(&params.disorder_law, seed, r);
                let z = if params.beta_n == 0.0 { prep.eval(None, |_, _, _| {}) } else { prep.eval_hashed(&weights, &d) };
                let xi = sites.iter().map(|s| xi_from_sites(s, params, &d)).collect();
                let f = match phi {
                    Some(p) => p(z),
                    None => (z - mean_z).tanh(),
                };
                (f, xi)
            })
            .collect();
        let fs: Vec<f64> = draws.iter().map(|d| d.0).collect();
        for m in &monos {
            let ps: Vec<f64> = draws.iter().map(|d| m.eval(&d.1)).collect();
            let est = paired_cov(&fs, &ps);
            rows.push(IndependenceRow {
                n: params.n,
                psi: m.label(),
                degree: m.degree(),
                cov: est.estimate,
                stderr: est.stderr,
                within_3se: est.estimate.abs() <= 3.0 * est.stderr,
                trend_ok: false,
            });
        }
    }
    let per_n = monos.len();
    let last = grid.len() - 1;
    for j in 0..per_n {
        let first = &rows[j];
        let end = &rows[last * per_n + j];
        let ok = end.within_3se || end.cov.abs() < first.cov.abs();
        for i in 0..grid.len() {
            rows[i * per_n + j].trend_ok = ok;
        }
    }
    Ok(rows)
}

/// One row of a polymer sweep.
#[derive(Clone, Debug, Serialize)]
pub struct NoiseCovRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "beta_N")]
    pub beta_n: f64,
    #[serde(rename = "sigma_N")]
    pub sigma_n: f64,
    #[serde(rename = "R_N")]
    pub r_n: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_times_logN")]
    pub w_times_log_n: f64,
    pub cov_mc: f64,
    pub stderr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymer::TestFunction2D;
    use crate::prob::FiniteLaw;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(2, 2).len(), 5);
        assert_eq!(monomials(3, 3).len(), 3 + 6 + 10);
        assert_eq!(monomials(2, 2)[2].label(), "xi0*xi0");
    }

    #[test]
    fn xi_of_zero_and_variance() {
        let p = PolymerParams::new(16, -1.0, FiniteLaw::rademacher(), 1e-6).unwrap();
        let f = DisorderField::from_seed(&p.disorder_law, 16, 10, 1, 0);
        assert_eq!(white_noise_functional(&f, &SpaceTimeFunction::zero()).unwrap(), 0.0);
        let rho = SpaceTimeFunction::bump(0.0, 1.0, 1.0);
        let direct = white_noise_functional(&f, &rho).unwrap();
        assert_eq!(direct, white_noise_functional_hashed(&p, 10, &rho, 1, 0).unwrap());
        assert!(white_noise_variance(16, &rho).unwrap() > 0.0);
        let wide = SpaceTimeFunction::bump(0.0, 1.0, 5.0);
        assert!(matches!(white_noise_functional(&f, &wide), Err(Error::SupportEscape { .. })));
    }

    #[test]
    fn perturbation_values_are_affine_in_weight() {
        let law = crate::polymer::three_point_law();
        let p = PolymerParams::new(16, -1.0, law, 1e-8).unwrap();
        let spec = ZSpec::new(TestFunction2D::bump(0.75), TestFunction2D::bump(0.75));
        let zs = site_perturbation_values(&p, &spec, 3, 1, 8, (1, 0)).unwrap();
        let w = p.weights();
        let slope = (zs[1] - zs[0]) / (w[1] - w[0]);
        let pred = zs[0] + slope * (w[2] - w[0]);
        assert!((pred - zs[2]).abs() < 1e-12 * zs[2].abs());
        assert!(zs[0] != zs[2]);
    }

    #[test]
    fn free_polymer_is_uncorrelated() {
        let p = PolymerParams::rademacher(16, -1.0).unwrap().free();
        let spec = ZSpec::new(TestFunction2D::bump(0.75), TestFunction2D::bump(0.75));
        let rows = independence_diagnostic(&[p], &spec, &[SpaceTimeFunction::bump(0.0, 1.0, 0.75)], 1, Some(&|z| z), 64, 0).unwrap();
        assert_eq!(rows[0].cov, 0.0);
    }
}
