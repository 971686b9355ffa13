//! The 2D directed polymer in the critical window.
//!
//! Partition functions are evaluated layer by layer with the one-step walk
//! kernel. Disorder `ω(n, z)` is addressed by `(seed, replicate, layer, site)`,
//! so a replicate can be evaluated lazily on any window or materialized as a
//! [`DisorderField`] with identical values.

mod field;
mod kernel;
mod mc;
mod transfer;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::FiniteLaw;

pub use field::{AtomSampler, DisorderField, HashedDisorder, FIELD_MAGIC, FIELD_VERSION};
pub use kernel::{overlap_r, return_probabilities, srw_kernel, Grid, HeatKernelTable};
pub use mc::{
    independence_diagnostic, mc_partition_mean, mc_polymer_noise_cov, mc_site_influence, monomials, site_perturbation_values,
    sample_pairs, white_noise_functional, white_noise_functional_hashed, white_noise_variance, IndependenceRow, Monomial,
    NoiseCovRow, VectorMap,
};
pub use transfer::{
    kernel_formula_value, partition_function, partition_value_hashed, polymer_influence, polymer_w,
    LatticeFunction, PartitionResult, PolymerInfluence, ZSpec,
};

/// Log-moment generating function `λ(β) = ln E e^{βω}`.
pub fn lambda(law: &FiniteLaw, beta: f64) -> f64 {
    let m = law.atoms().iter().map(|&a| beta * a).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = law.atoms().iter().zip(law.probs()).map(|(&a, &p)| p * (beta * a - m).exp()).sum();
    m + s.ln()
}

/// `λ(2β) − 2λ(β)`, so that `e^{value} − 1 = Var[e^{βω−λ(β)}]`.
pub fn log_second_moment(law: &FiniteLaw, beta: f64) -> f64 {
    lambda(law, 2.0 * beta) - 2.0 * lambda(law, beta)
}

/// Solves `e^{λ(2β)−2λ(β)} − 1 = σ²` for `β ≥ 0` by bisection.
pub fn solve_beta(law: &FiniteLaw, sigma2: f64) -> Result<f64> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::NonFinite { what: "sigma^2", value: sigma2 });
    }
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    let p_max = law.probs().iter().copied().fold(0.0, f64::max);
    let sup = 1.0 / p_max - 1.0;
    let target = sigma2.ln_1p();
    if sigma2 >= sup {
        return Err(Error::NoRoot { target: sigma2, sup });
    }
    let f = |b: f64| log_second_moment(law, b) - target;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoRoot { target: sigma2, sup });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Symmetric three-point law `{−√2, 0, √2}` with probabilities `{¼, ½, ¼}`.
pub fn three_point_law() -> FiniteLaw {
    let a = std::f64::consts::SQRT_2;
    FiniteLaw::new(vec![-a, 0.0, a], vec![0.25, 0.5, 0.25]).expect("valid law")
}

#[derive(Clone, Debug, Serialize)]
pub struct PolymerParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta: f64,
    pub disorder_law: FiniteLaw,
    pub r_n: f64,
    pub sigma_n: f64,
    pub beta_n: f64,
    /// `λ(β_N)`.
    pub lambda: f64,
    pub trunc_tol: f64,
}

pub const DEFAULT_TRUNC_TOL: f64 = 1e-10;

impl PolymerParams {
    /// Critical window `σ_N² = (1 + ϑ / ln N) / R_N`.
    pub fn new(n: usize, theta: f64, disorder_law: FiniteLaw, trunc_tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange { what: "N", detail: format!("{n} < 2") });
        }
        if !(trunc_tol > 0.0 && trunc_tol < 1.0) {
            return Err(Error::OutOfRange { what: "trunc_tol", detail: format!("{trunc_tol} not in (0, 1)") });
        }
        if disorder_law.mean().abs() > 1e-12 || (disorder_law.variance() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("disorder law must have zero mean and unit variance".into()));
        }
        if disorder_law.size() > u8::MAX as usize + 1 {
            return Err(Error::InvalidParameter("disorder law has more than 256 atoms".into()));
        }
        let r_n = overlap_r(n);
        let sigma2 = (1.0 + theta / (n as f64).ln()) / r_n;
        if sigma2 <= 0.0 {
            return Err(Error::OutOfRange { what: "theta", detail: format!("sigma_N^2 = {sigma2} <= 0") });
        }
        let beta_n = solve_beta(&disorder_law, sigma2)?;
        let lambda = lambda(&disorder_law, beta_n);
        Ok(Self { n, theta, disorder_law, r_n, sigma_n: sigma2.sqrt(), beta_n, lambda, trunc_tol })
    }

    pub fn rademacher(n: usize, theta: f64) -> Result<Self> {
        Self::new(n, theta, FiniteLaw::rademacher(), DEFAULT_TRUNC_TOL)
    }

    /// Same system at `β = 0`.
    pub fn free(&self) -> Self {
        Self { sigma_n: 0.0, beta_n: 0.0, lambda: 0.0, ..self.clone() }
    }

    pub fn with_trunc_tol(&self, trunc_tol: f64) -> Self {
        Self { trunc_tol, ..self.clone() }
    }

    /// `support_radius·√N + √2·√(N ln(1/trunc_tol))`, rounded up.
    pub fn box_radius(&self, support_radius: f64) -> usize {
        let nf = self.n as f64;
        (support_radius * nf.sqrt() + std::f64::consts::SQRT_2 * (nf * (1.0 / self.trunc_tol).ln()).sqrt()).ceil() as usize
    }

    /// `e^{βx_a − λ(β)}` per atom.
    pub fn weights(&self) -> Vec<f64> {
        self.disorder_law.atoms().iter().map(|&a| (self.beta_n * a - self.lambda).exp()).collect()
    }

    /// `E|ζ|` for `ζ = e^{βω−λ(β)} − 1`.
    pub fn zeta_abs_mean(&self) -> f64 {
        self.weights().iter().zip(self.disorder_law.probs()).map(|(w, p)| p * (w - 1.0).abs()).sum()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = crate::rng::counter_hash(self.n as u64, self.theta.to_bits(), self.trunc_tol.to_bits(), 0);
        for (a, p) in self.disorder_law.atoms().iter().zip(self.disorder_law.probs()) {
            h = crate::rng::counter_hash(h, a.to_bits(), p.to_bits(), 1);
        }
        h
    }
}

type Eval2 = dyn Fn(f64, f64) -> f64 + Send + Sync;
type Eval3 = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// A compactly supported function on `ℝ²`; zero outside `|x| ≤ support_radius`.
#[derive(Clone)]
pub struct TestFunction2D {
    name: String,
    support_radius: f64,
    f: Arc<Eval2>,
}

impl fmt::Debug for TestFunction2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction2D({}, r={})", self.name, self.support_radius)
    }
}

fn mollifier(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

fn smooth_step(t: f64) -> f64 {
    // C^∞ transition from 0 at t ≤ 0 to 1 at t ≥ 1
    let a = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (l, r) = (a(t), a(1.0 - t));
    l / (l + r)
}

impl TestFunction2D {
    pub fn custom(name: &str, support_radius: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), support_radius, f: Arc::new(f) }
    }

    /// `exp(1 − 1/(1 − |x|²/r²))`, equal to 1 at the origin.
    pub fn bump(radius: f64) -> Self {
        Self::custom("bump", radius, move |x, y| mollifier((x * x + y * y) / (radius * radius)))
    }

    /// Gaussian of scale `s` times a mollifier of radius `r`.
    pub fn gaussian_bump(scale: f64, radius: f64) -> Self {
        Self::custom("gaussian_bump", radius, move |x, y| {
            let r2 = x * x + y * y;
            (-r2 / (2.0 * scale * scale)).exp() * mollifier(r2 / (radius * radius)).powf(0.25)
        })
    }

    /// Indicator of `[-side/2, side/2]²` with smooth edges of width `ramp`.
    pub fn smoothed_square(side: f64, ramp: f64) -> Self {
        let half = 0.5 * side;
        let radius = std::f64::consts::SQRT_2 * (half + ramp);
        Self::custom("smoothed_square", radius, move |x, y| {
            let edge = |u: f64| smooth_step((half + ramp - u.abs()) / ramp);
            edge(x) * edge(y)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if x * x + y * y > self.support_radius * self.support_radius {
            0.0
        } else {
            (self.f)(x, y)
        }
    }
}

/// A compactly supported function on `[0, ∞) × ℝ²`, zero outside
/// `[t0, t1] × {|x| ≤ support_radius}`.
#[derive(Clone)]
pub struct SpaceTimeFunction {
    name: String,
    t0: f64,
    t1: f64,
    support_radius: f64,
    f: Arc<Eval3>,
}

impl fmt::Debug for SpaceTimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpaceTimeFunction({}, [{}, {}], r={})", self.name, self.t0, self.t1, self.support_radius)
    }
}

impl SpaceTimeFunction {
    pub fn custom(
        name: &str,
        t0: f64,
        t1: f64,
        support_radius: f64,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.to_string(), t0, t1, support_radius, f: Arc::new(f) }
    }

    /// `sin²(π(s − t0)/(t1 − t0))` on `[t0, t1]` times a spatial bump.
    pub fn bump(t0: f64, t1: f64, radius: f64) -> Self {
        Self::custom("bump", t0, t1, radius, move |s, x, y| {
            let phase = std::f64::consts::PI * (s - t0) / (t1 - t0);
            phase.sin().powi(2) * mollifier((x * x + y * y) / (radius * radius))
        })
    }

    pub fn zero() -> Self {
        Self::custom("zero", 0.0, 1.0, 0.0, |_, _, _| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn time_support(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn eval(&self, s: f64, x: f64, y: f64) -> f64 {
        if s < self.t0 || s > self.t1 || x * x + y * y > self.support_radius * self.support_radius {
            0.0
        } else {
            (self.f)(s, x, y)
        }
    }
}
