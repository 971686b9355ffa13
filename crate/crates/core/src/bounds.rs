//! Hypercontractivity constants and covariance-bound checks.
//!
//! `η_q` is the largest `η` with `‖a + η b X‖_q ≤ ‖a + b X‖_2` for every
//! centred `X` of one coordinate. By homogeneity it is enough to take
//! `‖X‖_2 = 1`, `a = cos θ`, `b = sin θ`. For fixed `(X, θ)` the map
//! `s ↦ ‖1 + sX‖_q` is convex with its minimum at `s = 0`, so the critical
//! `s` solving `‖1 + sX‖_q = √(1 + tan²θ)` is unique and `η(X, θ) = s / tan θ`.
//! Then `η_q` is the infimum of `η(X, θ)`. The limit `θ → 0` gives `1/√(q−1)`
//! and `θ = π/2` gives `1/‖X‖_q`.

use serde::Serialize;

use crate::chaos::{orthonormal_basis, variance_spectrum, VarianceSpectrum};
use crate::error::{Error, Result};
use crate::influence::influence_profile;
use crate::noise::{exact_noise_cov, NoiseParams};
use crate::prob::{FiniteLaw, ProductSpace, TabulatedFunction};
use crate::rng::Stream;

/// Slack allowed by [`BoundReport::holds`].
pub const HOLDS_TOL: f64 = 1e-12;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Rows of the centred orthonormal basis evaluated at the atoms.
fn centred_basis(law: &FiniteLaw) -> Vec<Vec<f64>> {
    orthonormal_basis(law)
        .into_iter()
        .skip(1)
        .filter(|row| row.iter().any(|&v| v != 0.0))
        .collect()
}

fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let d = angles.len() + 1;
    let mut x = vec![1.0; d];
    let mut sin_prod = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        x[i] = sin_prod * a.cos();
        sin_prod *= a.sin();
    }
    x[d - 1] = sin_prod;
    x
}

fn angles_of(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut angles = Vec::with_capacity(d - 1);
    for i in 0..d - 1 {
        let tail: f64 = x[i..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut a = if tail > 0.0 { (x[i] / tail).clamp(-1.0, 1.0).acos() } else { 0.0 };
        if i == d - 2 && x[d - 1] < 0.0 {
            a = 2.0 * std::f64::consts::PI - a;
        }
        angles.push(a);
    }
    angles
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let s = basis[0].len();
    (0..s).map(|a| basis.iter().zip(coeffs).map(|(row, c)| c * row[a]).sum()).collect()
}

fn norm_q(x: &[f64], p: &[f64], q: f64) -> f64 {
    x.iter().zip(p).map(|(v, w)| w * v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Starting directions on the unit sphere of a `d`-dimensional space.
fn direction_grid(d: usize, count: usize, half_circle: bool) -> Vec<Vec<f64>> {
    match d {
        1 => {
            if half_circle {
                vec![vec![1.0]]
            } else {
                vec![vec![1.0], vec![-1.0]]
            }
        }
        2 => {
            let span = if half_circle { std::f64::consts::PI } else { 2.0 * std::f64::consts::PI };
            (0..count)
                .map(|i| {
                    let a = span * i as f64 / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        _ => {
            let mut s = Stream::new(0x6d71, d as u64);
            (0..count)
                .map(|_| {
                    // Box–Muller normals, normalised.
                    let mut v: Vec<f64> = (0..d)
                        .map(|_| {
                            let u1 = 1.0 - s.uniform();
                            let u2 = s.uniform();
                            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                        })
                        .collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= n);
                    v
                })
                .collect()
        }
    }
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Cyclic coordinate-wise golden-section descent with a shrinking window.
/// `clamp` maps each parameter into its admissible range.
fn refine(obj: &dyn Fn(&[f64]) -> f64, start: Vec<f64>, h0: f64, clamp: &dyn Fn(usize, f64) -> f64) -> (f64, Vec<f64>) {
    let mut x = start;
    let mut best = obj(&x);
    let mut h = h0;
    while h > 1e-11 {
        for i in 0..x.len() {
            let line = |v: f64| {
                let mut y = x.clone();
                y[i] = clamp(i, v);
                obj(&y)
            };
            let (v, fv) = golden_min(&line, x[i] - h, x[i] + h, 40);
            if fv < best {
                best = fv;
                x[i] = clamp(i, v);
            }
        }
        h *= 0.5;
    }
    (best, x)
}

/// `M_q`: the largest `‖g‖_q / ‖g‖_2` over centred `g ∈ L²(μ)`.
pub fn compute_mq(law: &FiniteLaw, q: f64) -> Result<f64> {
    check_q(q)?;
    let basis = centred_basis(law);
    if basis.is_empty() {
        return Err(Error::DegenerateLaw);
    }
    let p = law.probs();
    let d = basis.len();
    if d == 1 {
        return Ok(norm_q(&basis[0], p, q));
    }
    let value = |x: &[f64]| norm_q(&combine(&basis, x), p, q);
    let grid = direction_grid(d, 2000, true);
    let mut scored: Vec<(f64, Vec<f64>)> = grid.into_iter().map(|x| (value(&x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let neg = |a: &[f64]| -value(&sphere_point(a));
    let mut best = scored[0].0;
    for (_, x) in scored.into_iter().take(6) {
        let (v, _) = refine(&neg, angles_of(&x), 0.01, &|_, v| v);
        best = best.max(-v);
    }
    Ok(best)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 2.0 && q.is_finite()) {
        return Err(Error::OutOfRange { what: "q", detail: format!("{q} must be a finite exponent > 2") });
    }
    Ok(())
}

/// `(1/q) ln E|1 + sX|^q`, accurate for small `s`.
fn log_norm_q(s: f64, x: &[f64], p: &[f64], q: f64) -> f64 {
    let m: f64 = x
        .iter()
        .zip(p)
        .map(|(&v, &w)| {
            let u = s * v;
            let term = if u > -1.0 { (q * u.ln_1p()).exp_m1() } else { (1.0 + u).abs().powf(q) - 1.0 };
            w * term
        })
        .sum();
    m.ln_1p() / q
}

/// `η(X, θ)` for unit centred `X` and `θ ∈ (0, π/2)`.
fn eta_at(theta: f64, x: &[f64], p: &[f64], q: f64) -> f64 {
    let t = theta.tan();
    let target = 0.5 * (t * t).ln_1p();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if log_norm_q(mid * t, x, p, q) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HyperProfile {
    pub q: f64,
    pub m_q: f64,
    pub eta_q: f64,
    /// `(1/(2 M_q √(q−1)), 1/√(q−1))`.
    pub eta_bracket: (f64, f64),
}

impl HyperProfile {
    /// Profile for laws with optimal hypercontractivity, such as the symmetric binary law.
    pub fn optimal(q: f64) -> Result<Self> {
        check_q(q)?;
        let upper = 1.0 / (q - 1.0).sqrt();
        Ok(Self { q, m_q: 1.0, eta_q: upper, eta_bracket: (0.5 * upper, upper) })
    }

    pub fn epsilon_bar(&self) -> f64 {
        1.0 - self.eta_q * self.eta_q
    }
}

const THETA_MIN: f64 = 1e-3;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Numerical `η_q` for a single law, bracketed by `M_q`.
pub fn eta_q_estimate(law: &FiniteLaw, q: f64) -> Result<HyperProfile> {
    check_q(q)?;
    let m_q = compute_mq(law, q)?;
    let basis = centred_basis(law);
    let p = law.probs();
    let d = basis.len();
    let upper = 1.0 / (q - 1.0).sqrt();
    let lower = 1.0 / (2.0 * m_q * (q - 1.0).sqrt());

    let value = |params: &[f64]| {
        let theta = params[0];
        let x = combine(&basis, &sphere_point(&params[1..]));
        if theta >= HALF_PI {
            1.0 / norm_q(&x, p, q)
        } else {
            eta_at(theta, &x, p, q)
        }
    };
    let thetas: Vec<f64> = (1..=24).map(|i| THETA_MIN + (HALF_PI - THETA_MIN) * i as f64 / 24.0).collect();
    let dirs = direction_grid(d, if d == 2 { 360 } else { 1000 }, false);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    for x in &dirs {
        let angles = if d == 1 { vec![] } else { angles_of(x) };
        for &th in &thetas {
            let mut params = vec![th];
            params.extend_from_slice(&angles);
            let v = if d == 1 {
                let xs: Vec<f64> = basis[0].iter().map(|b| b * x[0]).collect();
                if th >= HALF_PI {
                    1.0 / norm_q(&xs, p, q)
                } else {
                    eta_at(th, &xs, p, q)
                }
            } else {
                value(&params)
            };
            scored.push((v, if d == 1 { vec![th, x[0]] } else { params }));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0.min(upper).min(1.0 / m_q);
    for (_, start) in scored.into_iter().take(6) {
        let clamp = |i: usize, v: f64| if i == 0 { v.clamp(THETA_MIN, HALF_PI) } else { v };
        let v = if d == 1 {
            let sign = start[1];
            let xs: Vec<f64> = basis[0].iter().map(|b| b * sign).collect();
            let f1 = |ps: &[f64]| {
                if ps[0] >= HALF_PI {
                    1.0 / norm_q(&xs, p, q)
                } else {
                    eta_at(ps[0], &xs, p, q)
                }
            };
            refine(&f1, vec![start[0]], 0.1, &clamp).0
        } else {
            refine(&value, start, 0.1, &clamp).0
        };
        best = best.min(v);
    }
    Ok(HyperProfile { q, m_q, eta_q: best, eta_bracket: (lower, upper) })
}

/// Profile valid for every coordinate of `space`: smallest `η_q`, largest `M_q`.
pub fn space_profile(space: &ProductSpace, q: f64) -> Result<HyperProfile> {
    let mut seen: Vec<&FiniteLaw> = Vec::new();
    let mut out: Option<HyperProfile> = None;
    for law in space.laws() {
        if seen.contains(&law) || law.size() == 1 {
            continue;
        }
        seen.push(law);
        let symmetric_binary = law.is_binary() && law.probs()[0] == 0.5;
        let h = if symmetric_binary { HyperProfile::optimal(q)? } else { eta_q_estimate(law, q)? };
        out = Some(match out {
            None => h,
            Some(o) => {
                let m_q = o.m_q.max(h.m_q);
                HyperProfile {
                    q,
                    m_q,
                    eta_q: o.eta_q.min(h.eta_q),
                    eta_bracket: (1.0 / (2.0 * m_q * (q - 1.0).sqrt()), o.eta_bracket.1),
                }
            }
        });
    }
    out.ok_or(Error::DegenerateLaw)
}

/// `γ_{ε,q}`; with `uniform`, `η_q` is replaced by the lower end of its bracket.
pub fn gamma_exponent(eps: f64, q: f64, eta_q: f64, uniform: bool, m_q: Option<f64>) -> Result<f64> {
    check_q(q)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { what: "epsilon", detail: format!("{eps} not in (0, 1)") });
    }
    let eta = if uniform {
        let m = m_q.ok_or_else(|| Error::InvalidParameter("uniform exponent needs M_q".into()))?;
        1.0 / (2.0 * m * (q - 1.0).sqrt())
    } else {
        eta_q
    };
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::OutOfRange { what: "eta_q", detail: format!("{eta} not in (0, 1)") });
    }
    let e = eps.min(0.5 * (1.0 - eta * eta));
    Ok((1.0 - 2.0 / q) * (-(-e).ln_1p()) / (-2.0 * eta.ln()))
}

/// `α_q = (1 − 2/q) / ln η_q^{-2}`.
pub fn alpha_q(q: f64, eta_q: f64) -> f64 {
    (1.0 - 2.0 / q) / (-2.0 * eta_q.ln())
}

/// A curve `q ↦ η_q`.
pub enum EtaCurve {
    /// `1/√(q − 1)`.
    Optimal,
    /// `(q − 1)^{−1/(2K)}`.
    KPower(f64),
    Custom(Box<dyn Fn(f64) -> f64 + Sync>),
}

impl EtaCurve {
    pub fn eta(&self, q: f64) -> f64 {
        match self {
            EtaCurve::Optimal => 1.0 / (q - 1.0).sqrt(),
            EtaCurve::KPower(k) => (q - 1.0).powf(-0.5 / k),
            EtaCurve::Custom(f) => f(q),
        }
    }
}

/// `q(ε) = sup{q ∈ (2, q̄] : η_q² ≥ 1 − ε}`.
pub fn q_of_epsilon(eps: f64, q_bar: f64, curve: &EtaCurve) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange { what: "epsilon", detail: format!("{eps} not in (0, 1)") });
    }
    if !(q_bar > 2.0) {
        return Err(Error::OutOfRange { what: "q_bar", detail: format!("{q_bar} must exceed 2") });
    }
    let closed = match curve {
        EtaCurve::Optimal => Some(1.0 + 1.0 / (1.0 - eps)),
        EtaCurve::KPower(k) => Some(1.0 + (1.0 - eps).powf(-k)),
        EtaCurve::Custom(_) => None,
    };
    if let Some(q) = closed {
        return Ok(q.min(q_bar));
    }
    if !q_bar.is_finite() {
        return Err(Error::OutOfRange { what: "q_bar", detail: "custom curves need a finite q_bar".into() });
    }
    let grid: Vec<f64> = (1..=256).map(|i| 2.0 + (q_bar - 2.0) * i as f64 / 256.0).collect();
    for w in grid.windows(2) {
        if curve.eta(w[1]) > curve.eta(w[0]) * (1.0 + 1e-12) {
            return Err(Error::NonMonotoneCurve { q_bar, at: w[1] });
        }
    }
    let ok = |q: f64| {
        let e = curve.eta(q);
        e * e >= 1.0 - eps
    };
    if !ok(grid[0]) {
        return Err(Error::NoAdmissibleQ);
    }
    if ok(q_bar) {
        return Ok(q_bar);
    }
    let (mut lo, mut hi) = (grid[0], q_bar);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Exponent `1 − 2/q(ε)`, in closed form for the analytic curves.
pub fn refined_exponent(eps: f64, q_bar: f64, curve: &EtaCurve) -> Result<f64> {
    let q = q_of_epsilon(eps, q_bar, curve)?;
    let capped = q >= q_bar;
    Ok(match curve {
        EtaCurve::Optimal if !capped => eps / (2.0 - eps),
        EtaCurve::KPower(k) if !capped => {
            let r = (1.0 - eps).powf(*k);
            (1.0 - r) / (1.0 + r)
        }
        _ => 1.0 - 2.0 / q,
    })
}

/// Which inequality a [`BoundReport`] checks.
pub enum BoundMode {
    /// `4 (W/Var)^{γ_{ε,q}}` with `γ` from the profile.
    General,
    /// `(W/Var)^{1 − 2/q(ε)}`.
    Refined { q_bar: f64, curve: EtaCurve },
    /// `(W/Var)^{ε/(2−ε)}`.
    Optimal,
    /// `(W/Var)^{(1−(1−ε)^K)/(1+(1−ε)^K)}`.
    KPower(f64),
    /// Raw covariance against `20 W_KK^γ`, `W_KK = 4p(1−p) Σ I_k²`; Boolean binary functions only.
    Kk { gamma: f64 },
    /// `Cov ≤ Var^{1−θ} W^θ`, `θ = ε/(2−ε)`, reported as a ratio.
    VanHandel,
}

impl BoundMode {
    pub fn name(&self) -> &'static str {
        match self {
            BoundMode::General => "general",
            BoundMode::Refined { .. } => "refined",
            BoundMode::Optimal => "optimal",
            BoundMode::KPower(_) => "k_power",
            BoundMode::Kk { .. } => "kk",
            BoundMode::VanHandel => "vh",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub mode: String,
    pub epsilon: Option<f64>,
    pub q: Option<f64>,
    pub eta_q: Option<f64>,
    pub gamma: f64,
    pub degree: Option<usize>,
    pub k: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + HOLDS_TOL
}

/// Quantities every bound needs: spectrum, `Var` and `W`.
#[derive(Clone, Debug)]
pub struct BoundInputs {
    pub spectrum: VarianceSpectrum,
    pub var: f64,
    pub w: f64,
    pub w_kk: Option<f64>,
}

impl BoundInputs {
    pub fn of(f: &TabulatedFunction) -> Result<Self> {
        let spectrum = variance_spectrum(f)?;
        let var = f.variance();
        if var < 1e-14 {
            return Err(Error::ZeroVariance { var });
        }
        let prof = influence_profile(f)?;
        let w_kk = if f.is_boolean() && f.space().all_binary() {
            let mut acc = 0.0;
            for (k, c) in prof.classical.iter().enumerate() {
                let p = f.space().law(k).p_plus().expect("binary");
                acc += 4.0 * p * (1.0 - p) * c.expect("binary") * c.expect("binary");
            }
            Some(acc)
        } else {
            None
        };
        Ok(Self { spectrum, var, w: prof.w_total, w_kk })
    }

    pub fn ratio(&self) -> f64 {
        self.w / self.var
    }
}

/// Checks one covariance bound at noise level `ε`.
pub fn check_bound(f: &TabulatedFunction, eps: f64, mode: &BoundMode, profile: &HyperProfile) -> Result<BoundReport> {
    check_bound_with(&BoundInputs::of(f)?, eps, mode, profile)
}

/// [`check_bound`] on precomputed inputs.
pub fn check_bound_with(inp: &BoundInputs, eps: f64, mode: &BoundMode, profile: &HyperProfile) -> Result<BoundReport> {
    let params = NoiseParams::new(eps)?;
    let cov = exact_noise_cov(&inp.spectrum, params);
    let r = inp.ratio();
    let mut rep = BoundReport {
        mode: mode.name().into(),
        epsilon: Some(eps),
        q: None,
        eta_q: None,
        gamma: 0.0,
        degree: None,
        k: None,
        lhs: cov / inp.var,
        rhs: 0.0,
        holds: false,
    };
    match mode {
        BoundMode::General => {
            let g = gamma_exponent(eps, profile.q, profile.eta_q, false, None)?;
            rep.q = Some(profile.q);
            rep.eta_q = Some(profile.eta_q);
            rep.gamma = g;
            rep.rhs = 4.0 * r.powf(g);
        }
        BoundMode::Refined { q_bar, curve } => {
            let q = q_of_epsilon(eps, *q_bar, curve)?;
            let g = refined_exponent(eps, *q_bar, curve)?;
            rep.q = Some(q);
            rep.eta_q = Some(curve.eta(q));
            rep.gamma = g;
            rep.rhs = r.powf(g);
        }
        BoundMode::Optimal | BoundMode::VanHandel => {
            let g = eps / (2.0 - eps);
            rep.gamma = g;
            rep.rhs = r.powf(g);
        }
        BoundMode::KPower(k) => {
            let a = (1.0 - eps).powf(*k);
            let g = (1.0 - a) / (1.0 + a);
            rep.k = Some(*k);
            rep.gamma = g;
            rep.rhs = r.powf(g);
        }
        BoundMode::Kk { gamma } => {
            let w_kk = inp
                .w_kk
                .ok_or_else(|| Error::InvalidParameter("the kk mode needs a Boolean function of binary coordinates".into()))?;
            rep.gamma = *gamma;
            rep.lhs = cov;
            rep.rhs = 20.0 * w_kk.powf(*gamma);
        }
    }
    rep.holds = holds(rep.lhs, rep.rhs);
    Ok(rep)
}

/// The low-degree bound `‖f^{(≤d)}‖²/Var ≤ η_q^{−2d} (W/Var)^{1−2/q}` and the
/// covariance bound at `ε = 1 − η_q²`.
pub fn check_key_bound(f: &TabulatedFunction, d: usize, profile: &HyperProfile) -> Result<(BoundReport, BoundReport)> {
    check_key_bound_with(&BoundInputs::of(f)?, d, profile)
}

pub fn check_key_bound_with(inp: &BoundInputs, d: usize, profile: &HyperProfile) -> Result<(BoundReport, BoundReport)> {
    let g = 1.0 - 2.0 / profile.q;
    let base = inp.ratio().powf(g);
    let lhs = inp.spectrum.mass_up_to(d) / inp.var;
    let rhs = profile.eta_q.powi(-2 * d as i32) * base;
    let key = BoundReport {
        mode: "key_bound".into(),
        epsilon: None,
        q: Some(profile.q),
        eta_q: Some(profile.eta_q),
        gamma: g,
        degree: Some(d),
        k: None,
        lhs,
        rhs,
        holds: holds(lhs, rhs),
    };
    let eps = profile.epsilon_bar();
    let cov = exact_noise_cov(&inp.spectrum, NoiseParams::new(eps)?) / inp.var;
    let at_eps = BoundReport {
        mode: "key_bound_cov".into(),
        epsilon: Some(eps),
        q: Some(profile.q),
        eta_q: Some(profile.eta_q),
        gamma: g,
        degree: None,
        k: None,
        lhs: cov,
        rhs: base,
        holds: holds(cov, base),
    };
    Ok((key, at_eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn rademacher_constants() {
        let r = FiniteLaw::rademacher();
        for q in [3.0, 4.0, 6.0] {
            assert!((compute_mq(&r, q).unwrap() - 1.0).abs() < 1e-14);
            let h = eta_q_estimate(&r, q).unwrap();
            assert!((h.eta_q - 1.0 / (q - 1.0).sqrt()).abs() < 1e-9, "{q}: {h:?}");
        }
        assert!((1.0 / 3f64.sqrt() - 0.577350).abs() < 1e-6);
    }

    #[test]
    fn biased_binary_mq_matches_scan() {
        let law = FiniteLaw::binary(0.0, 1.0, 0.9).unwrap();
        let m = compute_mq(&law, 4.0).unwrap();
        // The centred space is spanned by x − p; scale out the sign.
        let p = 0.9f64;
        let g = |s: f64| {
            let a = s * (1.0 - p);
            let b = -s * p;
            let l4 = ((1.0 - p) * b.powi(4) + p * a.powi(4)).powf(0.25);
            let l2 = ((1.0 - p) * b * b + p * a * a).sqrt();
            l4 / l2
        };
        let scan = [-1.0, 1.0].iter().map(|&s| g(s)).fold(0.0, f64::max);
        assert!((m - scan).abs() < 1e-12);
        assert!(m > 1.0);
    }

    #[test]
    fn biased_eta_inside_bracket() {
        let law = FiniteLaw::binary(0.0, 1.0, 0.75).unwrap();
        let h = eta_q_estimate(&law, 4.0).unwrap();
        assert!(h.eta_bracket.0 < h.eta_q && h.eta_q < h.eta_bracket.1, "{h:?}");
    }

    #[test]
    fn exponent_arithmetic() {
        let eta = 1.0 / 3f64.sqrt();
        let g = gamma_exponent(0.2, 4.0, eta, false, None).unwrap();
        assert!((g - 0.5 * 1.25f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!((g - 0.101_557_006_787_506).abs() < 1e-12);
        let a = alpha_q(4.0, eta);
        assert!((a - 0.455120).abs() < 1e-6 && a < 0.5);
        let plateau = gamma_exponent(1.0 / 3.0, 4.0, eta, false, None).unwrap();
        assert_eq!(gamma_exponent(0.9, 4.0, eta, false, None).unwrap(), plateau);
    }

    #[test]
    fn q_of_epsilon_curves() {
        assert_eq!(q_of_epsilon(0.5, f64::INFINITY, &EtaCurve::Optimal).unwrap(), 3.0);
        assert_eq!(refined_exponent(0.5, f64::INFINITY, &EtaCurve::Optimal).unwrap(), 0.5 / 1.5);
        assert!((q_of_epsilon(0.5, f64::INFINITY, &EtaCurve::KPower(2.0)).unwrap() - 5.0).abs() < 1e-14);
        assert!((refined_exponent(0.5, f64::INFINITY, &EtaCurve::KPower(2.0)).unwrap() - 0.6).abs() < 1e-14);
        let custom = EtaCurve::Custom(Box::new(|q| 1.0 / (q - 1.0).sqrt()));
        assert!((q_of_epsilon(0.5, 10.0, &custom).unwrap() - 3.0).abs() < 1e-8);
        assert!(q_of_epsilon(1e-6, f64::INFINITY, &EtaCurve::Optimal).unwrap() - 2.0 < 1e-5);
        let bumpy = EtaCurve::Custom(Box::new(|q| 0.5 + 0.1 * q.sin()));
        assert!(matches!(q_of_epsilon(0.5, 10.0, &bumpy), Err(Error::NonMonotoneCurve { .. })));
        let low = EtaCurve::Custom(Box::new(|q| 0.1 / q));
        assert!(matches!(q_of_epsilon(0.5, 10.0, &low), Err(Error::NoAdmissibleQ)));
    }

    #[test]
    fn majority_bounds() {
        let sp = Arc::new(ProductSpace::iid(FiniteLaw::rademacher(), 3).unwrap());
        let maj = TabulatedFunction::from_fn(sp, |x| (x[0] + x[1] + x[2]).signum()).unwrap();
        let prof = HyperProfile::optimal(4.0).unwrap();
        let rep = check_bound(&maj, 0.5, &BoundMode::Optimal, &prof).unwrap();
        assert!((rep.lhs - 0.40625).abs() < 1e-14);
        // W/Var = 3/4 for the ±1 majority.
        assert!((rep.rhs - 0.75f64.powf(1.0 / 3.0)).abs() < 1e-14 && rep.holds);
        let (key, at) = check_key_bound(&maj, 1, &prof).unwrap();
        assert!((key.lhs - 0.75).abs() < 1e-14);
        assert!((key.rhs - 3.0 * 0.75f64.sqrt()).abs() < 1e-13 && key.holds && at.holds);
    }
}
