//! The Modified Tribes function in closed form.
//!
//! `m` blocks of `t` symmetric signs; `Y_ℓ = 1` when block `ℓ` sums to
//! exactly `a_t`, and `f = 1` when some `Y_ℓ = 1`. Blocks are independent, so
//! `P(f(ω) = 0, f(ω^ε) = 0) = (1 − 2p + pq)^m` with `p = P(Y = 1)` and
//! `q = P(Y(ω^ε) = 1 | Y(ω) = 1)`, which gives the covariance exactly.

use serde::Serialize;

use crate::binom::{compensated_sum, dbinom, ln_dbinom};
use crate::error::{Error, Result};
use crate::prob::Config;

/// Parity-compatible integer nearest to `t^{1/2+γ}`; ties go to the smaller one.
pub fn choose_a_t(t: u64, gamma: f64) -> Result<u64> {
    if t < 2 {
        return Err(Error::OutOfRange { what: "t", detail: format!("{t} < 2") });
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(Error::OutOfRange { what: "gamma", detail: format!("{gamma} not in (0, 1/2)") });
    }
    let x = (t as f64).powf(0.5 + gamma);
    let lo = x.floor() as u64;
    let pick = |c: u64| (c % 2 == t % 2).then_some(c);
    let below = pick(lo).or_else(|| lo.checked_sub(1).and_then(pick)).unwrap_or(0);
    let above = pick(lo + 1).unwrap_or(lo + 2);
    let a = if x - below as f64 <= above as f64 - x { below } else { above };
    if a > t {
        return Err(Error::OutOfRange { what: "a_t", detail: format!("{a} exceeds t = {t}") });
    }
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TribesSpec {
    pub t: u64,
    pub gamma: f64,
    pub a_t: u64,
    /// Tribe count; can exceed `2^53`, so it is kept as a float.
    pub m: f64,
    pub epsilon: f64,
}

impl TribesSpec {
    /// Spec with `a_t` from [`choose_a_t`] and `m = ⌊1/p_t⌋`.
    pub fn new(t: u64, gamma: f64, epsilon: f64) -> Result<Self> {
        let a_t = choose_a_t(t, gamma)?;
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange { what: "epsilon", detail: format!("{epsilon} not in [0, 1]") });
        }
        let p = hit_probability(t, a_t)?;
        if p == 0.0 {
            return Err(Error::OutOfRange { what: "p_t", detail: format!("underflows at t = {t}, a_t = {a_t}") });
        }
        Ok(Self { t, gamma, a_t, m: default_m(p), epsilon })
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_t > self.t || !(self.t - self.a_t).is_multiple_of(2) {
            return Err(Error::OutOfRange { what: "a_t", detail: format!("{} incompatible with t = {}", self.a_t, self.t) });
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::OutOfRange { what: "epsilon", detail: format!("{} not in [0, 1]", self.epsilon) });
        }
        if !(self.m >= 1.0 && self.m.fract() == 0.0) {
            return Err(Error::OutOfRange { what: "m", detail: format!("{} is not a positive integer", self.m) });
        }
        Ok(())
    }

    pub fn n_plus(&self) -> u64 {
        (self.t + self.a_t) / 2
    }

    pub fn n_minus(&self) -> u64 {
        (self.t - self.a_t) / 2
    }
}

/// `p_t = C(t, (t + a)/2) / 2^t`.
pub fn hit_probability(t: u64, a: u64) -> Result<f64> {
    if a > t || !(t - a).is_multiple_of(2) {
        return Err(Error::OutOfRange { what: "a_t", detail: format!("{a} incompatible with t = {t}") });
    }
    let k = (t + a) / 2;
    if t <= 120 {
        // Exact integer coefficient; dividing by 2^t is exact in binary.
        let c = (0..k.min(t - k)).fold(1u128, |c, i| c * (t - i) as u128 / (i + 1) as u128);
        return Ok(c as f64 * 0.5f64.powi(t as i32));
    }
    Ok(dbinom(k, t, 0.5))
}

/// `⌊1/p⌋`, corrected for rounding while it is exactly representable.
pub fn default_m(p: f64) -> f64 {
    let mut m = (1.0 / p).floor().max(1.0);
    if m < 9.007_199_254_740_992e15 {
        while p * (m + 1.0) <= 1.0 {
            m += 1.0;
        }
        while m > 1.0 && p * m > 1.0 {
            m -= 1.0;
        }
    }
    m
}

/// `q_{t,ε} = Σ_j P(B⁺ = j) P(B⁻ = j)`, `B^± ~ Bin(N^±, ε/2)`.
pub fn survival_probability(n_plus: u64, n_minus: u64, eps: f64) -> f64 {
    let r = 0.5 * eps;
    compensated_sum((0..=n_minus.min(n_plus)).map(|j| (ln_dbinom(j, n_plus, r) + ln_dbinom(j, n_minus, r)).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TribesStats {
    pub p_t: f64,
    pub m_t: f64,
    /// `P(Σ_{i=2}^t ω_i ∈ {a−1, a+1})`, equal to `2 p_t`.
    pub r_t: f64,
    /// The halved form `½P(Σ = a+1) + ½P(Σ = a−1)`, equal to `p_t`.
    pub r_t_halved: f64,
    pub q_t_eps: f64,
    pub mu_eps: f64,
    pub sigma2_eps: f64,
    pub cov_exact: f64,
    pub var_exact: f64,
    /// Classical influence of one coordinate on `f`.
    pub influence_classical: f64,
    /// `Σ_k (Inf¹_k)²`.
    pub w_exact: f64,
    /// `4p(1−p) Σ_k I_k²` with `p = 1/2`.
    pub w_classical: f64,
    pub lhs_ratio: f64,
    pub rhs_ratio: f64,
}

/// Every closed-form quantity for one spec.
pub fn tribes_stats(spec: &TribesSpec) -> Result<TribesStats> {
    spec.validate()?;
    let (t, a, m, eps) = (spec.t, spec.a_t, spec.m, spec.epsilon);
    let p = hit_probability(t, a)?;
    let (np, nm) = (spec.n_plus(), spec.n_minus());
    let q = survival_probability(np, nm, eps);
    // Σ_{i=2}^t ω_i = a ∓ 1 ⇔ (t+a)/2 − 1 or (t+a)/2 plus signs among t − 1.
    let below = dbinom(np - 1, t - 1, 0.5);
    let above = if np < t { dbinom(np, t - 1, 0.5) } else { 0.0 };
    let r_t = below + above;
    let r_t_halved = 0.5 * r_t;

    let ln_keep = (-p).ln_1p();
    let survive = (m * ln_keep).exp();
    let var_exact = survive * -(m * ln_keep).exp_m1();
    let cov_exact = tribes_cov(p, q, m);

    let influence_classical = r_t * ((m - 1.0) * ln_keep).exp();
    let coords = t as f64 * m;
    let w_classical = coords * influence_classical * influence_classical;
    let w_exact = 0.25 * w_classical;

    let (lhs_ratio, rhs_ratio) = sharp_sides(cov_exact, var_exact, w_classical, eps, spec.gamma);
    Ok(TribesStats {
        p_t: p,
        m_t: m,
        r_t,
        r_t_halved,
        q_t_eps: q,
        mu_eps: a as f64 * eps / 2.0,
        sigma2_eps: t as f64 * (eps / 2.0) * (1.0 - eps / 2.0),
        cov_exact,
        var_exact,
        influence_classical,
        w_exact,
        w_classical,
        lhs_ratio,
        rhs_ratio,
    })
}

/// `(1 − 2p + pq)^m − (1 − p)^{2m}`, evaluated without cancellation.
pub fn tribes_cov(p: f64, q: f64, m: f64) -> f64 {
    let growth = p * (q - p) / ((1.0 - p) * (1.0 - p));
    (2.0 * m * (-p).ln_1p()).exp() * (m * growth.ln_1p()).exp_m1()
}

fn sharp_sides(cov: f64, var: f64, w: f64, eps: f64, gamma: f64) -> (f64, f64) {
    let ratio = w / var;
    let rhs = ratio.powf(eps / (2.0 - eps)) * (1.0 / ratio).ln().powf(-1.0 / (2.0 * gamma * (2.0 - eps)));
    (cov / var, rhs)
}

/// `f` on `t·m` signs stored as atom indices (index 1 is `+1`).
pub fn tribes_evaluate(spec: &TribesSpec, c: &Config) -> Result<f64> {
    let m = spec.m as usize;
    let t = spec.t as usize;
    if c.len() != t * m {
        return Err(Error::DimensionMismatch { expected: t * m, got: c.len() });
    }
    Ok(tribes_evaluate_indices(t, spec.a_t as i64, &c.indices) as u8 as f64)
}

/// Unchecked evaluation on a slice of atom indices.
pub fn tribes_evaluate_indices(t: usize, a: i64, indices: &[u32]) -> bool {
    indices.chunks(t).any(|block| {
        let plus = block.iter().filter(|&&i| i == 1).count() as i64;
        2 * plus - t as i64 == a
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpRow {
    pub t: u64,
    pub a_t: u64,
    pub p_t: f64,
    pub m_t: f64,
    pub r_t: f64,
    pub q_eps: f64,
    pub cov_exact: f64,
    pub var: f64,
    pub w_inf1: f64,
    pub w_classical: f64,
    pub lhs_ratio: f64,
    pub rhs_ratio: f64,
    pub ratio: f64,
    pub r_t_halved: f64,
    pub cov_over_e2q: f64,
    pub p_over_q: f64,
}

/// Sharpness table over a grid of tribe sizes; `W` in the classical convention.
pub fn sharp_ratio_report(gamma: f64, eps: f64, t_grid: &[u64]) -> Result<Vec<SharpRow>> {
    t_grid
        .iter()
        .map(|&t| {
            let spec = TribesSpec::new(t, gamma, eps)?;
            let s = tribes_stats(&spec)?;
            Ok(SharpRow {
                t,
                a_t: spec.a_t,
                p_t: s.p_t,
                m_t: s.m_t,
                r_t: s.r_t,
                q_eps: s.q_t_eps,
                cov_exact: s.cov_exact,
                var: s.var_exact,
                w_inf1: s.w_exact,
                w_classical: s.w_classical,
                lhs_ratio: s.lhs_ratio,
                rhs_ratio: s.rhs_ratio,
                ratio: s.lhs_ratio / s.rhs_ratio,
                r_t_halved: s.r_t_halved,
                cov_over_e2q: s.cov_exact / ((-2.0f64).exp() * s.q_t_eps),
                p_over_q: s.p_t / s.q_t_eps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_t_examples() {
        assert_eq!(choose_a_t(16, 0.25).unwrap(), 8);
        assert_eq!(choose_a_t(100, 0.25).unwrap(), 32);
        assert_eq!(choose_a_t(9, 0.25).unwrap(), 5);
        for t in [2u64, 3, 10, 77, 1000, 12345, 100_000] {
            let a = choose_a_t(t, 0.25).unwrap();
            assert_eq!((t - a) % 2, 0);
            assert!((a as f64 - (t as f64).powf(0.75)).abs() <= 1.0);
        }
    }

    #[test]
    fn t16_closed_forms() {
        let spec = TribesSpec::new(16, 0.25, 0.3).unwrap();
        let s = tribes_stats(&spec).unwrap();
        assert_eq!(s.p_t, 1820.0 / 65536.0);
        assert_eq!(s.m_t, 36.0);
        assert!((s.r_t - 2.0 * s.p_t).abs() < 1e-16);
        assert!((s.r_t_halved - s.p_t).abs() < 1e-16);
        assert!((s.w_classical - 4.0 * s.w_exact).abs() < 1e-16);
        assert!(s.cov_exact >= 0.0 && s.cov_exact <= s.var_exact);
    }

    #[test]
    fn degenerate_noise_levels() {
        let spec = TribesSpec::new(16, 0.25, 0.0).unwrap();
        let s = tribes_stats(&spec).unwrap();
        assert_eq!(s.q_t_eps, 1.0);
        assert!((s.cov_exact - s.var_exact).abs() < 1e-15);
        // q = p makes the two evaluations independent.
        assert_eq!(tribes_cov(s.p_t, s.p_t, s.m_t), 0.0);
        let naive = (1.0 - 2.0 * s.p_t + s.p_t * 0.4).powf(36.0) - (1.0 - s.p_t).powf(72.0);
        assert!((tribes_cov(s.p_t, 0.4, 36.0) - naive).abs() < 1e-14);
    }

    #[test]
    fn evaluate_blocks() {
        let spec = TribesSpec::new(4, 0.25, 0.3).unwrap().with_m(2.0);
        assert_eq!(spec.a_t, 2);
        let hit = Config::new(vec![1, 1, 1, 0, 0, 1, 0, 1]);
        assert_eq!(tribes_evaluate(&spec, &hit).unwrap(), 1.0);
        let miss = Config::new(vec![1, 0, 1, 0, 0, 1, 0, 1]);
        assert_eq!(tribes_evaluate(&spec, &miss).unwrap(), 0.0);
        assert!(tribes_evaluate(&spec, &Config::new(vec![0; 3])).is_err());
    }

    #[test]
    fn survival_is_monotone() {
        let mut prev = 1.0;
        for i in 0..=20 {
            let q = survival_probability(12, 4, i as f64 / 20.0);
            assert!(q <= prev + 1e-15);
            prev = q;
        }
    }
}
