//! L¹ and L² influences, classical binary influence and `W[f]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::delta;
use crate::error::{Error, Result};
use crate::prob::TabulatedFunction;

#[derive(Clone, Debug, Serialize)]
pub struct InfluenceProfile {
    pub inf1: Vec<f64>,
    pub inf2: Vec<f64>,
    /// `P(f(ω^k_+) ≠ f(ω^k_-))`; `None` unless every coordinate is binary.
    pub classical: Vec<Option<f64>>,
    pub w_total: f64,
}

/// One CSV row; the summary row carries `w_total` in the `inf1` column.
#[derive(Clone, Debug, Serialize)]
pub struct InfluenceRow {
    pub coord: String,
    pub inf1: f64,
    pub inf2: Option<f64>,
    pub classical: Option<f64>,
}

impl InfluenceProfile {
    pub fn rows(&self) -> Vec<InfluenceRow> {
        let mut rows: Vec<InfluenceRow> = (0..self.inf1.len())
            .map(|k| InfluenceRow {
                coord: k.to_string(),
                inf1: self.inf1[k],
                inf2: Some(self.inf2[k]),
                classical: self.classical[k],
            })
            .collect();
        rows.push(InfluenceRow { coord: "w_total".into(), inf1: self.w_total, inf2: None, classical: None });
        rows
    }
}

fn le_tol(a: f64, b: f64) -> bool {
    a <= b + 1e-12 * b.abs().max(1.0)
}

/// Values of `f` with coordinate `k` pinned to atom index `a`, over the
/// other coordinates in canonical order, paired with the index of the
/// remaining coordinates.
fn pinned(f: &TabulatedFunction, k: usize, a: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
    let space = f.space();
    let inner = space.stride(k);
    let s = space.law(k).size();
    let outer = f.values().len() / (inner * s);
    (0..outer).flat_map(move |o| (0..inner).map(move |i| (f.values()[(o * s + a) * inner + i], o * inner + i)))
}

/// Weights of the configurations of all coordinates except `k`.
fn marginal_weights_without(f: &TabulatedFunction, k: usize) -> Vec<f64> {
    let space = f.space();
    let mut w = vec![1.0];
    for (j, law) in space.laws().iter().enumerate() {
        if j == k {
            continue;
        }
        let m = w.len();
        for &p in &law.probs()[1..] {
            for i in 0..m {
                w.push(w[i] * p);
            }
        }
        w[..m].iter_mut().for_each(|x| *x *= law.probs()[0]);
    }
    w
}

/// Classical influence of a binary coordinate.
pub fn classical_influence(f: &TabulatedFunction, k: usize) -> Result<Option<f64>> {
    let space = f.space();
    if k >= space.n() {
        return Err(Error::CoordinateOutOfRange { coord: k, n: space.n() });
    }
    let Some((plus, minus)) = space.law(k).binary_indices() else {
        return Ok(None);
    };
    let w = marginal_weights_without(f, k);
    let p: f64 = pinned(f, k, plus)
        .zip(pinned(f, k, minus))
        .filter(|((a, _), (b, _))| a != b)
        .map(|((_, idx), _)| w[idx])
        .sum();
    Ok(Some(p))
}

/// `(E|f(ω^k_+) − f(ω^k_-)|, E[(f(ω^k_+) − f(ω^k_-))²], p)` for a binary coordinate.
pub fn binary_difference_moments(f: &TabulatedFunction, k: usize) -> Result<Option<(f64, f64, f64)>> {
    let space = f.space();
    if k >= space.n() {
        return Err(Error::CoordinateOutOfRange { coord: k, n: space.n() });
    }
    let law = space.law(k);
    let Some((plus, minus)) = law.binary_indices() else {
        return Ok(None);
    };
    let w = marginal_weights_without(f, k);
    let (mut m1, mut m2) = (0.0, 0.0);
    for ((a, idx), (b, _)) in pinned(f, k, plus).zip(pinned(f, k, minus)) {
        let d = a - b;
        m1 += w[idx] * d.abs();
        m2 += w[idx] * d * d;
    }
    Ok(Some((m1, m2, law.probs()[plus])))
}

/// `P(f(ω) ≠ f(ω^k_ind))`, with `ω^k_ind` carrying an independent copy at `k`.
pub fn disagreement_with_independent_copy(f: &TabulatedFunction, k: usize) -> Result<f64> {
    let space = f.space();
    if k >= space.n() {
        return Err(Error::CoordinateOutOfRange { coord: k, n: space.n() });
    }
    let law = space.law(k);
    let w = marginal_weights_without(f, k);
    let mut p = 0.0;
    for (a, &pa) in law.probs().iter().enumerate() {
        for (b, &pb) in law.probs().iter().enumerate() {
            if a == b {
                continue;
            }
            for ((x, idx), (y, _)) in pinned(f, k, a).zip(pinned(f, k, b)) {
                if x != y {
                    p += pa * pb * w[idx];
                }
            }
        }
    }
    Ok(p)
}

/// Exact influence profile by enumeration.
pub fn influence_profile(f: &TabulatedFunction) -> Result<InfluenceProfile> {
    let space = f.space();
    space.check_enumerable()?;
    let n = space.n();
    let per: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let d = delta(f, k).expect("coordinate in range");
            (d.expect(f64::abs), d.expect(|v| v * v))
        })
        .collect();
    let (inf1, inf2): (Vec<f64>, Vec<f64>) = per.into_iter().unzip();
    let classical = if space.all_binary() {
        (0..n).map(|k| classical_influence(f, k)).collect::<Result<Vec<_>>>()?
    } else {
        vec![None; n]
    };
    if f.is_boolean() && space.all_binary() {
        for k in 0..n {
            let (_, _, p) = binary_difference_moments(f, k)?.expect("binary");
            let rhs = 2.0 * p * (1.0 - p) * classical[k].expect("binary");
            debug_assert!((inf1[k] - rhs).abs() < 1e-10 && (inf1[k] - 2.0 * inf2[k]).abs() < 1e-10);
        }
    }
    let w_total = inf1.iter().map(|x| x * x).sum();
    Ok(InfluenceProfile { inf1, inf2, classical, w_total })
}

/// `W[f] = Σ_k (Inf¹_k)²`.
pub fn w_functional(f: &TabulatedFunction) -> Result<f64> {
    Ok(influence_profile(f)?.w_total)
}

/// Largest `|φ(y) − φ(y')|/|y − y'|` over the finite range of `f`.
pub fn lipschitz_on_range(f: &TabulatedFunction, phi: impl Fn(f64) -> f64) -> f64 {
    let mut range: Vec<f64> = f.values().to_vec();
    range.sort_by(f64::total_cmp);
    range.dedup();
    range
        .windows(2)
        .map(|w| ((phi(w[1]) - phi(w[0])) / (w[1] - w[0])).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub lipschitz: f64,
    pub inf1_f: Vec<f64>,
    pub inf1_phi_f: Vec<f64>,
    /// `2 L Inf¹_k[f] / Inf¹_k[φ(f)]` where the denominator is positive.
    pub slack: Vec<Option<f64>>,
    pub holds: bool,
}

/// Checks `Inf¹_k[φ(f)] ≤ 2 L Inf¹_k[f]` for every `k`.
///
/// `L` defaults to the Lipschitz constant of `φ` on the range of `f`.
pub fn composition_influence_check(
    f: &TabulatedFunction,
    phi: impl Fn(f64) -> f64,
    lipschitz: Option<f64>,
) -> Result<CompositionReport> {
    let l = lipschitz.unwrap_or_else(|| lipschitz_on_range(f, &phi));
    let g = f.map(&phi)?;
    let inf1_f = influence_profile(f)?.inf1;
    let inf1_phi_f = influence_profile(&g)?.inf1;
    let slack = inf1_f
        .iter()
        .zip(&inf1_phi_f)
        .map(|(&a, &b)| (b > 0.0).then(|| 2.0 * l * a / b))
        .collect();
    let holds = inf1_f.iter().zip(&inf1_phi_f).all(|(&a, &b)| le_tol(b, 2.0 * l * a));
    Ok(CompositionReport { lipschitz: l, inf1_f, inf1_phi_f, slack, holds })
}
