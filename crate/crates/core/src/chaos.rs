//! Efron–Stein chaos decomposition and variance spectra.
//!
//! A component `f_I` is stored as a dense table over the sub-product of the
//! coordinates in `I` (ascending, lowest coordinate fastest). Subsets are
//! bitmasks with coordinate `k` at bit `k`.
//!
//! The decomposition is built one coordinate at a time: a partial table that
//! still depends on coordinate `k` splits into `E_k` of it (which drops the
//! axis) and `δ_k` of it (which keeps the axis). After all `n` splits the
//! leaves are exactly the `f_I`. The same tree, run backwards with a weight
//! per degree, gives reconstruction, degree projections and `T^η`.
//!
//! Spectra alone use a faster route: a per-axis transform into an orthonormal
//! basis of each coordinate's `L²` space. The squared coefficients grouped by
//! support are the energies `‖f_I‖²`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::{FiniteLaw, ProductSpace, TabulatedFunction};

/// Cap on the total storage `Σ_I Π_{i∈I} |E_i|` of a full decomposition.
pub const FULL_DECOMPOSITION_CAP: u64 = 1 << 23;

/// Largest `n` for subset-indexed outputs (`2^n` entries).
pub const MAX_SUBSET_BITS: usize = 24;

/// Default relative threshold below which components are dropped.
pub const DEFAULT_DROP_TOL: f64 = 1e-14;

/// Tolerance scale: absolute for `Var ≤ 1`, relative to `Var` above.
pub fn tol_scale(var: f64) -> f64 {
    var.max(1.0)
}

// A table viewed as (inner, axis, outer) with the axis of length `s`.
fn reduce_axis(t: &[f64], inner: usize, probs: &[f64], outer: usize) -> Vec<f64> {
    let s = probs.len();
    let mut out = vec![0.0; inner * outer];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (a, &p) in probs.iter().enumerate() {
            let src = &t[(o * s + a) * inner..(o * s + a + 1) * inner];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d += p * v;
            }
        }
    }
    out
}

fn subtract_broadcast(t: &mut [f64], e: &[f64], inner: usize, s: usize, outer: usize) {
    for o in 0..outer {
        let src = &e[o * inner..(o + 1) * inner];
        for a in 0..s {
            let dst = &mut t[(o * s + a) * inner..(o * s + a + 1) * inner];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d -= v;
            }
        }
    }
}

fn add_broadcast(e: &[f64], inner: usize, s: usize, outer: usize) -> Vec<f64> {
    let mut t = vec![0.0; inner * s * outer];
    for o in 0..outer {
        let src = &e[o * inner..(o + 1) * inner];
        for a in 0..s {
            t[(o * s + a) * inner..(o * s + a + 1) * inner].copy_from_slice(src);
        }
    }
    t
}

fn check_coord(space: &ProductSpace, k: usize) -> Result<()> {
    if k >= space.n() {
        return Err(Error::CoordinateOutOfRange { coord: k, n: space.n() });
    }
    Ok(())
}

/// `E_k f` as a table on the full space.
pub fn cond_expect_coord(f: &TabulatedFunction, k: usize) -> Result<TabulatedFunction> {
    let space = f.space();
    check_coord(space, k)?;
    let inner = space.stride(k);
    let law = space.law(k);
    let outer = f.values().len() / (inner * law.size());
    let e = reduce_axis(f.values(), inner, law.probs(), outer);
    f.with_values(add_broadcast(&e, inner, law.size(), outer))
}

/// The probabilistic gradient `δ_k f = f − E_k f`.
pub fn delta(f: &TabulatedFunction, k: usize) -> Result<TabulatedFunction> {
    let space = f.space();
    check_coord(space, k)?;
    let inner = space.stride(k);
    let law = space.law(k);
    let outer = f.values().len() / (inner * law.size());
    let e = reduce_axis(f.values(), inner, law.probs(), outer);
    let mut v = f.values().to_vec();
    subtract_broadcast(&mut v, &e, inner, law.size(), outer);
    f.with_values(v)
}

/// `E[f | F_J]` by integrating every coordinate outside `mask`, as a full table.
pub fn cond_expect_subset(f: &TabulatedFunction, mask: u64) -> Result<TabulatedFunction> {
    let mut g = f.clone();
    for k in 0..f.space().n() {
        if mask >> k & 1 == 0 {
            g = cond_expect_coord(&g, k)?;
        }
    }
    Ok(g)
}

/// Per-degree masses `‖f^{(d)}‖²`, `d = 0..=n`. Entry 0 is `E[f]²`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct VarianceSpectrum {
    pub norms_sq: Vec<f64>,
}

/// One row of the spectrum CSV.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SpectrumRow {
    pub degree: usize,
    pub norm_sq: f64,
}

impl VarianceSpectrum {
    pub fn from_energies(n: usize, energies: &[f64]) -> Self {
        let mut norms_sq = vec![0.0; n + 1];
        for (mask, &e) in energies.iter().enumerate() {
            norms_sq[mask.count_ones() as usize] += e;
        }
        Self { norms_sq }
    }

    pub fn n(&self) -> usize {
        self.norms_sq.len() - 1
    }

    /// `Σ_{d≥1} ‖f^{(d)}‖²`.
    pub fn variance(&self) -> f64 {
        self.norms_sq[1..].iter().sum()
    }

    /// `Σ_{1≤d≤deg} ‖f^{(d)}‖²`.
    pub fn mass_up_to(&self, deg: usize) -> f64 {
        self.norms_sq[1..=deg.min(self.n())].iter().sum()
    }

    /// `Σ_{d≥1} η^d ‖f^{(d)}‖²`.
    pub fn noise_weighted(&self, eta: f64) -> f64 {
        let mut acc = 0.0;
        let mut w = 1.0;
        for &m in &self.norms_sq[1..] {
            w *= eta;
            acc += w * m;
        }
        acc
    }

    pub fn rows(&self) -> Vec<SpectrumRow> {
        self.norms_sq
            .iter()
            .enumerate()
            .map(|(degree, &norm_sq)| SpectrumRow { degree, norm_sq })
            .collect()
    }
}

/// The components `f_I` of a tabulated function.
#[derive(Clone, Debug)]
pub struct ChaosDecomposition {
    space: Arc<ProductSpace>,
    template: TabulatedFunction,
    components: Vec<Option<Vec<f64>>>,
    norms_sq: Vec<f64>,
    mean: f64,
    variance: f64,
}

fn subset_sizes(space: &ProductSpace, mask: u64) -> Vec<usize> {
    (0..space.n())
        .filter(|&k| mask >> k & 1 == 1)
        .map(|k| space.law(k).size())
        .collect()
}

fn subset_weights(space: &ProductSpace, mask: u64) -> Vec<f64> {
    let mut w = vec![1.0];
    for k in (0..space.n()).filter(|&k| mask >> k & 1 == 1) {
        let m = w.len();
        let probs = space.law(k).probs();
        for &p in &probs[1..] {
            for i in 0..m {
                w.push(w[i] * p);
            }
        }
        w[..m].iter_mut().for_each(|x| *x *= probs[0]);
    }
    w
}

fn decomposition_storage(space: &ProductSpace) -> u128 {
    space.laws().iter().fold(1u128, |acc, l| acc.saturating_mul(l.size() as u128 + 1))
}

/// Full decomposition with the default drop threshold.
pub fn efron_stein(f: &TabulatedFunction) -> Result<ChaosDecomposition> {
    efron_stein_with(f, DEFAULT_DROP_TOL)
}

/// Full decomposition; components with `‖f_I‖² < drop_tol·Var[f]` are dropped.
pub fn efron_stein_with(f: &TabulatedFunction, drop_tol: f64) -> Result<ChaosDecomposition> {
    let space = f.space().clone();
    let n = space.n();
    let storage = decomposition_storage(&space);
    if n > MAX_SUBSET_BITS || storage > FULL_DECOMPOSITION_CAP as u128 {
        return Err(Error::CapExceeded { count: storage, cap: FULL_DECOMPOSITION_CAP });
    }
    let sizes = space.sizes();

    // nodes[j]: partial table for mask j over the first k coordinates.
    let mut nodes: Vec<Vec<f64>> = vec![f.values().to_vec()];
    for k in 0..n {
        let s = sizes[k];
        let probs = space.law(k).probs();
        let rest: usize = sizes[k + 1..].iter().product();
        let split: Vec<(Vec<f64>, Vec<f64>)> = nodes
            .into_par_iter()
            .enumerate()
            .map(|(j, mut t)| {
                let inner = subset_sizes(&space, j as u64).iter().product::<usize>();
                let e = reduce_axis(&t, inner, probs, rest);
                subtract_broadcast(&mut t, &e, inner, s, rest);
                (e, t)
            })
            .collect();
        let (es, ds): (Vec<_>, Vec<_>) = split.into_iter().unzip();
        nodes = es;
        nodes.extend(ds);
    }

    let norms: Vec<f64> = nodes
        .par_iter()
        .enumerate()
        .map(|(mask, t)| {
            let w = subset_weights(&space, mask as u64);
            t.iter().zip(&w).map(|(&v, &p)| p * v * v).sum()
        })
        .collect();
    let mean = nodes[0][0];
    let variance: f64 = norms[1..].iter().sum();
    let threshold = drop_tol * variance;
    let components = nodes
        .into_iter()
        .zip(&norms)
        .enumerate()
        .map(|(mask, (t, &nsq))| {
            if mask == 0 || nsq >= threshold && nsq > 0.0 {
                Some(t)
            } else {
                None
            }
        })
        .collect();
    Ok(ChaosDecomposition { space, template: f.clone(), components, norms_sq: norms, mean, variance })
}

impl ChaosDecomposition {
    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Stored component for `mask`, or `None` if it was dropped.
    pub fn component(&self, mask: u64) -> Option<&[f64]> {
        self.components.get(mask as usize)?.as_deref()
    }

    /// Iterates stored `(mask, table)` pairs.
    pub fn components(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(m, c)| c.as_deref().map(|t| (m as u64, t)))
    }

    /// `‖f_I‖²`, computed before any dropping.
    pub fn component_norm_sq(&self, mask: u64) -> f64 {
        self.norms_sq[mask as usize]
    }

    /// Sizes of the axes of the table for `mask`.
    pub fn component_shape(&self, mask: u64) -> Vec<usize> {
        subset_sizes(&self.space, mask)
    }

    /// Marginal weights of the table for `mask`.
    pub fn component_weights(&self, mask: u64) -> Vec<f64> {
        subset_weights(&self.space, mask)
    }

    pub fn spectrum(&self) -> VarianceSpectrum {
        let mut norms = self.norms_sq.clone();
        norms[0] = self.mean * self.mean;
        VarianceSpectrum::from_energies(self.space.n(), &norms)
    }

    /// `Σ_I c(|I|) f_I` as a full table.
    pub fn reconstruct_with(&self, coeff: impl Fn(usize) -> f64 + Sync) -> Result<TabulatedFunction> {
        let n = self.space.n();
        let sizes = self.space.sizes();
        let mut nodes: Vec<Option<Vec<f64>>> = self
            .components
            .iter()
            .enumerate()
            .map(|(mask, c)| {
                let w = coeff(mask.count_ones() as usize);
                match c {
                    Some(t) if w != 0.0 => Some(t.iter().map(|&v| w * v).collect()),
                    _ => None,
                }
            })
            .collect();
        for k in (0..n).rev() {
            let half = 1usize << k;
            let s = sizes[k];
            let rest: usize = sizes[k + 1..].iter().product();
            let mut ds = nodes.split_off(half);
            nodes = nodes
                .into_par_iter()
                .zip(ds.par_iter_mut())
                .enumerate()
                .map(|(j, (e, d))| {
                    let inner = subset_sizes(&self.space, j as u64).iter().product::<usize>();
                    match (e, d.take()) {
                        (None, None) => None,
                        (Some(e), None) => Some(add_broadcast(&e, inner, s, rest)),
                        (None, Some(d)) => Some(d),
                        (Some(e), Some(mut d)) => {
                            for o in 0..rest {
                                let src = &e[o * inner..(o + 1) * inner];
                                for a in 0..s {
                                    let dst = &mut d[(o * s + a) * inner..(o * s + a + 1) * inner];
                                    for (x, &v) in dst.iter_mut().zip(src) {
                                        *x += v;
                                    }
                                }
                            }
                            Some(d)
                        }
                    }
                })
                .collect();
        }
        let values = nodes
            .pop()
            .flatten()
            .unwrap_or_else(|| vec![0.0; self.template.values().len()]);
        self.template.with_values(values)
    }

    pub fn reconstruct(&self) -> Result<TabulatedFunction> {
        self.reconstruct_with(|_| 1.0)
    }

    /// `f^{(≤d)} = Σ_{|I|≤d} f_I`, including the mean.
    pub fn project_le_d(&self, d: usize) -> Result<TabulatedFunction> {
        self.reconstruct_with(|k| if k <= d { 1.0 } else { 0.0 })
    }

    /// The degree-`d` part `f^{(d)}`.
    pub fn project_eq_d(&self, d: usize) -> Result<TabulatedFunction> {
        self.reconstruct_with(|k| if k == d { 1.0 } else { 0.0 })
    }

    /// `T^η f = E[f] + Σ_d η^d f^{(d)}` for `η ∈ [0, 1]`.
    pub fn apply_noise_operator(&self, eta: f64) -> Result<TabulatedFunction> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange { what: "eta", detail: format!("{eta} not in [0, 1]") });
        }
        self.reconstruct_with(|d| eta.powi(d as i32))
    }

    /// `T^{1/η} f`: multiplies degree `d` by `η^{-d}`, `η ∈ (0, 1]`.
    pub fn apply_inverse_noise_operator(&self, eta: f64) -> Result<TabulatedFunction> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::OutOfRange { what: "eta", detail: format!("{eta} not in (0, 1]") });
        }
        self.reconstruct_with(|d| eta.powi(-(d as i32)))
    }

    /// Lifts `f_I` to a table on the full space (zero if dropped).
    pub fn component_full(&self, mask: u64) -> Result<TabulatedFunction> {
        self.reconstruct_with_mask(mask)
    }

    fn reconstruct_with_mask(&self, mask: u64) -> Result<TabulatedFunction> {
        let len = self.template.values().len();
        let Some(t) = self.component(mask) else {
            return self.template.with_values(vec![0.0; len]);
        };
        let shape = self.component_shape(mask);
        let coords: Vec<usize> = (0..self.space.n()).filter(|&k| mask >> k & 1 == 1).collect();
        let values = (0..len)
            .map(|idx| {
                let c = self.space.config_at(idx);
                let mut sub = 0usize;
                for (pos, &k) in coords.iter().enumerate().rev() {
                    sub = sub * shape[pos] + c.indices[k] as usize;
                }
                t[sub]
            })
            .collect();
        self.template.with_values(values)
    }

    /// `⟨f_I, f_J⟩`, evaluated on the sub-product over `I ∪ J`.
    pub fn component_inner(&self, i: u64, j: u64) -> f64 {
        let (Some(a), Some(b)) = (self.component(i), self.component(j)) else {
            return 0.0;
        };
        let union = i | j;
        let coords: Vec<usize> = (0..self.space.n()).filter(|&k| union >> k & 1 == 1).collect();
        let shape = subset_sizes(&self.space, union);
        let w = subset_weights(&self.space, union);
        let index_in = |digits: &[usize], mask: u64| {
            let mut idx = 0usize;
            for (pos, &k) in coords.iter().enumerate().rev() {
                if mask >> k & 1 == 1 {
                    idx = idx * shape[pos] + digits[pos];
                }
            }
            idx
        };
        let mut digits = vec![0usize; coords.len()];
        let mut acc = 0.0;
        for &wt in &w {
            acc += wt * a[index_in(&digits, i)] * b[index_in(&digits, j)];
            for (pos, d) in digits.iter_mut().enumerate() {
                *d += 1;
                if *d < shape[pos] {
                    break;
                }
                *d = 0;
            }
        }
        acc
    }

    /// Largest `|E_k f_I|` over stored components and `k ∈ I`.
    pub fn max_centering_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (mask, t) in self.components() {
            let shape = self.component_shape(mask);
            let mut inner = 1usize;
            for (pos, k) in (0..self.space.n()).filter(|&k| mask >> k & 1 == 1).enumerate() {
                let outer = t.len() / (inner * shape[pos]);
                let e = reduce_axis(t, inner, self.space.law(k).probs(), outer);
                worst = e.iter().fold(worst, |m, v| m.max(v.abs()));
                inner *= shape[pos];
            }
        }
        worst
    }
}

/// Orthonormal basis of `L²(μ)` with the constant first. Rows are basis
/// functions evaluated at the atoms; directions of zero mass come out as zero rows.
pub fn orthonormal_basis(law: &FiniteLaw) -> Vec<Vec<f64>> {
    let s = law.size();
    let p = law.probs();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(p).map(|((x, y), w)| w * x * y).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0; s]];
    for j in 1..s {
        let mut v = vec![0.0; s];
        v[j] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        basis.push(v);
    }
    basis
}

/// Coefficients of `f` in the product orthonormal basis, in canonical order
/// (digit `b` at coordinate `k` selects the `b`-th basis function).
pub fn basis_coefficients(f: &TabulatedFunction) -> Vec<f64> {
    let space = f.space();
    let mut t = f.values().to_vec();
    let mut inner = 1usize;
    for law in space.laws() {
        let s = law.size();
        let basis = orthonormal_basis(law);
        let p = law.probs();
        // m[b][a] = p_a φ_b(a)
        let m: Vec<Vec<f64>> = basis
            .iter()
            .map(|row| row.iter().zip(p).map(|(x, w)| x * w).collect())
            .collect();
        let block = inner * s;
        t.par_chunks_mut(block).for_each(|chunk| {
            let src = chunk.to_vec();
            for (b, mb) in m.iter().enumerate() {
                let dst = &mut chunk[b * inner..(b + 1) * inner];
                dst.iter_mut().for_each(|x| *x = 0.0);
                for (a, &w) in mb.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let col = &src[a * inner..(a + 1) * inner];
                    for (d, &v) in dst.iter_mut().zip(col) {
                        *d += w * v;
                    }
                }
            }
        });
        inner = block;
    }
    t
}

/// Subset energies `e(I) = ‖f_I‖²` for every mask (`e(∅) = E[f]²`).
pub fn subset_energies(f: &TabulatedFunction) -> Result<Vec<f64>> {
    let space = f.space();
    let n = space.n();
    if n > MAX_SUBSET_BITS {
        return Err(Error::CapExceeded { count: 1u128 << n, cap: 1 << MAX_SUBSET_BITS });
    }
    let c = basis_coefficients(f);
    if space.all_binary() {
        // Canonical index and support mask coincide.
        return Ok(c.into_iter().map(|x| x * x).collect());
    }
    let sizes = space.sizes();
    let mut e = vec![0.0; 1usize << n];
    let mut digits = vec![0usize; n];
    let mut mask = 0usize;
    for &x in &c {
        e[mask] += x * x;
        for k in 0..n {
            digits[k] += 1;
            if digits[k] == 1 {
                mask |= 1 << k;
            }
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
            mask &= !(1 << k);
        }
    }
    Ok(e)
}

/// In-place subset-sum (zeta) transform: `g(J) = Σ_{I⊆J} g(I)`.
pub fn zeta_transform(g: &mut [f64]) {
    let len = g.len();
    let mut bit = 1;
    while bit < len {
        g.par_chunks_mut(2 * bit).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(bit);
            hi.iter_mut().zip(lo.iter()).for_each(|(h, l)| *h += l);
        });
        bit <<= 1;
    }
}

/// In-place Möbius transform, inverse of [`zeta_transform`].
pub fn mobius_transform(g: &mut [f64]) {
    let len = g.len();
    let mut bit = 1;
    while bit < len {
        g.par_chunks_mut(2 * bit).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(bit);
            hi.iter_mut().zip(lo.iter()).for_each(|(h, l)| *h -= l);
        });
        bit <<= 1;
    }
}

/// `Var(E[f | F_J])` for every mask `J`, from the energies.
pub fn subset_variances(f: &TabulatedFunction) -> Result<Vec<f64>> {
    let mut e = subset_energies(f)?;
    e[0] = 0.0;
    zeta_transform(&mut e);
    Ok(e)
}

/// Spectrum through the fast transform.
pub fn variance_spectrum(f: &TabulatedFunction) -> Result<VarianceSpectrum> {
    f.space().check_enumerable()?;
    let e = subset_energies(f)?;
    Ok(VarianceSpectrum::from_energies(f.space().n(), &e))
}

/// Spectrum through the full decomposition.
pub fn variance_spectrum_full(f: &TabulatedFunction) -> Result<VarianceSpectrum> {
    Ok(efron_stein_with(f, 0.0)?.spectrum())
}
