//! Finite-support laws, finite product spaces and dense tabulated functions.
//!
//! Configurations are indexed in mixed-radix lexicographic order with
//! coordinate 0 varying fastest: the configuration with atom indices
//! `(a_0, .., a_{n-1})` sits at `a_0 + s_0 (a_1 + s_1 (a_2 + ..))` where `s_i`
//! is the support size of coordinate `i`. Every dense table in the crate uses
//! this order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Default cap on the number of configurations an exact-mode operation enumerates.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 24;

/// Tolerance on the total mass of a law.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Deserialize)]
struct RawLaw {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

/// A probability law with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw")]
pub struct FiniteLaw {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl TryFrom<RawLaw> for FiniteLaw {
    type Error = Error;

    fn try_from(raw: RawLaw) -> Result<Self> {
        FiniteLaw::new(raw.atoms, raw.probs)
    }
}

impl FiniteLaw {
    /// Validates and builds a law. Atoms are stored exactly as given.
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::LengthMismatch { atoms: atoms.len(), probs: probs.len() });
        }
        if atoms.is_empty() {
            return Err(Error::EmptyLaw);
        }
        for &a in &atoms {
            if !a.is_finite() {
                return Err(Error::NonFinite { what: "atom", value: a });
            }
        }
        for (index, &prob) in probs.iter().enumerate() {
            if !prob.is_finite() {
                return Err(Error::NonFinite { what: "probability", value: prob });
            }
            if prob < 0.0 {
                return Err(Error::NegativeProb { index, prob });
            }
        }
        for (i, &a) in atoms.iter().enumerate() {
            if atoms[..i].contains(&a) {
                return Err(Error::DuplicateAtom { atom: a });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NonNormalized { sum });
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Self { atoms, probs, cumulative })
    }

    /// Symmetric ±1 law.
    pub fn rademacher() -> Self {
        Self::new(vec![-1.0, 1.0], vec![0.5, 0.5]).expect("valid law")
    }

    /// Two-point law on `{lo, hi}` with `P(hi) = p`.
    pub fn binary(lo: f64, hi: f64, p: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![1.0 - p, p])
    }

    /// Uniform law on the given atoms.
    pub fn uniform(atoms: Vec<f64>) -> Result<Self> {
        let k = atoms.len();
        Self::new(atoms, vec![1.0 / k as f64; k])
    }

    /// Uniform law on `{0, 1, .., k-1}`.
    pub fn uniform_range(k: usize) -> Result<Self> {
        Self::uniform((0..k).map(|i| i as f64).collect())
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn size(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_binary(&self) -> bool {
        self.atoms.len() == 2
    }

    /// For a binary law, the probability of the larger atom.
    pub fn p_plus(&self) -> Option<f64> {
        if !self.is_binary() {
            return None;
        }
        let hi = if self.atoms[1] > self.atoms[0] { 1 } else { 0 };
        Some(self.probs[hi])
    }

    /// Index of the larger (`+`) and smaller (`-`) atom of a binary law.
    pub fn binary_indices(&self) -> Option<(usize, usize)> {
        if !self.is_binary() {
            return None;
        }
        Some(if self.atoms[1] > self.atoms[0] { (1, 0) } else { (0, 1) })
    }

    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(&a, &p)| p * g(a)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m))
    }

    /// Atom index for a uniform draw `u ∈ [0, 1)`.
    #[inline]
    pub fn index_for_unit(&self, u: f64) -> usize {
        let last = self.cumulative.len() - 1;
        self.cumulative[..last].iter().position(|&c| u < c).unwrap_or(last)
    }

    #[inline]
    pub fn sample_index(&self, stream: &mut Stream) -> usize {
        self.index_for_unit(stream.uniform())
    }
}

/// An ordered configuration: one atom index per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub indices: Vec<u32>,
}

impl Config {
    pub fn new(indices: Vec<u32>) -> Self {
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A finite product of independent finite laws.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpace {
    laws: Vec<FiniteLaw>,
    config_count: u128,
    enum_cap: u64,
}

impl ProductSpace {
    pub fn new(laws: Vec<FiniteLaw>) -> Result<Self> {
        Self::with_cap(laws, DEFAULT_ENUM_CAP)
    }

    pub fn with_cap(laws: Vec<FiniteLaw>, enum_cap: u64) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::InvalidParameter("a product space needs n >= 1 coordinates".into()));
        }
        let config_count = laws
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.size() as u128));
        Ok(Self { laws, config_count, enum_cap })
    }

    /// `n` independent copies of `law`.
    pub fn iid(law: FiniteLaw, n: usize) -> Result<Self> {
        Self::new(vec![law; n])
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[FiniteLaw] {
        &self.laws
    }

    pub fn law(&self, k: usize) -> &FiniteLaw {
        &self.laws[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.laws.iter().map(FiniteLaw::size).collect()
    }

    pub fn config_count(&self) -> u128 {
        self.config_count
    }

    pub fn enum_cap(&self) -> u64 {
        self.enum_cap
    }

    pub fn all_binary(&self) -> bool {
        self.laws.iter().all(FiniteLaw::is_binary)
    }

    /// Config count as `usize`, or [`Error::CapExceeded`] when enumeration is not admissible.
    pub fn check_enumerable(&self) -> Result<usize> {
        if self.config_count > self.enum_cap as u128 {
            return Err(Error::CapExceeded { count: self.config_count, cap: self.enum_cap });
        }
        Ok(self.config_count as usize)
    }

    /// Stride of coordinate `k` in the dense table.
    pub fn stride(&self, k: usize) -> usize {
        self.laws[..k].iter().map(FiniteLaw::size).product()
    }

    pub fn index_of(&self, c: &Config) -> usize {
        let mut idx = 0usize;
        for (k, law) in self.laws.iter().enumerate().rev() {
            idx = idx * law.size() + c.indices[k] as usize;
        }
        idx
    }

    pub fn config_at(&self, mut idx: usize) -> Config {
        let mut indices = Vec::with_capacity(self.n());
        for law in &self.laws {
            indices.push((idx % law.size()) as u32);
            idx /= law.size();
        }
        Config { indices }
    }

    /// Atom values of a configuration.
    pub fn values_of(&self, c: &Config) -> Vec<f64> {
        c.indices
            .iter()
            .zip(&self.laws)
            .map(|(&i, law)| law.atoms()[i as usize])
            .collect()
    }

    pub fn weight_of(&self, c: &Config) -> f64 {
        c.indices
            .iter()
            .zip(&self.laws)
            .map(|(&i, law)| law.probs()[i as usize])
            .product()
    }

    /// Product weights of every configuration, in canonical order.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let count = self.check_enumerable()?;
        let mut w = Vec::with_capacity(count);
        w.push(1.0);
        // Each new coordinate is slower than all previous ones.
        for law in &self.laws {
            let m = w.len();
            for &p in &law.probs()[1..] {
                for i in 0..m {
                    w.push(w[i] * p);
                }
            }
            let p0 = law.probs()[0];
            w[..m].iter_mut().for_each(|x| *x *= p0);
        }
        Ok(w)
    }

    /// Iterates `(config, weight)` in canonical order.
    pub fn configs(&self) -> Result<ConfigIter<'_>> {
        let count = self.check_enumerable()?;
        Ok(ConfigIter { space: self, current: vec![0; self.n()], remaining: count })
    }

    /// Draws one configuration from the product measure.
    pub fn sample_config(&self, stream: &mut Stream) -> Config {
        let indices = self.laws.iter().map(|l| l.sample_index(stream) as u32).collect();
        Config { indices }
    }
}

/// Iterator over all configurations of a [`ProductSpace`].
pub struct ConfigIter<'a> {
    space: &'a ProductSpace,
    current: Vec<u32>,
    remaining: usize,
}

impl Iterator for ConfigIter<'_> {
    type Item = (Config, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let c = Config { indices: self.current.clone() };
        let w = self.space.weight_of(&c);
        for (k, law) in self.space.laws.iter().enumerate() {
            self.current[k] += 1;
            if (self.current[k] as usize) < law.size() {
                break;
            }
            self.current[k] = 0;
        }
        Some((c, w))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Dense values of a function over every configuration of a space.
#[derive(Clone, Debug)]
pub struct TabulatedFunction {
    space: Arc<ProductSpace>,
    values: Vec<f64>,
    weights: Arc<Vec<f64>>,
}

impl TabulatedFunction {
    pub fn from_values(space: Arc<ProductSpace>, values: Vec<f64>) -> Result<Self> {
        let count = space.check_enumerable()?;
        if values.len() != count {
            return Err(Error::DimensionMismatch { expected: count, got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "function value", value: v });
        }
        let weights = Arc::new(space.weights()?);
        Ok(Self { space, values, weights })
    }

    /// Tabulates `f` evaluated on the atom values of each configuration.
    pub fn from_fn(space: Arc<ProductSpace>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = space.configs()?.map(|(c, _)| f(&space.values_of(&c))).collect();
        Self::from_values(space, values)
    }

    /// Tabulates `f` evaluated on atom indices.
    pub fn from_config_fn(space: Arc<ProductSpace>, f: impl Fn(&Config) -> f64) -> Result<Self> {
        let values = space.configs()?.map(|(c, _)| f(&c)).collect();
        Self::from_values(space, values)
    }

    /// Same space and weights, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: values.len() });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "function value", value: v });
        }
        Ok(Self { space: self.space.clone(), values, weights: self.weights.clone() })
    }

    /// Pointwise image under `phi`.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| phi(v)).collect())
    }

    pub fn space(&self) -> &Arc<ProductSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value_at(&self, c: &Config) -> f64 {
        self.values[self.space.index_of(c)]
    }

    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().zip(self.weights.iter()).map(|(&v, &w)| w * g(v)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|v| v)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.expect(|v| (v - m) * (v - m))
    }

    pub fn inner(&self, other: &TabulatedFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.weights.iter())
            .map(|((&a, &b), &w)| w * a * b)
            .sum()
    }

    pub fn covariance(&self, other: &TabulatedFunction) -> f64 {
        self.inner(other) - self.mean() * other.mean()
    }

    /// `‖f‖_q = E[|f|^q]^{1/q}`.
    pub fn norm_q(&self, q: f64) -> f64 {
        self.expect(|v| v.abs().powf(q)).powf(1.0 / q)
    }

    pub fn norm2(&self) -> f64 {
        self.expect(|v| v * v).sqrt()
    }

    /// True when every value is exactly 0 or 1.
    pub fn is_boolean(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}
