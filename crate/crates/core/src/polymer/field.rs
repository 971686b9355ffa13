//! Disorder: lazy hashed access and materialized fields.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::prob::FiniteLaw;
use crate::rng::{counter_hash, wyrand_at};

pub const FIELD_MAGIC: &[u8; 4] = b"NSPF";
pub const FIELD_VERSION: u32 = 1;

/// Maps 32 hashed bits to an atom index by integer comparison.
#[derive(Clone, Debug)]
pub struct AtomSampler {
    first: u64,
    thresholds: Vec<u64>,
}

impl AtomSampler {
    pub fn new(law: &FiniteLaw) -> Self {
        let scale = (1u64 << 32) as f64;
        let mut acc = 0.0;
        let mut thresholds = Vec::with_capacity(law.size() - 1);
        for &p in &law.probs()[..law.size() - 1] {
            acc += p;
            thresholds.push((acc * scale).round() as u64);
        }
        let first = thresholds.first().copied().unwrap_or(u64::MAX);
        Self { first, thresholds }
    }

    #[inline]
    pub fn pick(&self, bits: u32) -> u8 {
        let u = bits as u64;
        if self.thresholds.len() == 1 {
            return (u >= self.first) as u8;
        }
        self.thresholds.iter().map(|&t| (u >= t) as u8).sum()
    }
}

#[inline]
pub(crate) fn site_code(x: i64, y: i64) -> u64 {
    (((x + (1 << 31)) as u64) << 32) | ((y + (1 << 31)) as u64 & 0xffff_ffff)
}

/// Disorder of one replicate, addressed by `(seed, replicate, layer, site)`.
#[derive(Clone, Debug)]
pub struct HashedDisorder {
    pub seed: u64,
    pub replicate: u64,
    sampler: AtomSampler,
}

/// Per-layer keys: the environment (with the redraw decisions) and the fresh values.
const KEY_OMEGA: u64 = 0;
const KEY_FRESH: u64 = 1;

impl HashedDisorder {
    pub fn new(law: &FiniteLaw, seed: u64, replicate: u64) -> Self {
        Self { seed, replicate, sampler: AtomSampler::new(law) }
    }

    #[inline]
    fn key(&self, layer: usize, which: u64) -> u64 {
        counter_hash(self.seed, self.replicate, layer as u64, which)
    }

    pub fn atom(&self, layer: usize, x: i64, y: i64) -> u8 {
        self.sampler.pick((wyrand_at(self.key(layer, KEY_OMEGA), site_code(x, y)) >> 32) as u32)
    }

    /// Atoms of `ω` on the window `[-w, w]²` of a layer, `x` fastest.
    pub fn fill(&self, layer: usize, w: usize, out: &mut Vec<u8>) {
        let key = self.key(layer, KEY_OMEGA);
        let side = 2 * w + 1;
        out.resize(side * side, 0);
        let w = w as i64;
        for (row, y) in out.chunks_exact_mut(side).zip(-w..=w) {
            for (o, x) in row.iter_mut().zip(-w..=w) {
                *o = self.sampler.pick((wyrand_at(key, site_code(x, y)) >> 32) as u32);
            }
        }
    }

    /// Atoms of `ω` and of `ω^ε` on a window. Each entry is redrawn with
    /// probability `ε` from an independent fresh value. The high half of the
    /// site hash picks the atom of `ω`, the low half decides the redraw.
    pub fn fill_pair(&self, layer: usize, w: usize, eps: f64, omega: &mut Vec<u8>, noisy: &mut Vec<u8>) {
        let (k0, k2) = (self.key(layer, KEY_OMEGA), self.key(layer, KEY_FRESH));
        let cut = (eps * (1u64 << 32) as f64).round() as u64;
        let side = 2 * w + 1;
        omega.resize(side * side, 0);
        noisy.resize(side * side, 0);
        let w = w as i64;
        let rows = omega.chunks_exact_mut(side).zip(noisy.chunks_exact_mut(side)).zip(-w..=w);
        for ((orow, nrow), y) in rows {
            for ((o, n), x) in orow.iter_mut().zip(nrow.iter_mut()).zip(-w..=w) {
                let c = site_code(x, y);
                let h = wyrand_at(k0, c);
                let a = self.sampler.pick((h >> 32) as u32);
                let fresh = self.sampler.pick((wyrand_at(k2, c) >> 32) as u32);
                *o = a;
                *n = if (h & 0xffff_ffff) < cut { fresh } else { a };
            }
        }
    }
}

/// `ω(n, z)` for `n ∈ 1..=N` and `z ∈ [-box, box]²`, stored as atom indices,
/// layer-major then row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField {
    pub n: usize,
    pub box_radius: usize,
    pub seed: u64,
    pub replicate: u64,
    law: FiniteLaw,
    atoms: Vec<u8>,
}

impl DisorderField {
    pub fn from_seed(law: &FiniteLaw, n: usize, box_radius: usize, seed: u64, replicate: u64) -> Self {
        let h = HashedDisorder::new(law, seed, replicate);
        let mut atoms = Vec::with_capacity(n * (2 * box_radius + 1).pow(2));
        let mut layer = Vec::new();
        for t in 1..=n {
            h.fill(t, box_radius, &mut layer);
            atoms.extend_from_slice(&layer);
        }
        Self { n, box_radius, seed, replicate, law: law.clone(), atoms }
    }

    pub fn law(&self) -> &FiniteLaw {
        &self.law
    }

    fn side(&self) -> usize {
        2 * self.box_radius + 1
    }

    fn offset(&self, layer: usize, x: i64, y: i64) -> Option<usize> {
        let r = self.box_radius as i64;
        if layer == 0 || layer > self.n || x.abs() > r || y.abs() > r {
            return None;
        }
        let s = self.side();
        Some((layer - 1) * s * s + (y + r) as usize * s + (x + r) as usize)
    }

    pub fn atom(&self, layer: usize, x: i64, y: i64) -> Option<u8> {
        self.offset(layer, x, y).map(|i| self.atoms[i])
    }

    pub fn value(&self, layer: usize, x: i64, y: i64) -> Option<f64> {
        self.atom(layer, x, y).map(|a| self.law.atoms()[a as usize])
    }

    pub fn set_atom(&mut self, layer: usize, x: i64, y: i64, atom: u8) -> Result<()> {
        if atom as usize >= self.law.size() {
            return Err(Error::InvalidParameter(format!("atom index {atom} out of range")));
        }
        let i = self
            .offset(layer, x, y)
            .ok_or_else(|| Error::OutOfRange { what: "site", detail: format!("({layer}, {x}, {y}) outside the field") })?;
        self.atoms[i] = atom;
        Ok(())
    }

    /// Window `[-w, w]²` of a layer, `x` fastest.
    pub fn fill(&self, layer: usize, w: usize, out: &mut Vec<u8>) {
        let s = self.side();
        let r = self.box_radius;
        out.clear();
        let base = (layer - 1) * s * s;
        for row in (r - w)..=(r + w) {
            let start = base + row * s + r - w;
            out.extend_from_slice(&self.atoms[start..start + 2 * w + 1]);
        }
    }

    /// 16-byte header (`NSPF`, version, N, box as little-endian u32) then one byte per entry.
    pub fn dump(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(FIELD_MAGIC)?;
        for v in [FIELD_VERSION, self.n as u32, self.box_radius as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.atoms)
    }

    pub fn load(mut r: impl Read, law: &FiniteLaw) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("disorder dump: {m}"));
        let mut head = [0u8; 16];
        r.read_exact(&mut head).map_err(|e| bad(&e.to_string()))?;
        if &head[..4] != FIELD_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap()) as usize;
        if word(4) != FIELD_VERSION as usize {
            return Err(bad("unsupported version"));
        }
        let (n, box_radius) = (word(8), word(12));
        let mut atoms = Vec::new();
        r.read_to_end(&mut atoms).map_err(|e| bad(&e.to_string()))?;
        if atoms.len() != n * (2 * box_radius + 1).pow(2) {
            return Err(bad("length does not match header"));
        }
        if atoms.iter().any(|&a| a as usize >= law.size()) {
            return Err(bad("atom index outside the law"));
        }
        Ok(Self { n, box_radius, seed: 0, replicate: 0, law: law.clone(), atoms })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn materialized_matches_hashed() {
        let law = FiniteLaw::rademacher();
        let f = DisorderField::from_seed(&law, 5, 4, 9, 2);
        let h = HashedDisorder::new(&law, 9, 2);
        for t in 1..=5 {
            for x in -4..=4 {
                for y in -4..=4 {
                    assert_eq!(f.atom(t, x, y), Some(h.atom(t, x, y)));
                }
            }
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        f.fill(3, 2, &mut a);
        h.fill(3, 2, &mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn dump_round_trip() {
        let law = FiniteLaw::rademacher();
        let f = DisorderField::from_seed(&law, 3, 2, 1, 0);
        let mut bytes = Vec::new();
        f.dump(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"NSPF");
        assert_eq!(bytes.len(), 16 + 3 * 25);
        let g = DisorderField::load(bytes.as_slice(), &law).unwrap();
        assert_eq!(g.atom(2, 1, -1), f.atom(2, 1, -1));
        bytes[0] = b'X';
        assert!(DisorderField::load(bytes.as_slice(), &law).is_err());
    }

    #[test]
    fn sampler_frequencies_and_resampling() {
        let law = FiniteLaw::new(vec![-1.0, 0.0, 2.0], vec![0.5, 0.3, 0.2]).unwrap();
        let h = HashedDisorder::new(&law, 4, 0);
        let (mut om, mut no) = (Vec::new(), Vec::new());
        h.fill_pair(1, 150, 0.4, &mut om, &mut no);
        let n = om.len() as f64;
        let freq = |v: &[u8], a: u8| v.iter().filter(|&&x| x == a).count() as f64 / n;
        for (a, p) in [(0u8, 0.5), (1, 0.3), (2, 0.2)] {
            let se = (p * (1.0 - p) / n).sqrt();
            assert!((freq(&om, a) - p).abs() < 4.0 * se);
            assert!((freq(&no, a) - p).abs() < 4.0 * se);
        }
        // P(agree) = 1 − ε + ε Σ p² = 0.6 + 0.4·0.38
        let agree = om.iter().zip(&no).filter(|(a, b)| a == b).count() as f64 / n;
        let p = 0.6 + 0.4 * 0.38;
        assert!((agree - p).abs() < 4.0 * (p * (1.0 - p) / n).sqrt());
        let mut plain = Vec::new();
        h.fill(1, 150, &mut plain);
        assert_eq!(plain, om);
    }
}
