//! Binomial point masses by Loader's saddle-point method.
//!
//! `P(X = x)` for `X ~ Bin(n, p)` is written as
//! `exp(stirlerr(n) − stirlerr(x) − stirlerr(n−x) − bd0(x, np) − bd0(n−x, nq)) · √(n / (2π x (n−x)))`,
//! which keeps full relative accuracy far into the tails.

const LN_2PI: f64 = 1.837_877_066_409_345_5;

// stirlerr(n) = ln n! − ln(√(2π n) (n/e)^n) for n = 0, 1, ..., 15.
const SFERR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_26,
    0.041_340_695_955_409_29,
    0.027_677_925_684_998_34,
    0.020_790_672_103_765_09,
    0.016_644_691_189_821_19,
    0.013_876_128_823_070_75,
    0.011_896_709_945_891_77,
    0.010_411_265_261_972_1,
    0.009_255_462_182_712_733,
    0.008_330_563_433_362_871,
    0.007_573_675_487_951_841,
    0.006_942_840_107_209_53,
    0.006_408_994_188_004_207,
    0.005_951_370_112_758_848,
    0.005_554_733_551_962_801,
];

/// Error of Stirling's formula for `ln n!`, integer `n`.
pub fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n < 16 {
        return SFERR[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np − x`, accurate when `x ≈ np`.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(X = x)` for `X ~ Bin(n, p)`.
pub fn ln_dbinom(x: u64, n: u64, p: f64) -> f64 {
    let q = 1.0 - p;
    if x > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        return nf * (-p).ln_1p();
    }
    if x == n {
        return nf * p.ln();
    }
    let xf = x as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `P(X = x)` for `X ~ Bin(n, p)`.
pub fn dbinom(x: u64, n: u64, p: f64) -> f64 {
    ln_dbinom(x, n, p).exp()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_choose_exact(n: u64, k: u64) -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
    }

    #[test]
    fn small_cases_are_exact() {
        assert!((dbinom(12, 16, 0.5) / (1820.0 / 65536.0) - 1.0).abs() < 1e-14);
        assert!((dbinom(0, 10, 0.3) - 0.7f64.powi(10)).abs() < 1e-16);
        assert!((dbinom(1, 1, 0.25) - 0.25).abs() < 1e-17);
        let total = compensated_sum((0..=40).map(|k| dbinom(k, 40, 0.37)));
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tails_keep_relative_accuracy() {
        for &(n, k) in &[(1000u64, 700u64), (20_000, 10_500), (200, 3)] {
            let exact = ln_choose_exact(n, k) - n as f64 * 2f64.ln();
            let got = ln_dbinom(k, n, 0.5);
            assert!((got - exact).abs() < 1e-11 * exact.abs().max(1.0), "{n} {k}: {got} vs {exact}");
        }
    }

    #[test]
    fn stirlerr_matches_lgamma_identity() {
        // ln 20! = 42.335616460753485
        let n = 20u64;
        let nf = n as f64;
        let ln_fact = 42.335_616_460_753_485;
        let stirling = 0.5 * (LN_2PI + nf.ln()) + nf * nf.ln() - nf;
        assert!((stirlerr(n) - (ln_fact - stirling)).abs() < 1e-13);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }
}
