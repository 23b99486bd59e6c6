//! Frequency, block-frequency, runs, longest-run and cumulative-sums tests.
//!
//! All functions take the sequence as one byte per bit (`0` or `1`).

use crate::special::{erfc, igamc, normal_cdf};

/// Monobit frequency test.
pub fn frequency(eps: &[u8]) -> f64 {
    let n = eps.len() as f64;
    let ones = eps.iter().filter(|&&b| b == 1).count() as f64;
    let s = 2.0 * ones - n;
    let s_obs = s.abs() / n.sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

/// Frequency within blocks of `m` bits; a trailing partial block is ignored.
pub fn block_frequency(eps: &[u8], m: usize) -> f64 {
    let blocks = eps.len() / m;
    let chi2: f64 = eps
        .chunks_exact(m)
        .take(blocks)
        .map(|b| {
            let pi = b.iter().filter(|&&x| x == 1).count() as f64 / m as f64;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    igamc(blocks as f64 / 2.0, chi2 / 2.0)
}

/// Runs test. Returns 0 when the frequency prerequisite fails.
pub fn runs(eps: &[u8]) -> f64 {
    let n = eps.len() as f64;
    let pi = eps.iter().filter(|&&b| b == 1).count() as f64 / n;
    let tau = 2.0 / n.sqrt();
    if (pi - 0.5).abs() >= tau {
        return 0.0;
    }
    let v = 1 + eps.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    erfc(num / den)
}

/// Block size, category bounds and class probabilities of the longest-run test.
struct LongestRunTable {
    m: usize,
    v_min: usize,
    pi: &'static [f64],
}

const LONGEST_RUN_8: LongestRunTable = LongestRunTable {
    m: 8,
    v_min: 1,
    pi: &[0.2148, 0.3672, 0.2305, 0.1875],
};
const LONGEST_RUN_128: LongestRunTable = LongestRunTable {
    m: 128,
    v_min: 4,
    pi: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
};
const LONGEST_RUN_10K: LongestRunTable = LongestRunTable {
    m: 10_000,
    v_min: 10,
    pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
};

/// Minimum length for the longest-run test.
pub const LONGEST_RUN_MIN_BITS: usize = 128;

/// Longest run of ones in a block. Block size follows the sequence length
/// (8, 128 or 10⁴ bits). Returns `None` below 128 bits.
pub fn longest_run(eps: &[u8]) -> Option<f64> {
    let n = eps.len();
    let table = if n < LONGEST_RUN_MIN_BITS {
        return None;
    } else if n < 6272 {
        &LONGEST_RUN_8
    } else if n < 750_000 {
        &LONGEST_RUN_128
    } else {
        &LONGEST_RUN_10K
    };
    let k = table.pi.len() - 1;
    let blocks = n / table.m;
    let mut nu = vec![0usize; k + 1];
    for block in eps.chunks_exact(table.m).take(blocks) {
        let mut longest = 0;
        let mut run = 0;
        for &b in block {
            if b == 1 {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        let class = longest.clamp(table.v_min, table.v_min + k) - table.v_min;
        nu[class] += 1;
    }
    let nb = blocks as f64;
    let chi2: f64 = nu
        .iter()
        .zip(table.pi)
        .map(|(&v, &p)| (v as f64 - nb * p).powi(2) / (nb * p))
        .sum();
    Some(igamc(k as f64 / 2.0, chi2 / 2.0))
}

/// Cumulative-sums test; `reverse` walks the sequence from its end.
pub fn cumulative_sums(eps: &[u8], reverse: bool) -> f64 {
    let n = eps.len() as i64;
    let step = |b: &u8| if *b == 1 { 1i64 } else { -1 };
    let mut s = 0i64;
    let mut z = 0i64;
    let mut walk = |b: &u8| {
        s += step(b);
        z = z.max(s.abs());
    };
    if reverse {
        eps.iter().rev().for_each(&mut walk);
    } else {
        eps.iter().for_each(&mut walk);
    }
    if z == 0 {
        return 1.0;
    }
    let sqrt_n = (n as f64).sqrt();
    let zf = z as f64;
    let phi = |k: i64, c: i64| normal_cdf(((4 * k + c) as f64) * zf / sqrt_n);
    // Integer division truncates toward zero, as in the reference code.
    let mut sum1 = 0.0;
    let mut k = (-n / z + 1) / 4;
    while k <= (n / z - 1) / 4 {
        sum1 += phi(k, 1) - phi(k, -1);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-n / z - 3) / 4;
    while k <= (n / z - 1) / 4 {
        sum2 += phi(k, 3) - phi(k, 1);
        k += 1;
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}
