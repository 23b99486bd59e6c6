//! Maurer's universal statistical test.

use crate::special::erfc;

/// Expected value and variance of the test statistic for L = 1..=16.
const EXPECTED: [f64; 17] = [
    0.0, 0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507, 7.1836656,
    8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488, 15.167379,
];
const VARIANCE: [f64; 17] = [
    0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401, 3.410,
    3.416, 3.419, 3.421,
];

/// Smallest sequence accepted by [`universal`] (L = 6).
pub const UNIVERSAL_MIN_BITS: usize = 387_840;

/// Block length chosen from the sequence length; `None` below 387 840 bits.
pub fn universal_block_length(n: usize) -> Option<usize> {
    const BOUNDS: [(usize, usize); 11] = [
        (1_059_061_760, 16),
        (496_435_200, 15),
        (231_669_760, 14),
        (107_560_960, 13),
        (49_643_520, 12),
        (22_753_280, 11),
        (10_342_400, 10),
        (4_654_080, 9),
        (2_068_480, 8),
        (904_960, 7),
        (387_840, 6),
    ];
    BOUNDS.iter().find(|&&(b, _)| n >= b).map(|&(_, l)| l)
}

/// Universal test with the block length picked from the sequence length and
/// `Q = 10·2^L` initialisation blocks.
pub fn universal(eps: &[u8]) -> Option<f64> {
    let l = universal_block_length(eps.len())?;
    universal_with(eps, l, 10 << l)
}

/// Universal test with explicit block length `l` (1..=16) and `q`
/// initialisation blocks. Returns `None` when no test blocks remain.
pub fn universal_with(eps: &[u8], l: usize, q: usize) -> Option<f64> {
    if !(1..=16).contains(&l) {
        return None;
    }
    let total = eps.len() / l;
    if total <= q {
        return None;
    }
    let k = total - q;
    let block = |i: usize| -> usize {
        eps[i * l..(i + 1) * l].iter().fold(0usize, |a, &b| (a << 1) | b as usize)
    };
    // Last 1-based block index at which each pattern was seen.
    let mut last = vec![0usize; 1 << l];
    for i in 1..=q {
        last[block(i - 1)] = i;
    }
    let mut sum = 0.0;
    for i in q + 1..=q + k {
        let v = block(i - 1);
        sum += ((i - last[v]) as f64).log2();
        last[v] = i;
    }
    let phi = sum / k as f64;
    let lf = l as f64;
    let kf = k as f64;
    let c = 0.7 - 0.8 / lf + (4.0 + 32.0 / lf) * kf.powf(-3.0 / lf) / 15.0;
    let sigma = c * (VARIANCE[l] / kf).sqrt();
    Some(erfc((phi - EXPECTED[l]).abs() / (std::f64::consts::SQRT_2 * sigma)))
}
