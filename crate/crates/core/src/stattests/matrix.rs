//! Binary-matrix-rank and linear-complexity tests, both over GF(2).

use crate::special::igamc;

/// Rows and columns of the rank-test matrices.
pub const RANK_DIM: usize = 32;

/// Probability that a random `m×q` GF(2) matrix has rank `r`.
fn rank_probability(r: i32, m: i32, q: i32) -> f64 {
    let mut product = 1.0;
    for i in 0..r {
        let a = 1.0 - 2f64.powi(i - q);
        let b = 1.0 - 2f64.powi(i - m);
        let c = 1.0 - 2f64.powi(i - r);
        product *= a * b / c;
    }
    2f64.powi(r * (q + m - r) - m * q) * product
}

/// Rank of a 32×32 matrix given as one `u32` per row.
pub fn gf2_rank32(mut rows: [u32; RANK_DIM]) -> usize {
    let mut rank = 0;
    for col in (0..32).rev() {
        let bit = 1u32 << col;
        let Some(p) = (rank..RANK_DIM).find(|&i| rows[i] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && *row & bit != 0 {
                *row ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

/// Rank test over disjoint 32×32 matrices filled row by row.
/// Returns `None` when not even one matrix fits.
pub fn rank(eps: &[u8]) -> Option<f64> {
    let per = RANK_DIM * RANK_DIM;
    let count = eps.len() / per;
    if count == 0 {
        return None;
    }
    let (mut full, mut minus_one) = (0usize, 0usize);
    for block in eps.chunks_exact(per).take(count) {
        let mut rows = [0u32; RANK_DIM];
        for (row, bits) in rows.iter_mut().zip(block.chunks_exact(RANK_DIM)) {
            *row = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        }
        match gf2_rank32(rows) {
            32 => full += 1,
            31 => minus_one += 1,
            _ => {}
        }
    }
    let d = RANK_DIM as i32;
    let p32 = rank_probability(d, d, d);
    let p31 = rank_probability(d - 1, d, d);
    let p30 = 1.0 - p32 - p31;
    let n = count as f64;
    let rest = (count - full - minus_one) as f64;
    let chi2 = (full as f64 - n * p32).powi(2) / (n * p32)
        + (minus_one as f64 - n * p31).powi(2) / (n * p31)
        + (rest - n * p30).powi(2) / (n * p30);
    Some((-chi2 / 2.0).exp())
}

/// Linear complexity of a bit sequence (Berlekamp–Massey over GF(2)),
/// with the connection polynomials held in 64-bit words.
pub fn berlekamp_massey(s: &[u8]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let words = n.div_ceil(64) + 1;
    // r holds the sequence reversed: bit k of r is s[n-1-k]. Then the
    // window s[N], s[N-1], ..., s[N-L] equals r bits from n-1-N upward.
    let mut r = vec![0u64; words + 1];
    for (k, &b) in s.iter().rev().enumerate() {
        r[k >> 6] |= (b as u64) << (k & 63);
    }
    let window = |start: usize, w: usize| -> u64 {
        let bit = start + 64 * w;
        let (q, o) = (bit >> 6, bit & 63);
        let lo = r.get(q).copied().unwrap_or(0) >> o;
        if o == 0 {
            lo
        } else {
            lo | (r.get(q + 1).copied().unwrap_or(0) << (64 - o))
        }
    };

    let mut c = vec![0u64; words];
    let mut b = vec![0u64; words];
    let mut t = vec![0u64; words];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m: isize = -1;
    for big_n in 0..n {
        // d = sum_{i=0..L} c_i s_{N-i}
        let start = n - 1 - big_n;
        let used = (l + 1).div_ceil(64);
        let mut acc = 0u64;
        for w in 0..used {
            let mut cw = c[w];
            if w == used - 1 && (l + 1) % 64 != 0 {
                cw &= (1u64 << ((l + 1) % 64)) - 1;
            }
            acc ^= cw & window(start, w);
        }
        if acc.count_ones() & 1 == 0 {
            continue;
        }
        t.copy_from_slice(&c);
        let shift = (big_n as isize - m) as usize;
        let (ws, bs) = (shift >> 6, shift & 63);
        for i in (ws..words).rev() {
            let j = i - ws;
            let mut v = b[j] << bs;
            if bs != 0 && j > 0 {
                v |= b[j - 1] >> (64 - bs);
            }
            c[i] ^= v;
        }
        if 2 * l <= big_n {
            l = big_n + 1 - l;
            m = big_n as isize;
            b.copy_from_slice(&t);
        }
    }
    l
}

/// Class probabilities of the linear-complexity statistic. The first entry
/// is the reference implementation's 0.01047 (exact value 0.010417); the
/// standard's published results for e are only reproduced with it.
const LINEAR_COMPLEXITY_PI: [f64; 7] = [0.01047, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];

/// Linear-complexity test over blocks of `m` bits. Returns `None` when no
/// complete block fits.
pub fn linear_complexity(eps: &[u8], m: usize) -> Option<f64> {
    let nu = linear_complexity_counts(eps, m)?;
    let nb = (eps.len() / m) as f64;
    let chi2: f64 = nu
        .iter()
        .zip(LINEAR_COMPLEXITY_PI)
        .map(|(&v, p)| (v as f64 - nb * p).powi(2) / (nb * p))
        .sum();
    Some(igamc(3.0, chi2 / 2.0))
}

/// Per-class block counts of the linear-complexity statistic.
pub fn linear_complexity_counts(eps: &[u8], m: usize) -> Option<[usize; 7]> {
    let blocks = eps.len() / m;
    if blocks == 0 {
        return None;
    }
    let mf = m as f64;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / 2f64.powf(mf);
    let mut nu = [0usize; 7];
    for block in eps.chunks_exact(m).take(blocks) {
        let l = berlekamp_massey(block) as f64;
        let t = sign * (l - mu) + 2.0 / 9.0;
        let class = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        nu[class] += 1;
    }
    Some(nu)
}
