//! Serial and approximate-entropy tests, both built on cyclic counts of
//! overlapping m-bit patterns.

use crate::special::igamc;

/// Counts of every `m`-bit pattern over the `n` cyclic windows of the
/// sequence (the first `m-1` bits are appended to the end).
pub fn cyclic_pattern_counts(eps: &[u8], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = eps.len() as u64;
        return counts;
    }
    let n = eps.len();
    let mask = (1usize << m) - 1;
    let mut v = 0usize;
    for i in 0..m - 1 {
        v = (v << 1) | eps[i % n] as usize;
    }
    for i in 0..n {
        v = ((v << 1) | eps[(i + m - 1) % n] as usize) & mask;
        counts[v] += 1;
    }
    counts
}

fn psi_squared(eps: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = eps.len() as f64;
    let sum: f64 = cyclic_pattern_counts(eps, m).iter().map(|&c| (c as f64).powi(2)).sum();
    sum * 2f64.powi(m as i32) / n - n
}

/// Serial test of order `m` (≥ 2); returns the two p-values
/// (first and second differences of ψ²).
pub fn serial(eps: &[u8], m: usize) -> [f64; 2] {
    let p0 = psi_squared(eps, m);
    let p1 = psi_squared(eps, m - 1);
    let p2 = psi_squared(eps, m.saturating_sub(2));
    let del1 = p0 - p1;
    let del2 = p0 - 2.0 * p1 + p2;
    [
        igamc(2f64.powi(m as i32 - 2), del1 / 2.0),
        igamc(2f64.powi(m as i32 - 3), del2 / 2.0),
    ]
}

fn phi(eps: &[u8], m: usize) -> f64 {
    let n = eps.len() as f64;
    cyclic_pattern_counts(eps, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// Approximate-entropy test with block length `m`.
pub fn approximate_entropy(eps: &[u8], m: usize) -> f64 {
    let n = eps.len() as f64;
    let apen = phi(eps, m) - phi(eps, m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - apen);
    igamc(2f64.powi(m as i32 - 1), chi2 / 2.0)
}
