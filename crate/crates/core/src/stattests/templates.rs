//! Non-overlapping and overlapping template-matching tests.

use crate::special::igamc;

/// Number of blocks the non-overlapping test splits the sequence into.
pub const NON_OVERLAPPING_BLOCKS: usize = 8;

/// Block length of the overlapping-template test.
pub const OVERLAPPING_BLOCK: usize = 1032;

/// Class probabilities (0, 1, 2, 3, 4, ≥5 matches) of the overlapping test
/// for m = 9 and 1032-bit blocks.
const OVERLAPPING_PI: [f64; 6] = [0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865];

/// A template is aperiodic when no proper shift of it overlaps itself.
pub fn is_aperiodic(value: u32, m: usize) -> bool {
    (1..m).all(|k| {
        let width = m - k;
        let mask = (1u32 << width) - 1;
        // Leading `width` bits against trailing `width` bits.
        (value >> k) & mask != value & mask
    })
}

/// All aperiodic `m`-bit templates in increasing numeric order
/// (MSB is the first bit of the template).
pub fn aperiodic_templates(m: usize) -> Vec<u32> {
    (0..1u32 << m).filter(|&v| is_aperiodic(v, m)).collect()
}

/// Renders a template as its bit string, first bit first.
pub fn template_string(value: u32, m: usize) -> String {
    (0..m).rev().map(|i| if (value >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Values of every `m`-bit window, first bit as MSB.
fn windows(eps: &[u8], m: usize) -> Vec<u32> {
    if eps.len() < m {
        return Vec::new();
    }
    let mask = (1u32 << m) - 1;
    let mut v = eps[..m - 1].iter().fold(0u32, |a, &b| (a << 1) | b as u32);
    eps[m - 1..]
        .iter()
        .map(|&b| {
            v = ((v << 1) | b as u32) & mask;
            v
        })
        .collect()
}

/// Non-overlapping template test for several templates at once, splitting
/// the sequence into `blocks` blocks. Returns one p-value per template.
pub fn non_overlapping(eps: &[u8], templates: &[u32], m: usize, blocks: usize) -> Vec<f64> {
    let big_m = eps.len() / blocks;
    let positions_per_block = (big_m + 1).saturating_sub(m);
    let win = windows(eps, m);

    // Bucket window start positions by value, in increasing order.
    let mut wanted = vec![usize::MAX; 1 << m];
    for (i, &t) in templates.iter().enumerate() {
        wanted[t as usize] = i;
    }
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); templates.len()];
    for blk in 0..blocks {
        let base = blk * big_m;
        for j in 0..positions_per_block {
            let slot = wanted[win[base + j] as usize];
            if slot != usize::MAX {
                buckets[slot].push((base + j) as u32);
            }
        }
    }

    let mu = positions_per_block as f64 / 2f64.powi(m as i32);
    let var = big_m as f64 * (1.0 / 2f64.powi(m as i32) - (2.0 * m as f64 - 1.0) / 2f64.powi(2 * m as i32));
    buckets
        .iter()
        .map(|pos| {
            let mut counts = vec![0usize; blocks];
            let mut next_free = 0usize;
            for &p in pos {
                let p = p as usize;
                // A match never reaches past its own block, so `next_free`
                // never blocks the start of the next one.
                if p < next_free {
                    continue;
                }
                counts[p / big_m] += 1;
                next_free = p + m;
            }
            let chi2: f64 = counts.iter().map(|&w| (w as f64 - mu).powi(2) / var).sum();
            igamc(blocks as f64 / 2.0, chi2 / 2.0)
        })
        .collect()
}

/// Overlapping test of the all-ones template of length `m`, over blocks of
/// 1032 bits. Returns `None` when no complete block fits.
pub fn overlapping(eps: &[u8], m: usize) -> Option<f64> {
    let nu = overlapping_counts(eps, m)?;
    let k = OVERLAPPING_PI.len() - 1;
    let nb = (eps.len() / OVERLAPPING_BLOCK) as f64;
    let chi2: f64 = nu
        .iter()
        .zip(OVERLAPPING_PI)
        .map(|(&v, p)| (v as f64 - nb * p).powi(2) / (nb * p))
        .sum();
    Some(igamc(k as f64 / 2.0, chi2 / 2.0))
}

/// Blocks with 0, 1, 2, 3, 4 and ≥5 overlapping all-ones matches.
pub fn overlapping_counts(eps: &[u8], m: usize) -> Option<[usize; 6]> {
    let blocks = eps.len() / OVERLAPPING_BLOCK;
    if blocks == 0 {
        return None;
    }
    let k = OVERLAPPING_PI.len() - 1;
    let mut nu = [0usize; 6];
    for block in eps.chunks_exact(OVERLAPPING_BLOCK).take(blocks) {
        // Each run of r ones holds r - m + 1 overlapping matches.
        let mut matches = 0usize;
        let mut run = 0usize;
        for &b in block {
            if b == 1 {
                run += 1;
                if run >= m {
                    matches += 1;
                }
            } else {
                run = 0;
            }
        }
        nu[matches.min(k)] += 1;
    }
    Some(nu)
}
