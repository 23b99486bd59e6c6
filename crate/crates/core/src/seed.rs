//! Labeled seed derivation.
//!
//! Every stochastic stage draws from a ChaCha stream keyed by
//! `(master seed, stage label, block index)`, so a stage or a single block
//! can be regenerated without replaying anything before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sub-seed for `label` and `index` under `master`.
pub fn derive(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ label_hash(label)) ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

/// A deterministic RNG for one labeled block.
pub fn rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    let s = derive(master, label, index);
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(s.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
