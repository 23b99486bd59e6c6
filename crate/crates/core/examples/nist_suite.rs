//! The SP800-22 battery with both meta-analyses on a ChaCha stream.
//!
//! Runs the 188 standard slots on `COUNT` sequences of 10⁶ bits (default
//! 10; pass a number to change it) and prints each failing slot.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vacuum_qrng::stattests::run_suite;
use vacuum_qrng::BitString;

fn main() -> vacuum_qrng::Result<()> {
    let count: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let len = 1_000_000;
    let mut bytes = vec![0u8; count * len / 8];
    ChaCha20Rng::seed_from_u64(9).fill_bytes(&mut bytes);
    let bits = BitString::from_msb_bytes(&bytes);

    let report = run_suite(&bits, len, count, 0.01)?;
    println!(
        "{count} × {len} bits: {}/{} slots passed ({} applicable)",
        report.slots_passed, report.slot_count, report.slots_applicable
    );
    for s in report.failures() {
        println!(
            "  {}: proportion {:.3} (lower {:.3}), uniformity p {:.2e}",
            s.slot_name,
            s.proportion.unwrap_or(f64::NAN),
            s.proportion_lower.unwrap_or(f64::NAN),
            s.uniformity_p.unwrap_or(f64::NAN)
        );
    }
    println!("{}", report.verdict());
    Ok(())
}
