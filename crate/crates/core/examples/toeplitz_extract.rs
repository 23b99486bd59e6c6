//! Toeplitz-hash extraction: the reference double loop against the fast
//! kernel, then a blockwise stream extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vacuum_qrng::extractor::{
    extract_stream, toeplitz_hash_fast, toeplitz_hash_ref, toeplitz_matrix, ExtractorConfig, SeedSource, ToeplitzSeed,
};
use vacuum_qrng::BitString;

fn main() -> vacuum_qrng::Result<()> {
    // A 3×4 matrix small enough to print.
    let small = ToeplitzSeed::new(BitString::from_str01("011011").unwrap(), 4, 3)?;
    println!("T =");
    for row in toeplitz_matrix(&small) {
        println!("  {row:?}");
    }
    let x = BitString::from_str01("1010").unwrap();
    println!("T·1010 = {}", toeplitz_hash_ref(&small, &x)?);

    // Fast and reference agree bit for bit.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let seed = ToeplitzSeed::generate(4096, 824, 11)?;
    for _ in 0..20 {
        let x: BitString = (0..4096).map(|_| rng.random::<bool>()).collect();
        assert_eq!(toeplitz_hash_fast(&seed, &x)?, toeplitz_hash_ref(&seed, &x)?);
    }
    println!("fast == reference on 20 random 4096-bit blocks");

    let config = ExtractorConfig {
        n: 4096,
        m: 824,
        seed_source: SeedSource::Generated(11),
        worker_count: 1,
    };
    let input: BitString = (0..(10 * 4096 + 5)).map(|_| rng.random::<bool>()).collect();
    let (out, stats) = extract_stream(&config, &config.load_seed()?, &input)?;
    println!(
        "{} bits in -> {} bits out in {} blocks, {} discarded ({} kernel)",
        stats.bits_in, out.len(), stats.blocks, stats.discarded_bits, stats.kernel
    );
    Ok(())
}
