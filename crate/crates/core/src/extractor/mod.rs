//! Seeded Toeplitz-hash randomness extraction over GF(2).
//!
//! An `m × n` Toeplitz matrix is fixed by `n + m - 1` seed bits; the seed
//! is public and reused for every block in a run. The input stream is cut
//! into consecutive `n`-bit blocks, each hashed to `m` bits; a trailing
//! partial block is dropped and counted, never padded.

mod fast;
mod reference;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::seed;

pub use fast::{FastToeplitz, Kernel};
pub use reference::{toeplitz_hash_ref, toeplitz_matrix};

/// The `n + m - 1` bits defining an `m × n` Toeplitz matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: BitString,
    n: usize,
    m: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, n: usize, m: usize) -> Result<Self> {
        check_shape(n, m)?;
        if bits.len() != n + m - 1 {
            return Err(Error::LengthMismatch {
                expected: n + m - 1,
                actual: bits.len(),
            });
        }
        Ok(ToeplitzSeed { bits, n, m })
    }

    /// Deterministic seed for tests and reproducible runs.
    pub fn generate(n: usize, m: usize, rng_seed: u64) -> Result<Self> {
        check_shape(n, m)?;
        let len = n + m - 1;
        let mut rng = seed::rng(rng_seed, "toeplitz-seed", 0);
        let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        Self::new(BitString::from_words(words, len), n, m)
    }

    /// Reads a seed file: MSB-first bytes, `ceil((n+m-1)/8)` long, spare bits zero.
    pub fn from_bytes(bytes: &[u8], n: usize, m: usize) -> Result<Self> {
        check_shape(n, m)?;
        let len = n + m - 1;
        let want = len.div_ceil(8);
        if bytes.len() != want {
            return Err(Error::Format {
                offset: bytes.len().min(want) as u64,
                reason: format!("seed file holds {} bytes, n={n} m={m} needs {want}", bytes.len()),
            });
        }
        let mut bits = BitString::from_msb_bytes(bytes);
        if bits.count_ones() != bits.slice(0, len).count_ones() {
            return Err(Error::Format {
                offset: (want - 1) as u64,
                reason: "unused trailing seed bits must be zero".into(),
            });
        }
        bits.truncate(len);
        Self::new(bits, n, m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.to_msb_bytes()
    }

    pub fn read_file(path: &Path, n: usize, m: usize) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, n, m)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

fn check_shape(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::param("n/m", "block sizes must be positive"));
    }
    if m > n {
        return Err(Error::param("m", format!("output block {m} exceeds input block {n}")));
    }
    Ok(())
}

/// Hashes one `n`-bit block with the fastest kernel available.
pub fn toeplitz_hash_fast(seed: &ToeplitzSeed, x: &BitString) -> Result<BitString> {
    FastToeplitz::new(seed).hash(x)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    File(PathBuf),
    Generated(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub n: usize,
    pub m: usize,
    pub seed_source: SeedSource,
    pub worker_count: usize,
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        check_shape(self.n, self.m)?;
        if self.worker_count == 0 {
            return Err(Error::param("worker_count", "must be at least 1"));
        }
        Ok(())
    }

    pub fn load_seed(&self) -> Result<ToeplitzSeed> {
        match &self.seed_source {
            SeedSource::File(p) => ToeplitzSeed::read_file(p, self.n, self.m),
            SeedSource::Generated(s) => ToeplitzSeed::generate(self.n, self.m, *s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractStats {
    pub bits_in: usize,
    pub bits_out: usize,
    pub blocks: usize,
    pub discarded_bits: usize,
    pub worker_count: usize,
    pub kernel: String,
    pub wall_time_s: f64,
    /// Input bits hashed per second, in Gb/s.
    pub throughput_gbps: f64,
}

/// Blocks per parallel work item; 64 blocks of `m` bits end on a word boundary.
const CHUNK_BLOCKS: usize = 64;

/// Hashes `input` blockwise with `seed`; output blocks keep input order.
pub fn extract_stream(config: &ExtractorConfig, seed: &ToeplitzSeed, input: &BitString) -> Result<(BitString, ExtractStats)> {
    config.validate()?;
    if seed.n() != config.n || seed.m() != config.m {
        return Err(Error::Config(format!(
            "seed is for n={} m={}, extractor configured for n={} m={}",
            seed.n(),
            seed.m(),
            config.n,
            config.m
        )));
    }
    let hasher = FastToeplitz::new(seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| extract_with(&hasher, input));
    let elapsed = start.elapsed().as_secs_f64();
    let blocks = input.len() / config.n;
    let stats = ExtractStats {
        bits_in: input.len(),
        bits_out: out.len(),
        blocks,
        discarded_bits: input.len() - blocks * config.n,
        worker_count: config.worker_count,
        kernel: format!("{:?}", hasher.kernel()),
        wall_time_s: elapsed,
        throughput_gbps: if elapsed > 0.0 {
            input.len() as f64 / elapsed / 1e9
        } else {
            0.0
        },
    };
    Ok((out, stats))
}

/// Blockwise hashing on the current rayon pool.
pub fn extract_with(hasher: &FastToeplitz, input: &BitString) -> BitString {
    let (n, m) = (hasher.n(), hasher.m());
    let blocks = input.len() / n;
    let chunks = blocks.div_ceil(CHUNK_BLOCKS);
    let parts: Vec<BitString> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let first = c * CHUNK_BLOCKS;
            let last = (first + CHUNK_BLOCKS).min(blocks);
            let mut part = BitString::with_capacity((last - first) * m);
            let mut x = Vec::with_capacity(hasher.input_words());
            let mut y = vec![0u64; hasher.output_words()];
            for b in first..last {
                x.clear();
                input.copy_window_into(b * n, n, &mut x);
                hasher.hash_words(&x, &mut y);
                let full = m / 64;
                for &w in &y[..full] {
                    part.push_word(w, 64);
                }
                if m % 64 != 0 {
                    part.push_word(y[full], m % 64);
                }
            }
            part
        })
        .collect();
    let mut out = BitString::with_capacity(blocks * m);
    for p in &parts {
        out.extend_from(p);
    }
    out
}
