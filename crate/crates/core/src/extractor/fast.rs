//! Word-parallel Toeplitz hashing.
//!
//! The product `T·x` is a slice of the GF(2) polynomial product of the seed
//! and the input: with `z = seed ⊛ x`, `y_i = z_{i+n-1}`. Only the output
//! words of `z` that overlap `[n-1, n+m-1)` are formed, using carry-less
//! multiplication where the CPU has it and a shifted-seed column XOR
//! otherwise.

use crate::bits::BitString;
use crate::error::{Error, Result};

use super::ToeplitzSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// 64×64 carry-less products (PCLMULQDQ).
    Clmul,
    /// XOR of pre-shifted seed windows selected by each input bit.
    Portable,
}

impl Kernel {
    pub fn detect() -> Kernel {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("pclmulqdq") && std::arch::is_x86_feature_detected!("sse2") {
                return Kernel::Clmul;
            }
        }
        Kernel::Portable
    }

    pub fn is_available(self) -> bool {
        match self {
            Kernel::Portable => true,
            Kernel::Clmul => Kernel::detect() == Kernel::Clmul,
        }
    }
}

/// A seed prepared for repeated hashing.
#[derive(Debug, Clone)]
pub struct FastToeplitz {
    n: usize,
    m: usize,
    kernel: Kernel,
    x_words: usize,
    out_words: usize,
    /// First and last word index of `z` touched by the output.
    z_lo: usize,
    z_hi: usize,
    /// Seed words in reverse order, zero padded on the right (clmul kernel).
    reversed: Vec<u64>,
    seed_words: usize,
    /// `shifted[s][w]` = 64 seed bits starting at `64 w + s` (portable kernel).
    shifted: Vec<Vec<u64>>,
}

impl FastToeplitz {
    pub fn new(seed: &ToeplitzSeed) -> Self {
        Self::with_kernel(seed, Kernel::detect())
    }

    pub fn with_kernel(seed: &ToeplitzSeed, kernel: Kernel) -> Self {
        let kernel = if kernel.is_available() { kernel } else { Kernel::Portable };
        let (n, m) = (seed.n(), seed.m());
        let x_words = n.div_ceil(64);
        let out_words = m.div_ceil(64);
        let z_lo = (n - 1) / 64;
        let z_hi = (n + m - 2) / 64;
        let sw = seed.bits().words();
        let seed_words = sw.len();

        let (reversed, shifted) = match kernel {
            Kernel::Clmul => {
                let mut r: Vec<u64> = sw.iter().rev().copied().collect();
                r.resize(seed_words + x_words + 4, 0);
                (r, Vec::new())
            }
            Kernel::Portable => {
                let bits = seed.bits();
                let words = seed_words + 2;
                let sh = (0..64)
                    .map(|s| (0..words).map(|w| bits.window_u64(64 * w + s)).collect())
                    .collect();
                (Vec::new(), sh)
            }
        };
        FastToeplitz {
            n,
            m,
            kernel,
            x_words,
            out_words,
            z_lo,
            z_hi,
            reversed,
            seed_words,
            shifted,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Words needed for one input block.
    pub fn input_words(&self) -> usize {
        self.x_words
    }

    /// Words written per output block.
    pub fn output_words(&self) -> usize {
        self.out_words
    }

    /// Hashes one block given as LSB-first words with bits past `n` clear.
    /// Writes `output_words()` words; bits past `m` in the last word are clear.
    pub fn hash_words(&self, x: &[u64], out: &mut [u64]) {
        debug_assert_eq!(x.len(), self.x_words);
        debug_assert!(out.len() >= self.out_words);
        match self.kernel {
            #[cfg(target_arch = "x86_64")]
            Kernel::Clmul => unsafe { self.hash_clmul(x, out) },
            _ => self.hash_portable(x, out),
        }
        let tail = self.m & 63;
        if tail != 0 {
            out[self.out_words - 1] &= (1u64 << tail) - 1;
        }
    }

    pub fn hash(&self, x: &BitString) -> Result<BitString> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut out = vec![0u64; self.out_words];
        self.hash_words(x.words(), &mut out);
        Ok(BitString::from_words(out, self.m))
    }

    fn hash_portable(&self, x: &[u64], out: &mut [u64]) {
        // Column j of T is the m-bit seed window starting at n-1-j.
        let ow = self.out_words;
        out[..ow].fill(0);
        for (wi, &word) in x.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let j = 64 * wi + b;
                let start = self.n - 1 - j;
                let row = &self.shifted[start & 63][start >> 6..(start >> 6) + ow];
                for (o, &s) in out[..ow].iter_mut().zip(row) {
                    *o ^= s;
                }
            }
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "pclmulqdq,sse2")]
    unsafe fn hash_clmul(&self, x: &[u64], out: &mut [u64]) {
        use std::arch::x86_64::*;

        let nx = self.x_words;
        let ns = self.seed_words;
        let lo = self.z_lo;
        let hi = self.z_hi;
        // acc[d - (lo - 1)] holds the 128-bit sum of products landing at word d.
        let span = hi + 2 - lo;
        let mut acc = [0u64; 128];
        let mut heap;
        let acc: &mut [u64] = if 2 * span <= acc.len() {
            &mut acc[..2 * span]
        } else {
            heap = vec![0u64; 2 * span];
            &mut heap
        };

        let mut xp: Vec<u64>;
        let xs: &[u64] = if nx % 2 == 0 {
            x
        } else {
            xp = Vec::with_capacity(nx + 1);
            xp.extend_from_slice(x);
            xp.push(0);
            &xp
        };
        let pairs = xs.len() / 2;
        let r = self.reversed.as_ptr();
        let xptr = xs.as_ptr();

        for d in lo.saturating_sub(1)..=hi {
            let mut a = _mm_setzero_si128();
            // S[d-b] = R[ns-1-d+b]; only b with d-b in [0, ns) contribute,
            // and out-of-range reads hit the zero padding.
            let b_min = (d + 1).saturating_sub(ns);
            let b_max = (d + 1).min(xs.len());
            let mut p = b_min / 2;
            let p_end = b_max.div_ceil(2).min(pairs);
            let base = ns as isize - 1 - d as isize;
            if p < p_end && (base + (2 * p) as isize) < 0 {
                // b = d + 1 - ns boundary: only the high lane is valid.
                let xv = _mm_loadu_si128(xptr.add(2 * p) as *const __m128i);
                let sv = _mm_set_epi64x(*r.offset(base + (2 * p) as isize + 1) as i64, 0);
                a = _mm_xor_si128(a, _mm_clmulepi64_si128(sv, xv, 0x00));
                a = _mm_xor_si128(a, _mm_clmulepi64_si128(sv, xv, 0x11));
                p += 1;
            }
            if p < p_end {
                // Lane-wise u64 reads: the pair compiles to one unaligned load,
                // without the per-call copy preconditions of `_mm_loadu_si128`.
                let mut sp = r.offset(base + (2 * p) as isize);
                let mut xq = xptr.add(2 * p);
                for _ in p..p_end {
                    let xv = _mm_set_epi64x(*xq.wrapping_add(1) as i64, *xq as i64);
                    let sv = _mm_set_epi64x(*sp.wrapping_add(1) as i64, *sp as i64);
                    a = _mm_xor_si128(a, _mm_clmulepi64_si128(sv, xv, 0x00));
                    a = _mm_xor_si128(a, _mm_clmulepi64_si128(sv, xv, 0x11));
                    sp = sp.wrapping_add(2);
                    xq = xq.wrapping_add(2);
                }
            }
            let k = 2 * (d + 1 - lo);
            acc[k] = _mm_cvtsi128_si64(a) as u64;
            acc[k + 1] = _mm_cvtsi128_si64(_mm_unpackhi_epi64(a, a)) as u64;
        }
        // z word c = low(acc[c]) ^ high(acc[c-1]).
        let zw = |c: usize| -> u64 {
            let here = acc[2 * (c + 1 - lo)];
            let prev = acc[2 * (c - lo) + 1];
            here ^ prev
        };
        let shift = (self.n - 1) & 63;
        for k in 0..self.out_words {
            let c = lo + k;
            let w0 = zw(c);
            let v = if shift == 0 {
                w0
            } else {
                let w1 = if c < hi { zw(c + 1) } else { 0 };
                (w0 >> shift) | (w1 << (64 - shift))
            };
            out[k] = v;
        }
    }
}
