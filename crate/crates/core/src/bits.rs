//! Packed bit strings.
//!
//! Bits are stored LSB-first inside `u64` words: bit `i` lives at
//! `words[i / 64] >> (i % 64)`. Byte-level I/O uses the stream convention
//! used by every file in this crate: MSB-first within each byte.

use std::fmt;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; words_for(len)],
            len,
        }
    }

    /// Builds from raw words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        assert!(words.len() * 64 >= len, "not enough words for {len} bits");
        words.truncate(words_for(len));
        let mut b = BitString { words, len };
        b.clear_tail();
        b
    }

    /// Parses a string of `'0'`/`'1'` characters. Whitespace is skipped.
    pub fn from_str01(s: &str) -> Option<Self> {
        let mut b = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => b.push(false),
                '1' => b.push(true),
                c if c.is_whitespace() => {}
                _ => return None,
            }
        }
        Some(b)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut b = BitString::with_capacity(bits.len());
        for &bit in bits {
            b.push(bit);
        }
        b
    }

    /// Reads `bytes` as an MSB-first bit stream of `8 * bytes.len()` bits.
    pub fn from_msb_bytes(bytes: &[u8]) -> Self {
        let len = bytes.len() * 8;
        let mut words = Vec::with_capacity(words_for(len));
        let mut chunks = bytes.chunks_exact(8);
        for c in &mut chunks {
            words.push(u64::from_be_bytes(c.try_into().unwrap()).reverse_bits());
        }
        let rem = chunks.remainder();
        if !rem.is_empty() {
            let mut buf = [0u8; 8];
            buf[..rem.len()].copy_from_slice(rem);
            words.push(u64::from_be_bytes(buf).reverse_bits());
        }
        BitString { words, len }
    }

    /// Writes the bits MSB-first; a partial final byte is zero-padded.
    pub fn to_msb_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes + 8);
        for w in &self.words {
            out.extend_from_slice(&w.reverse_bits().to_be_bytes());
        }
        out.truncate(nbytes);
        out
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// Bit `i` as 0 or 1.
    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        ((self.words[i >> 6] >> (i & 63)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let m = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= m;
        } else {
            self.words[i >> 6] &= !m;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if value {
            self.words[self.len >> 6] |= 1 << (self.len & 63);
        }
        self.len += 1;
    }

    /// Appends the low `count` bits of `value` (bit 0 first).
    pub fn push_word(&mut self, value: u64, count: usize) {
        debug_assert!(count <= 64);
        if count == 0 {
            return;
        }
        let value = if count == 64 {
            value
        } else {
            value & ((1u64 << count) - 1)
        };
        let off = self.len & 63;
        if off == 0 {
            self.words.push(value);
        } else {
            *self.words.last_mut().unwrap() |= value << off;
            if off + count > 64 {
                self.words.push(value >> (64 - off));
            }
        }
        self.len += count;
    }

    pub fn extend_from(&mut self, other: &BitString) {
        if self.len % 64 == 0 {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        let full = other.len / 64;
        for &w in &other.words[..full] {
            self.push_word(w, 64);
        }
        let rest = other.len % 64;
        if rest > 0 {
            self.push_word(other.words[full], rest);
        }
    }

    /// The 64 bits starting at `offset`, zero-filled past the end.
    #[inline]
    pub fn window_u64(&self, offset: usize) -> u64 {
        let w = offset >> 6;
        let s = offset & 63;
        let lo = self.words.get(w).copied().unwrap_or(0);
        if s == 0 {
            lo
        } else {
            let hi = self.words.get(w + 1).copied().unwrap_or(0);
            (lo >> s) | (hi << (64 - s))
        }
    }

    /// Copies `len` bits starting at `start` into a new string.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(start + len <= self.len, "slice out of range");
        let mut words = Vec::with_capacity(words_for(len));
        self.copy_window_into(start, len, &mut words);
        BitString::from_words(words, len)
    }

    /// Appends `words_for(len)` words holding bits `start..start+len` to `out`.
    pub(crate) fn copy_window_into(&self, start: usize, len: usize, out: &mut Vec<u64>) {
        let n = words_for(len);
        if start & 63 == 0 {
            let w = start >> 6;
            out.extend_from_slice(&self.words[w..w + n]);
        } else {
            for k in 0..n {
                out.push(self.window_u64(start + 64 * k));
            }
        }
        let tail = len & 63;
        if tail != 0 {
            *out.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
    }

    pub fn truncate(&mut self, len: usize) {
        if len < self.len {
            self.len = len;
            self.words.truncate(words_for(len));
            self.clear_tail();
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Bits as a `Vec<u8>` of zeros and ones.
    pub fn to_bytes01(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.bit(i)).collect()
    }

    fn clear_tail(&mut self) {
        let tail = self.len & 63;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString(len={})", self.len)
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut b = BitString::new();
        for bit in iter {
            b.push(bit);
        }
        b
    }
}
