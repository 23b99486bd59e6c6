//! Digitisation of receiver waveforms.
//!
//! A mid-riser uniform quantiser with full scale `±k·σ_ref`: there is no
//! code centred on zero, so `0⁺` lands on the upper-middle code. `σ_ref`
//! is frozen per run so the quantiser is stationary across blocks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::receiver::WaveformBlock;

pub const RAW_MAGIC: &[u8; 8] = b"QRNGRAW1";
pub const BITS_MAGIC: &[u8; 8] = b"QRNGBITS";
pub const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizerConfig {
    pub bits: u32,
    /// Loading factor `k`: full scale is `±k·σ_ref`.
    pub full_scale_sigma: f64,
    /// Reference rms amplitude in volts.
    pub sigma_ref: f64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        QuantizerConfig {
            bits: 8,
            full_scale_sigma: 4.0,
            sigma_ref: 1.0,
        }
    }
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.bits) {
            return Err(Error::param("bits", format!("{} outside 2..=16", self.bits)));
        }
        if !(self.full_scale_sigma > 0.0 && self.full_scale_sigma.is_finite()) {
            return Err(Error::param("full_scale_sigma", "must be positive"));
        }
        if !(self.sigma_ref > 0.0 && self.sigma_ref.is_finite()) {
            return Err(Error::param("sigma_ref", "must be positive"));
        }
        Ok(())
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn max_code(&self) -> u16 {
        (self.levels() - 1) as u16
    }

    /// Half range `FS = k·σ_ref`.
    pub fn full_scale(&self) -> f64 {
        self.full_scale_sigma * self.sigma_ref
    }

    /// Step size `Δ = 2·FS / 2^bits`.
    pub fn step(&self) -> f64 {
        2.0 * self.full_scale() / self.levels() as f64
    }

    /// Code for one voltage and whether it saturated.
    #[inline]
    pub fn code(&self, v: f64) -> (u16, bool) {
        let idx = ((v + self.full_scale()) / self.step()).floor();
        let max = self.max_code() as f64;
        if idx < 0.0 {
            (0, true)
        } else if idx > max {
            (self.max_code(), true)
        } else {
            (idx as u16, false)
        }
    }
}

/// Quantised ADC codes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSampleBlock {
    codes: Vec<u16>,
    config: QuantizerConfig,
    clip_count: usize,
}

impl RawSampleBlock {
    pub fn new(codes: Vec<u16>, config: QuantizerConfig, clip_count: usize) -> Result<Self> {
        config.validate()?;
        if let Some(i) = codes.iter().position(|&c| c > config.max_code()) {
            return Err(Error::param(
                "codes",
                format!("code {} at index {i} exceeds {}-bit range", codes[i], config.bits),
            ));
        }
        if clip_count > codes.len() {
            return Err(Error::param("clip_count", "exceeds sample count"));
        }
        Ok(RawSampleBlock {
            codes,
            config,
            clip_count,
        })
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    pub fn config(&self) -> &QuantizerConfig {
        &self.config
    }

    pub fn clip_count(&self) -> usize {
        self.clip_count
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Code occurrence counts, indexed by code.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.config.levels() as usize];
        for &c in &self.codes {
            h[c as usize] += 1;
        }
        h
    }
}

pub fn quantize(wave: &WaveformBlock, config: &QuantizerConfig) -> Result<RawSampleBlock> {
    quantize_samples(wave.samples(), config)
}

pub fn quantize_samples(samples: &[f64], config: &QuantizerConfig) -> Result<RawSampleBlock> {
    config.validate()?;
    let mut codes = Vec::with_capacity(samples.len());
    let mut clip_count = 0;
    for (i, &v) in samples.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample(i));
        }
        let (c, clipped) = config.code(v);
        clip_count += clipped as usize;
        codes.push(c);
    }
    Ok(RawSampleBlock {
        codes,
        config: *config,
        clip_count,
    })
}

/// Emits each code MSB-first as `bits` bits.
pub fn pack_bits(block: &RawSampleBlock) -> BitString {
    let bits = block.config.bits as usize;
    if bits == 8 {
        let bytes: Vec<u8> = block.codes.iter().map(|&c| c as u8).collect();
        return BitString::from_msb_bytes(&bytes);
    }
    let mut out = BitString::with_capacity(bits * block.codes.len());
    for &c in &block.codes {
        out.push_word((c as u64).reverse_bits() >> (64 - bits), bits);
    }
    out
}

/// Inverse of [`pack_bits`]; trailing bits short of a full code are ignored.
pub fn unpack_bits(bits: &BitString, config: &QuantizerConfig) -> Result<RawSampleBlock> {
    config.validate()?;
    let width = config.bits as usize;
    let n = bits.len() / width;
    let mut codes = Vec::with_capacity(n);
    for i in 0..n {
        let w = bits.window_u64(i * width) & ((1u64 << width) - 1);
        codes.push((w.reverse_bits() >> (64 - width)) as u16);
    }
    RawSampleBlock::new(codes, *config, 0)
}

/// Writes a `QRNGRAW1` file: 16-byte header then one byte per code.
pub fn write_raw<W: Write>(mut w: W, block: &RawSampleBlock) -> Result<()> {
    if block.config.bits > 8 {
        return Err(Error::param("bits", "raw sample files hold at most 8 bits per code"));
    }
    let mut header = [0u8; RAW_HEADER_LEN];
    header[..8].copy_from_slice(RAW_MAGIC);
    header[8..10].copy_from_slice(&(block.config.bits as u16).to_le_bytes());
    header[12..16].copy_from_slice(&(block.codes.len() as u32).to_le_bytes());
    let body: Vec<u8> = block.codes.iter().map(|&c| c as u8).collect();
    let io = |e| Error::io("<raw stream>", e);
    w.write_all(&header).map_err(io)?;
    w.write_all(&body).map_err(io)?;
    Ok(())
}

/// Header and codes of a `QRNGRAW1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFile {
    pub bits: u32,
    pub codes: Vec<u8>,
}

pub fn read_raw<R: Read>(mut r: R) -> Result<RawFile> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::io("<raw stream>", e))?;
    parse_raw(&buf)
}

pub fn parse_raw(buf: &[u8]) -> Result<RawFile> {
    if buf.len() < RAW_HEADER_LEN {
        return Err(Error::Format {
            offset: buf.len() as u64,
            reason: format!("truncated header: need {RAW_HEADER_LEN} bytes, file has {}", buf.len()),
        });
    }
    check_magic(&buf[..8], RAW_MAGIC)?;
    let bits = u16::from_le_bytes([buf[8], buf[9]]) as u32;
    if !(2..=8).contains(&bits) {
        return Err(Error::Format {
            offset: 8,
            reason: format!("bits field {bits} not in 2..=8"),
        });
    }
    let count_low = u32::from_le_bytes(buf[12..16].try_into().unwrap());
    let codes = buf[RAW_HEADER_LEN..].to_vec();
    if codes.len() as u32 != count_low {
        return Err(Error::Format {
            offset: 12,
            reason: format!(
                "sample count low word {count_low} disagrees with {} payload bytes",
                codes.len()
            ),
        });
    }
    let max = (1u32 << bits) - 1;
    if let Some(i) = codes.iter().position(|&c| c as u32 > max) {
        return Err(Error::Format {
            offset: (RAW_HEADER_LEN + i) as u64,
            reason: format!("code {} exceeds {bits}-bit range", codes[i]),
        });
    }
    Ok(RawFile { bits, codes })
}

fn check_magic(found: &[u8], expected: &[u8; 8]) -> Result<()> {
    if found != expected {
        return Err(Error::Format {
            offset: 0,
            reason: format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(found)
            ),
        });
    }
    Ok(())
}

/// Writes a `QRNGBITS` file: 8-byte magic then MSB-first packed bits.
///
/// A final partial byte is zero-padded; readers see whole bytes only.
pub fn write_bitstream<W: Write>(mut w: W, bits: &BitString) -> Result<()> {
    let io = |e| Error::io("<bit stream>", e);
    w.write_all(BITS_MAGIC).map_err(io)?;
    w.write_all(&bits.to_msb_bytes()).map_err(io)?;
    Ok(())
}

pub fn parse_bitstream(buf: &[u8]) -> Result<BitString> {
    if buf.len() < BITS_MAGIC.len() {
        return Err(Error::Format {
            offset: buf.len() as u64,
            reason: "truncated header: need 8 bytes".into(),
        });
    }
    check_magic(&buf[..8], BITS_MAGIC)?;
    Ok(BitString::from_msb_bytes(&buf[8..]))
}

pub fn read_bitstream_file(path: &Path) -> Result<BitString> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_bitstream(&buf)
}

pub fn write_bitstream_file(path: &Path, bits: &BitString) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_bitstream(&mut w, bits)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_raw_file(path: &Path) -> Result<RawFile> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_raw(BufReader::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_raw_file(path: &Path, block: &RawSampleBlock) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_raw(&mut w, block)?;
    w.flush().map_err(|e| Error::io(path, e))
}
