//! Min-entropy of the digitised source and the extractor output budget.

use serde::Serialize;

use crate::acquisition::{QuantizerConfig, RawSampleBlock};
use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// Minimum sample count accepted by [`min_entropy_mcv`].
pub const MCV_MIN_SAMPLES: usize = 100_000;

/// Upper-tail normal quantile for the 99% confidence bound.
const Z_99: f64 = 2.576;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub hmin_model_bits_per_sample: f64,
    pub hmin_mcv_bits_per_sample: Option<f64>,
    pub assumed_bound_bits_per_bit: f64,
    pub epsilon_security: f64,
    pub n_input_bits: usize,
    pub m_output_bits: usize,
    /// Model min-entropy and clip probability against the loading factor.
    pub loading_sensitivity: Vec<LoadingPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadingPoint {
    pub full_scale_sigma: f64,
    pub hmin_bits_per_sample: f64,
    pub clip_probability: f64,
}

/// Probability of each code for a zero-mean Gaussian input of rms `sigma`.
///
/// The outermost codes absorb the clipped tails.
pub fn gaussian_code_probabilities(sigma: f64, config: &QuantizerConfig) -> Vec<f64> {
    let levels = config.levels() as usize;
    let fs = config.full_scale();
    let step = config.step();
    (0..levels)
        .map(|c| {
            let lo = if c == 0 { f64::NEG_INFINITY } else { c as f64 * step - fs };
            let hi = if c == levels - 1 {
                f64::INFINITY
            } else {
                (c + 1) as f64 * step - fs
            };
            // Evaluate in the tail that keeps the subtraction well conditioned.
            if lo >= 0.0 {
                normal_cdf(-lo / sigma) - normal_cdf(-hi / sigma)
            } else {
                normal_cdf(hi / sigma) - normal_cdf(lo / sigma)
            }
        })
        .collect()
}

/// `-log2(max p)` of a discrete distribution.
pub fn min_entropy_of(probabilities: &[f64]) -> f64 {
    let pmax = probabilities.iter().copied().fold(0.0, f64::max);
    if pmax >= 1.0 {
        0.0
    } else {
        -pmax.log2()
    }
}

/// Model min-entropy per sample for a Gaussian source of rms `sigma`.
pub fn min_entropy_gaussian(sigma: f64, config: &QuantizerConfig) -> Result<f64> {
    config.validate()?;
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::param("sigma", format!("must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(min_entropy_of(&gaussian_code_probabilities(sigma, config)))
}

/// Most-common-value estimate with a 99% upper confidence bound on `p`.
pub fn min_entropy_mcv(block: &RawSampleBlock) -> Result<f64> {
    mcv_from_histogram(&block.histogram(), block.len())
}

pub fn mcv_from_histogram(histogram: &[u64], n: usize) -> Result<f64> {
    if n < MCV_MIN_SAMPLES {
        return Err(Error::InsufficientData {
            what: "most-common-value estimate".into(),
            required: MCV_MIN_SAMPLES,
            actual: n,
        });
    }
    let max = histogram.iter().copied().max().unwrap_or(0) as f64;
    let n = n as f64;
    let p = max / n;
    let pu = (p + Z_99 * (p * (1.0 - p) / n).sqrt()).min(1.0);
    Ok(if pu >= 1.0 { 0.0 } else { -pu.log2() })
}

/// Leftover-hash output length `floor(n·h - 2·log2(1/ε))`, clamped to `[0, n]`.
pub fn extraction_budget(n_input_bits: usize, hmin_bits_per_bit: f64, epsilon: f64) -> Result<usize> {
    if n_input_bits == 0 {
        return Err(Error::param("n_input_bits", "must be at least 1"));
    }
    if !(hmin_bits_per_bit > 0.0 && hmin_bits_per_bit <= 1.0) {
        return Err(Error::param("hmin_bits_per_bit", "must lie in (0, 1]"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param("epsilon", "must lie in (0, 1]"));
    }
    let m = (n_input_bits as f64 * hmin_bits_per_bit - 2.0 * (1.0 / epsilon).log2()).floor();
    Ok(if m <= 0.0 { 0 } else { (m as usize).min(n_input_bits) })
}

/// Number of 256-bit keys per second supported by `bits_per_second`.
pub fn aes256_keys_per_second(bits_per_second: f64) -> f64 {
    bits_per_second / 256.0
}

/// Model min-entropy and clip probability for each loading factor in `ks`.
pub fn loading_sensitivity(sigma: f64, config: &QuantizerConfig, ks: &[f64]) -> Result<Vec<LoadingPoint>> {
    ks.iter()
        .map(|&k| {
            let c = QuantizerConfig {
                full_scale_sigma: k,
                ..*config
            };
            Ok(LoadingPoint {
                full_scale_sigma: k,
                hmin_bits_per_sample: min_entropy_gaussian(sigma, &c)?,
                clip_probability: 2.0 * normal_cdf(-c.full_scale() / sigma),
            })
        })
        .collect()
}
