//! Colored Gaussian noise by spectral shaping.
//!
//! Each block draws independent complex Gaussian bins scaled by the target
//! one-sided PSD, inverse-transforms, and keeps the leading part of the
//! block; the trailing guard samples are discarded so the circular wrap of
//! the inverse FFT never reaches the output. Blocks are generated in
//! parallel from `(seed, label, block index)` sub-streams, so the output
//! is independent of scheduling.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::seed;

const MAX_BLOCK: usize = 1 << 16;
const GUARD: usize = 512;

/// Generates `n` samples of a zero-mean stationary Gaussian process whose
/// one-sided PSD is `psd(f)` (units²/Hz) for `0 <= f <= fs/2`.
pub fn synthesize<F>(psd: F, n: usize, sample_rate_hz: f64, seed: u64, label: &str) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n == 0 {
        return Vec::new();
    }
    let block = (n + GUARD).next_power_of_two().min(MAX_BLOCK);
    let keep = block - GUARD;
    let blocks = n.div_ceil(keep);

    // Per-bin standard deviation: E|X_k|^2 = N fs S(f_k) / 2.
    let df = sample_rate_hz / block as f64;
    let scale: Vec<f64> = (0..=block / 2)
        .map(|k| (block as f64 * sample_rate_hz * psd(k as f64 * df).max(0.0) / 2.0).sqrt())
        .collect();

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(block);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng(seed, label, b as u64);
            let mut buf = vec![Complex64::new(0.0, 0.0); block];
            let half = block / 2;
            buf[0] = Complex64::new(scale[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
            for k in 1..half {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let v = Complex64::new(re, im) * (scale[k] * std::f64::consts::FRAC_1_SQRT_2);
                buf[k] = v;
                buf[block - k] = v.conj();
            }
            buf[half] = Complex64::new(scale[half] * rng.sample::<f64, _>(StandardNormal), 0.0);
            fft.process(&mut buf);
            let take = keep.min(n - b * keep);
            let inv = 1.0 / block as f64;
            buf[..take].iter().map(|c| c.re * inv).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend_from_slice(&p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
    }

    #[test]
    fn white_noise_variance() {
        let fs = 1e3;
        // flat one-sided PSD S over (0, fs/2] has variance S * fs / 2
        let x = synthesize(|_| 2.0, 400_000, fs, 11, "white");
        let v = variance(&x);
        assert!((v - 1000.0).abs() / 1000.0 < 0.01, "var {v}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = synthesize(|f| 1.0 / (1.0 + f), 70_000, 100.0, 3, "x");
        let b = synthesize(|f| 1.0 / (1.0 + f), 70_000, 100.0, 3, "x");
        let c = synthesize(|f| 1.0 / (1.0 + f), 70_000, 100.0, 4, "x");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 70_000);
    }

    #[test]
    fn short_request() {
        let x = synthesize(|_| 1.0, 3, 10.0, 1, "s");
        assert_eq!(x.len(), 3);
        assert!(synthesize(|_| 1.0, 0, 10.0, 1, "s").is_empty());
    }
}
