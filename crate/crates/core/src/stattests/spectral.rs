//! Discrete Fourier transform (spectral) test.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::special::erfc;

/// Counts DFT peaks under the 95 % threshold `sqrt(ln(1/0.05)·n)` over the
/// first `n/2` bins, with the corrected variance `n·0.95·0.05/4`.
pub fn dft(eps: &[u8]) -> f64 {
    let n = eps.len();
    let mut buf: Vec<Complex64> = eps
        .iter()
        .map(|&b| Complex64::new(if b == 1 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let below = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let expected = 0.95 * nf / 2.0;
    let d = (below - expected) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    erfc(d.abs() / std::f64::consts::SQRT_2)
}
