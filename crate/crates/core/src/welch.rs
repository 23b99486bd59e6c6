//! Welch-averaged one-sided PSD with a Hann window and 50% overlap.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WelchPsd {
    /// Bin frequencies `k * fs / N` for `k = 1..=N/2`.
    pub frequencies_hz: Vec<f64>,
    /// One-sided PSD in units²/Hz, aligned with `frequencies_hz`.
    pub psd: Vec<f64>,
    pub resolution_bw_hz: f64,
    pub segments: usize,
}

pub fn welch(x: &[f64], sample_rate_hz: f64, segment_len: usize) -> Result<WelchPsd> {
    if !segment_len.is_power_of_two() || segment_len < 4 {
        return Err(Error::param("segment_len", format!("{segment_len} is not a power of two >= 4")));
    }
    if segment_len > x.len() {
        return Err(Error::param(
            "segment_len",
            format!("{segment_len} exceeds block length {}", x.len()),
        ));
    }
    let n = segment_len;
    let step = n / 2;
    let window: Vec<f64> = (0..n)
        .map(|i| {
            let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
            s * s
        })
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);

    let mut acc = vec![0.0f64; n / 2 + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut segments = 0;
    let mut start = 0;
    while start + n <= x.len() {
        for (b, (v, w)) in buf.iter_mut().zip(x[start..start + n].iter().zip(&window)) {
            *b = Complex64::new(v * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let norm = 1.0 / (sample_rate_hz * wss * segments as f64);
    let df = sample_rate_hz / n as f64;
    let mut frequencies_hz = Vec::with_capacity(n / 2);
    let mut psd = Vec::with_capacity(n / 2);
    for (k, &a) in acc.iter().enumerate().skip(1) {
        let one_sided = if k == n / 2 { 1.0 } else { 2.0 };
        frequencies_hz.push(k as f64 * df);
        psd.push(a * norm * one_sided);
    }
    Ok(WelchPsd {
        frequencies_hz,
        psd,
        resolution_bw_hz: df,
        segments,
    })
}
