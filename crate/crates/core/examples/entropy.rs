//! Quantisation and min-entropy of the lit capture.
//!
//! Digitises a simulated lit waveform with the 8-bit mid-riser quantiser
//! (full scale ±4σ), compares the most-common-value estimate with the
//! Gaussian model, and derives the Toeplitz output block from the
//! 1/4-bit-per-bit policy bound.

use vacuum_qrng::acquisition::{quantize, QuantizerConfig};
use vacuum_qrng::entropy::{aes256_keys_per_second, extraction_budget, loading_sensitivity, min_entropy_gaussian, min_entropy_mcv};
use vacuum_qrng::receiver::{simulate_waveform, ReceiverParams, WaveformLabel};

fn main() -> vacuum_qrng::Result<()> {
    let fs = 10e9;
    let rx = ReceiverParams::default();
    let sigma = rx.model()?.variance(WaveformLabel::Lit, fs / 2.0).sqrt() * rx.transimpedance_ohm;
    let q = QuantizerConfig {
        sigma_ref: sigma,
        ..QuantizerConfig::default()
    };
    let wave = simulate_waveform(&rx, WaveformLabel::Lit, 2_000_000, fs, 3)?;
    let block = quantize(&wave, &q)?;

    println!("sigma_ref {:.3} mV, step {:.3} mV", sigma * 1e3, q.step() * 1e3);
    println!("clipped {} of {} samples", block.clip_count(), block.len());
    println!("H_min model {:.3} bits/sample", min_entropy_gaussian(sigma, &q)?);
    println!("H_min MCV   {:.3} bits/sample", min_entropy_mcv(&block)?);

    let m = extraction_budget(4096, 0.25, 2f64.powi(-100))?;
    println!("Toeplitz block: n = 4096, m = {m} (ratio {:.4})", m as f64 / 4096.0);
    println!("80 Gb/s raw -> {:.2} Gb/s out", 80.0 * m as f64 / 4096.0);
    println!("20 Gb/s -> {:.4e} AES-256 keys/s", aes256_keys_per_second(20e9));

    println!("\nloading factor sensitivity:");
    for p in loading_sensitivity(sigma, &q, &[3.0, 3.5, 4.0, 4.5, 5.0, 6.0])? {
        println!(
            "  k = {:.1}: H_min {:.3} bits, clip probability {:.2e}",
            p.full_scale_sigma, p.hmin_bits_per_sample, p.clip_probability
        );
    }
    Ok(())
}
