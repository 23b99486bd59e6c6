//! Shot-noise clearance of the homodyne receiver.
//!
//! Simulates 10⁷ dark and lit samples at 10 GS/s, estimates both spectra
//! with Welch's method and prints the clearance per band, the integrated
//! clearance over 3 GHz and its growth with LO power.
//!
//! ```text
//! cargo run --release --example clearance
//! ```

use vacuum_qrng::receiver::{clearance_spectrum, integrated_clearance_db, simulate_waveform, ReceiverParams, WaveformLabel};

fn main() -> vacuum_qrng::Result<()> {
    let fs = 10e9;
    let n = 10_000_000;
    let rx = ReceiverParams::default();
    let model = rx.model()?;

    let dark = simulate_waveform(&rx, WaveformLabel::Dark, n, fs, 1)?;
    let lit = simulate_waveform(&rx, WaveformLabel::Lit, n, fs, 2)?;
    let spec = clearance_spectrum(&lit, &dark, 4096)?;

    println!("LO {:.1} dBm, resolution {:.2} MHz", rx.lo_power_dbm, spec.resolution_bw_hz / 1e6);
    println!("{:>10} {:>12} {:>12}", "f (GHz)", "sim (dB)", "model (dB)");
    for f_ghz in [0.1, 0.5, 1.0, 2.0, 3.0, 4.0] {
        let k = spec
            .frequencies_hz
            .iter()
            .position(|&f| f >= f_ghz * 1e9)
            .unwrap_or(spec.len() - 1);
        // Average a few bins to tame the per-bin estimator variance.
        let lo = k.saturating_sub(4);
        let hi = (k + 5).min(spec.len());
        let avg = spec.clearance_db[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        println!("{f_ghz:>10.1} {avg:>12.2} {:>12.2}", model.clearance_db(f_ghz * 1e9));
    }
    println!(
        "integrated 0–3 GHz: simulated {:.2} dB, model {:.2} dB",
        integrated_clearance_db(&spec, 3e9)?,
        model.integrated_clearance_db(3e9)
    );
    println!(
        "var(lit)/var(dark): simulated {:.2} dB, model {:.2} dB",
        10.0 * (lit.variance() / dark.variance()).log10(),
        model.variance_ratio_db(fs / 2.0)
    );

    println!("\nLO sweep (model):");
    for dbm in [6.7, 8.7, 10.7, 12.7] {
        let m = rx.with_lo_power_dbm(dbm).model()?;
        println!("  {dbm:>5.1} dBm -> {:.2} dB", m.integrated_clearance_db(3e9));
    }
    Ok(())
}
