//! Common-mode rejection of the balanced photodiode pair.
//!
//! Prints the model CMRR at a few frequencies and writes the full curve
//! as `freq_hz,value_db,flag` CSV to stdout when `--csv` is given.

use vacuum_qrng::receiver::{cmrr_curve, write_curve_csv, ReceiverParams};

fn main() -> vacuum_qrng::Result<()> {
    let rx = ReceiverParams::default();
    let csv = std::env::args().any(|a| a == "--csv");
    let freqs: Vec<f64> = (1..=500).map(|k| k as f64 * 10e6).collect();
    let curve = cmrr_curve(&rx, &freqs)?;
    if csv {
        write_curve_csv(std::io::stdout().lock(), curve).map_err(|e| vacuum_qrng::Error::Io {
            path: "<stdout>".into(),
            source: e,
        })?;
        return Ok(());
    }
    println!(
        "imbalance {:.1e}, photodiode bandwidth {:.1} GHz, mismatch {:.4}",
        rx.imbalance_fraction,
        rx.pd_bandwidth_hz / 1e9,
        rx.pd_bandwidth_mismatch
    );
    for f_ghz in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0] {
        println!("  {f_ghz:>4.1} GHz: {:6.1} dB", rx.cmrr_db(f_ghz * 1e9));
    }
    Ok(())
}
