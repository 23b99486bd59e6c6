//! BER of the receiver reused as a 10 Gb/s duobinary link.
//!
//! Sweeps received power, prints the BER curve next to the 4 Gb/s OOK link
//! and interpolates the power at the 1e-3 FEC limit.

use vacuum_qrng::duobinary::{sensitivity_dbm, Link, LinkParams, FEC_LIMIT};
use vacuum_qrng::receiver::ReceiverParams;

fn main() -> vacuum_qrng::Result<()> {
    let rx = ReceiverParams::default();
    let powers: Vec<f64> = (-30..=-12).map(f64::from).collect();
    let db = Link::new(&rx, &LinkParams::duobinary_10g(), 1)?;
    let ook = Link::new(&rx, &LinkParams::ook_4g(), 1)?;
    println!(
        "noise {:.0} nA rms; duobinary delay {} samples, thresholds {:?}, noiseless margin {:.3}",
        db.noise_rms() * 1e9,
        db.receiver().delay_samples,
        db.receiver().thresholds,
        db.receiver().margin
    );
    let a = db.sweep(&powers, 300_000, 7)?;
    let b = ook.sweep(&powers, 300_000, 7)?;
    println!("{:>6} {:>12} {:>12}", "dBm", "duobinary", "OOK 4G");
    for (x, y) in a.iter().zip(&b) {
        println!("{:>6.1} {:>12.3e} {:>12.3e}", x.rx_power_dbm, x.ber, y.ber);
    }
    let show = |s: Option<f64>| s.map_or("not bracketed".into(), |v| format!("{v:.2} dBm"));
    println!("BER {FEC_LIMIT:.0e}: duobinary {}, OOK {}", show(sensitivity_dbm(&a, FEC_LIMIT)), show(sensitivity_dbm(&b, FEC_LIMIT)));
    Ok(())
}
