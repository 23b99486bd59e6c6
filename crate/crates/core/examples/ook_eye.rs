//! Eye diagram of the 4 Gb/s OOK link at 120 µA average photocurrent,
//! drawn as ASCII density.

use vacuum_qrng::duobinary::{eye_diagram, Link, LinkParams};
use vacuum_qrng::receiver::ReceiverParams;

fn main() -> vacuum_qrng::Result<()> {
    let p = LinkParams::ook_4g();
    let link = Link::new(&ReceiverParams::default(), &p, 1)?;
    let (wave, _) = link.waveform(4000, 2)?;
    let eye = eye_diagram(&wave, p.samples_per_symbol, 24)?;
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let max = eye.counts.iter().flatten().copied().max().unwrap_or(1) as f64;
    for row in eye.counts.iter().rev() {
        let line: String = row
            .iter()
            .map(|&c| shades[((c as f64 / max).sqrt() * 9.0).round() as usize])
            .collect();
        println!("|{line}|");
    }
    println!(
        "range {:.0}..{:.0} µA, opening {:.1} µA at phase {}/{}",
        eye.amplitude_min * 1e6,
        eye.amplitude_max * 1e6,
        eye.eye_opening * 1e6,
        eye.center_phase,
        2 * eye.samples_per_symbol
    );
    Ok(())
}
