//! The whole chain through the library API on a reduced configuration:
//! simulate → quantise → extract → test, written to a scratch directory.
//!
//! The battery runs on 10 sequences of 10⁶ bits here; the `vqrng` binary
//! with the default configuration runs the full 100.

use vacuum_qrng::pipeline::{run_stages, write_report, RunConfig, Stage, StageInputs};

fn main() -> vacuum_qrng::Result<()> {
    let mut cfg = RunConfig::with_seed(2024);
    cfg.out_dir = std::env::temp_dir().join("vqrng-example");
    cfg.suite.sequence_count = 10;
    let stages = [Stage::Simulate, Stage::Extract, Stage::Test];
    let report = run_stages(&cfg, &stages, &StageInputs::default())?;
    let path = write_report(&cfg, &report)?;

    let sim = report.clearance.as_ref().expect("simulate ran");
    let ex = report.extraction.as_ref().expect("extract ran");
    let suite = report.suite.as_ref().expect("test ran");
    println!("clearance {:.2} dB, variance ratio {:.2} dB", sim.integrated_clearance_db, sim.file_variance_ratio_db);
    println!(
        "H_min model {:.3} / MCV {:.3} bits per sample",
        ex.entropy.hmin_model_bits_per_sample,
        ex.entropy.hmin_mcv_bits_per_sample.unwrap_or(f64::NAN)
    );
    println!("{} -> {} bits", ex.stats.bits_in, ex.stats.bits_out);
    println!("{}: {}/{} slots", suite.verdict, suite.slots_passed, suite.slot_count);
    println!("report written to {}", path.display());
    Ok(())
}
