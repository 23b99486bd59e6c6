//! `vqrng`: command-line front end of the pipeline.
//!
//! Exit status: 0 success / PASS, 1 FAIL verdict, 2 usage or config error,
//! 3 I/O or file-format error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vacuum_qrng::pipeline::{self, RunConfig, RunReport, Stage, StageInputs};
use vacuum_qrng::Error;

#[derive(Parser, Debug)]
#[command(name = "vqrng", version, about = "Vacuum-noise QRNG pipeline: simulate, extract, test, duobinary, bench")]
struct Cli {
    /// TOML run configuration; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Toeplitz seed file (overrides `extractor.seed_file`).
    #[arg(long, global = true)]
    seed_file: Option<PathBuf>,
    /// Worker threads for extraction and the parallel stages.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Stage to run with `report`; repeatable (default: the config's `stages`).
    #[arg(long, global = true, value_parser = parse_stage)]
    stage: Vec<Stage>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate dark and lit captures; write sample files and clearance CSVs.
    Simulate,
    /// Extract a sample file (default: the lit capture) into a bit file.
    Extract { input: Option<PathBuf> },
    /// Run the statistical battery on a bit file (default: the extracted bits).
    Test { input: Option<PathBuf> },
    /// Sweep BER of the data links and write the eye histogram.
    Duobinary,
    /// Measure extractor throughput at the configured worker counts.
    Bench,
    /// Run the selected stages and write report.json.
    Report,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Verdict,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } => 3,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = &cli.seed_file {
        cfg.extractor.seed_file = Some(s.clone());
    }
    if let Some(w) = cli.workers {
        cfg.extractor.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(report: &RunReport) {
    if let Some(s) = &report.clearance {
        println!(
            "simulate: integrated clearance {:.2} dB over {:.1} GHz, file variance ratio {:.2} dB",
            s.integrated_clearance_db,
            s.clearance_band_hz / 1e9,
            s.file_variance_ratio_db
        );
    }
    if let Some(s) = &report.extraction {
        println!(
            "extract: {} bits in, {} bits out, {} discarded, {:.3} Gb/s ({}), {:.3e} AES-256 keys/s",
            s.stats.bits_in,
            s.stats.bits_out,
            s.stats.discarded_bits,
            s.stats.throughput_gbps,
            s.stats.kernel,
            s.aes256_keys_per_second
        );
    }
    if let Some(s) = &report.suite {
        println!(
            "test: {}/{} slots passed ({} applicable) over {} × {} bits",
            s.slots_passed, s.slot_count, s.slots_applicable, s.sequence_count, s.sequence_len
        );
        for f in &s.failed_slots {
            println!("  failed: {f}");
        }
        if s.slots_insufficient_length > 0 {
            println!("  {} slots had too few bits per sequence", s.slots_insufficient_length);
        }
    }
    if let Some(d) = &report.duobinary {
        for l in [&d.link, &d.eye_link] {
            let sens = l
                .sensitivity_dbm
                .map_or_else(|| "not bracketed".to_string(), |v| format!("{v:.2} dBm"));
            println!(
                "duobinary: {:?} {:.0} Gb/s, BER {:.0e} at {sens}",
                l.params.modulation,
                l.params.bitrate_bps / 1e9,
                d.target_ber
            );
        }
        println!("duobinary: eye opening {:.1} µA", d.eye_opening_a * 1e6);
    }
    if let Some(b) = &report.bench {
        for r in &b.runs {
            println!(
                "bench: {} worker(s) {:.3} Gb/s in, {:.3} Gb/s out, {:.3e} keys/s",
                r.workers, r.throughput_gbps, r.output_rate_gbps, r.aes256_keys_per_second
            );
        }
        println!(
            "bench: {:.0} Gb/s corresponds to {:.6e} keys/s",
            b.reference_rate_bps / 1e9,
            b.reference_keys_per_second
        );
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.extractor.workers)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut inputs = StageInputs::default();
    let (stages, write_report) = match &cli.command {
        Command::Simulate => (vec![Stage::Simulate], false),
        Command::Extract { input } => {
            inputs.extract_input = input.clone();
            (vec![Stage::Extract], false)
        }
        Command::Test { input } => {
            inputs.test_input = input.clone();
            (vec![Stage::Test], false)
        }
        Command::Duobinary => (vec![Stage::Duobinary], false),
        Command::Bench => (vec![Stage::Bench], false),
        Command::Report => {
            let stages = if cli.stage.is_empty() {
                cfg.stages.clone()
            } else {
                cli.stage.clone()
            };
            (stages, true)
        }
    };
    let report = pipeline::run_stages(&cfg, &stages, &inputs)?;
    summarize(&report);
    if write_report {
        let path = pipeline::write_report(&cfg, &report)?;
        println!("report: {}", path.display());
    }
    match report.suite_passed() {
        Some(true) => println!("PASS"),
        Some(false) => {
            println!("FAIL");
            return Err(Failure::Verdict);
        }
        None => {}
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("vqrng: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
