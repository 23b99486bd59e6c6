//! Run configuration, stage drivers and the run report behind `vqrng`.
//!
//! A run is described by one TOML file ([`RunConfig`]). Each stage reads
//! only files it declares, writes its artifacts into the output directory
//! and returns a serialisable section; [`run_stages`] executes a selection
//! of stages in order and [`write_report`] assembles the sections, the full
//! configuration echo and the timings into `report.json`.
//!
//! Every random draw comes from the master seed through labeled derivation
//! ([`crate::seed`]), so every artifact except the timing fields is a pure
//! function of the configuration.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, QuantizerConfig, RawSampleBlock};
use crate::bits::BitString;
use crate::duobinary::{self, BerPoint, Link, LinkParams};
use crate::entropy::{self, EntropyReport};
use crate::error::{Error, Result};
use crate::extractor::{self, ExtractStats, ExtractorConfig, SeedSource, ToeplitzSeed};
use crate::receiver::{self, ReceiverParams, WaveformLabel};
use crate::seed;
use crate::stattests::{SuiteReport, TestCatalog, TestParams};

/// Identifies the layout of `report.json` and the stage section files.
pub const REPORT_SCHEMA: &str = "vqrng-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DARK_RAW: &str = "dark.qraw";
pub const LIT_RAW: &str = "lit.qraw";
pub const CLEARANCE_CSV: &str = "clearance.csv";
pub const CMRR_CSV: &str = "cmrr.csv";
pub const SEED_FILE: &str = "toeplitz_seed.bin";
pub const EXTRACTED_BITS: &str = "extracted.qbits";
pub const SUITE_JSON: &str = "suite_report.json";
pub const BER_CSV: &str = "ber.csv";
pub const OOK_BER_CSV: &str = "ook_ber.csv";
pub const EYE_CSV: &str = "eye.csv";
pub const REPORT_JSON: &str = "report.json";

/// Keys whose values depend on wall-clock time rather than on the config.
pub const TIMING_KEYS: &[&str] = &[
    "wall_time_s",
    "throughput_gbps",
    "output_rate_gbps",
    "aes256_keys_per_second",
    "scaling",
    "timings",
];

/// Samples generated per synthesis call when simulating long captures.
const SIM_CHUNK: usize = 1 << 24;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Simulate,
    Extract,
    Test,
    Duobinary,
    Bench,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Simulate, Stage::Extract, Stage::Test, Stage::Duobinary, Stage::Bench];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Extract => "extract",
            Stage::Test => "test",
            Stage::Duobinary => "duobinary",
            Stage::Bench => "bench",
        }
    }

    /// Section file written by the stage.
    pub fn section_file(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate.json",
            Stage::Extract => "extract.json",
            Stage::Test => SUITE_JSON,
            Stage::Duobinary => "duobinary.json",
            Stage::Bench => "bench.json",
        }
    }

    fn needs_seed(self) -> bool {
        !matches!(self, Stage::Test)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}` (expected simulate|extract|test|duobinary|bench)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    pub sample_rate_hz: f64,
    /// Lit capture length; when absent it is sized so extraction yields
    /// exactly enough bits for the configured suite.
    pub lit_samples: Option<usize>,
    pub dark_samples: usize,
    /// Leading lit samples (and all dark samples) used for the spectrum.
    pub clearance_samples: usize,
    pub welch_segment: usize,
    pub clearance_band_hz: f64,
    /// Upper edge of the flat region checked for the minimum clearance.
    pub flat_band_hz: f64,
    pub cmrr_max_hz: f64,
    pub cmrr_step_hz: f64,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        SimulateSettings {
            sample_rate_hz: 10e9,
            lit_samples: None,
            dark_samples: 10_000_000,
            clearance_samples: 10_000_000,
            welch_segment: 4096,
            clearance_band_hz: 3e9,
            flat_band_hz: 1e9,
            cmrr_max_hz: 5e9,
            cmrr_step_hz: 10e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerSettings {
    pub bits: u32,
    pub full_scale_sigma: f64,
    /// Reference rms in volts; when absent, the model's lit rms over the
    /// simulated band at the configured LO power.
    pub sigma_ref: Option<f64>,
}

impl Default for QuantizerSettings {
    fn default() -> Self {
        let q = QuantizerConfig::default();
        QuantizerSettings {
            bits: q.bits,
            full_scale_sigma: q.full_scale_sigma,
            sigma_ref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropySettings {
    /// Policy min-entropy per raw bit used for the extraction ratio.
    pub assumed_bound_bits_per_bit: f64,
    pub epsilon_security: f64,
    /// Loading factors for the sensitivity table.
    pub loading_factors: Vec<f64>,
}

impl Default for EntropySettings {
    fn default() -> Self {
        EntropySettings {
            assumed_bound_bits_per_bit: 0.25,
            epsilon_security: 2f64.powi(-100),
            loading_factors: vec![3.0, 3.5, 4.0, 4.5, 5.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSettings {
    pub n: usize,
    /// Output block; when absent, the leftover-hash budget for `n`.
    pub m: Option<usize>,
    /// Public seed file; when absent a seed is derived from the master seed
    /// and written next to the output.
    pub seed_file: Option<PathBuf>,
    pub workers: usize,
}

impl Default for ExtractorSettings {
    fn default() -> Self {
        ExtractorSettings {
            n: 4096,
            m: None,
            seed_file: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSettings {
    pub sequence_len: usize,
    pub sequence_count: usize,
    pub alpha: f64,
    pub params: TestParams,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            sequence_len: 1_000_000,
            sequence_count: 100,
            alpha: 0.01,
            params: TestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DuobinarySettings {
    /// The data link whose BER is swept.
    pub link: LinkParams,
    /// The OOK link swept alongside and used for the eye diagram.
    pub eye_link: LinkParams,
    pub powers_dbm: Vec<f64>,
    pub bits_per_point: usize,
    pub eye_symbols: usize,
    pub eye_bins: usize,
    pub target_ber: f64,
}

impl Default for DuobinarySettings {
    fn default() -> Self {
        DuobinarySettings {
            link: LinkParams::duobinary_10g(),
            eye_link: LinkParams::ook_4g(),
            powers_dbm: (-30..=-8).map(f64::from).collect(),
            bits_per_point: 1_000_000,
            eye_symbols: 4000,
            eye_bins: 64,
            target_ber: duobinary::FEC_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub input_bytes: usize,
    pub workers: Vec<usize>,
    /// Output rate the key-rate arithmetic is also reported at.
    pub reference_rate_bps: f64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            input_bytes: 1 << 30,
            workers: vec![1, 2, 4],
            reference_rate_bps: 20e9,
        }
    }
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; required by every stage that draws random numbers.
    #[serde(default)]
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub stages: Vec<Stage>,
    pub receiver: ReceiverParams,
    pub simulate: SimulateSettings,
    pub quantizer: QuantizerSettings,
    pub entropy: EntropySettings,
    pub extractor: ExtractorSettings,
    pub suite: SuiteSettings,
    pub duobinary: DuobinarySettings,
    pub bench: BenchSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            out_dir: PathBuf::from("vqrng-out"),
            stages: vec![Stage::Simulate, Stage::Extract, Stage::Test, Stage::Duobinary],
            receiver: ReceiverParams::default(),
            simulate: SimulateSettings::default(),
            quantizer: QuantizerSettings::default(),
            entropy: EntropySettings::default(),
            extractor: ExtractorSettings::default(),
            suite: SuiteSettings::default(),
            duobinary: DuobinarySettings::default(),
            bench: BenchSettings::default(),
        }
    }
}

impl RunConfig {
    /// Defaults with a master seed set.
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed: Some(seed),
            ..RunConfig::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml_str(&s).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every sub-configuration.
    pub fn validate(&self) -> Result<()> {
        self.receiver.validate()?;
        self.quantizer_config(1.0)?.validate()?;
        if let Some(s) = self.quantizer.sigma_ref {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("quantizer.sigma_ref", "must be positive"));
            }
        }
        let sim = &self.simulate;
        if !(sim.sample_rate_hz >= 2.0 * self.receiver.model_band_hz) {
            return Err(Error::SampleRateTooLow {
                sample_rate_hz: sim.sample_rate_hz,
                band_hz: self.receiver.model_band_hz,
            });
        }
        if sim.dark_samples == 0 || sim.clearance_samples == 0 || sim.lit_samples == Some(0) {
            return Err(Error::param("simulate", "sample counts must be positive"));
        }
        if sim.welch_segment < 16 || sim.clearance_samples.min(sim.dark_samples) < sim.welch_segment {
            return Err(Error::param("simulate.welch_segment", "must be ≥ 16 and fit in both captures"));
        }
        if !(sim.clearance_band_hz > 0.0 && sim.clearance_band_hz <= sim.sample_rate_hz / 2.0) {
            return Err(Error::param("simulate.clearance_band_hz", "must lie in (0, fs/2]"));
        }
        if !(sim.cmrr_step_hz > 0.0 && sim.cmrr_max_hz >= sim.cmrr_step_hz) {
            return Err(Error::param("simulate.cmrr_step_hz", "must be positive and below cmrr_max_hz"));
        }
        let e = &self.entropy;
        if !(e.assumed_bound_bits_per_bit > 0.0 && e.assumed_bound_bits_per_bit <= 1.0) {
            return Err(Error::param("entropy.assumed_bound_bits_per_bit", "must lie in (0, 1]"));
        }
        if !(e.epsilon_security > 0.0 && e.epsilon_security < 1.0) {
            return Err(Error::param("entropy.epsilon_security", "must lie in (0, 1)"));
        }
        self.extractor_config()?.validate()?;
        self.suite.params.validate()?;
        if self.suite.sequence_len == 0 || self.suite.sequence_count == 0 {
            return Err(Error::param("suite", "sequence_len and sequence_count must be positive"));
        }
        if !(self.suite.alpha > 0.0 && self.suite.alpha < 1.0) {
            return Err(Error::param("suite.alpha", "must lie in (0, 1)"));
        }
        let d = &self.duobinary;
        d.link.validate()?;
        d.eye_link.validate()?;
        if d.powers_dbm.is_empty() || d.powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("duobinary.powers_dbm", "must be a non-empty list of finite powers"));
        }
        if d.eye_bins == 0 {
            return Err(Error::param("duobinary.eye_bins", "must be positive"));
        }
        if !(d.target_ber > 0.0 && d.target_ber < 0.5) {
            return Err(Error::param("duobinary.target_ber", "must lie in (0, 0.5)"));
        }
        if self.bench.workers.is_empty() || self.bench.workers.contains(&0) {
            return Err(Error::param("bench.workers", "must list positive worker counts"));
        }
        Ok(())
    }

    /// The master seed, or a config error naming the stage that needs it.
    pub fn master_seed(&self, stage: Stage) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config(format!("stage `{stage}` needs a master `seed` in the config")))
    }

    /// Output block length: explicit, or the leftover-hash budget.
    pub fn output_block(&self) -> Result<usize> {
        match self.extractor.m {
            Some(m) => Ok(m),
            None => entropy::extraction_budget(
                self.extractor.n,
                self.entropy.assumed_bound_bits_per_bit,
                self.entropy.epsilon_security,
            ),
        }
    }

    pub fn extractor_config(&self) -> Result<ExtractorConfig> {
        let seed_source = match &self.extractor.seed_file {
            Some(p) => SeedSource::File(p.clone()),
            None => SeedSource::Generated(seed::derive(self.seed.unwrap_or(0), "toeplitz-seed", 0)),
        };
        Ok(ExtractorConfig {
            n: self.extractor.n,
            m: self.output_block()?,
            seed_source,
            worker_count: self.extractor.workers,
        })
    }

    /// Reference rms of the lit waveform over the simulated band, volts.
    pub fn model_sigma_ref(&self) -> Result<f64> {
        let model = self.receiver.model()?;
        let var = model.variance(WaveformLabel::Lit, self.simulate.sample_rate_hz / 2.0);
        Ok(var.sqrt() * self.receiver.transimpedance_ohm)
    }

    pub fn quantizer_config(&self, model_sigma_ref: f64) -> Result<QuantizerConfig> {
        let q = QuantizerConfig {
            bits: self.quantizer.bits,
            full_scale_sigma: self.quantizer.full_scale_sigma,
            sigma_ref: self.quantizer.sigma_ref.unwrap_or(model_sigma_ref),
        };
        q.validate()?;
        if q.bits > 8 {
            return Err(Error::param("quantizer.bits", "raw sample files hold at most 8 bits per code"));
        }
        Ok(q)
    }

    /// Lit samples needed for the suite, unless set explicitly.
    pub fn lit_samples(&self) -> Result<usize> {
        if let Some(n) = self.simulate.lit_samples {
            return Ok(n);
        }
        let (n, m) = (self.extractor.n, self.output_block()?);
        if m == 0 {
            return Err(Error::param("extractor.m", "extraction budget is zero"));
        }
        let needed = self.suite.sequence_len * self.suite.sequence_count;
        let input_bits = needed.div_ceil(m) * n;
        Ok(input_bits.div_ceil(self.quantizer.bits as usize))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

/// Removes every [`TIMING_KEYS`] entry, at any depth, from a report value.
pub fn strip_timings(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !TIMING_KEYS.contains(&k.as_str()));
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureSummary {
    pub file: String,
    pub samples: usize,
    pub clip_count: usize,
    /// Sample variance of the codes, in LSB².
    pub code_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSection {
    pub sample_rate_hz: f64,
    pub lo_power_dbm: f64,
    pub quantizer: QuantizerConfig,
    pub dark: CaptureSummary,
    pub lit: CaptureSummary,
    /// `var(lit) / var(dark)` of the two sample files, dB.
    pub file_variance_ratio_db: f64,
    pub model_variance_ratio_db: f64,
    pub clearance_band_hz: f64,
    /// Band-integrated clearance estimated from the simulated waveforms.
    pub integrated_clearance_db: f64,
    pub model_integrated_clearance_db: f64,
    /// Lowest estimated clearance over `(0, flat_band_hz)`.
    pub min_flat_band_clearance_db: f64,
    pub welch_resolution_hz: f64,
    pub model_cmrr_db_at_1ghz: f64,
    pub model_cmrr_db_at_2ghz: f64,
}

fn code_variance(codes: &[u16]) -> f64 {
    let n = codes.len() as f64;
    let mean = codes.iter().map(|&c| c as f64).sum::<f64>() / n;
    codes.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Simulates and quantises a capture in chunks; returns the codes and the
/// analog samples of the leading `keep_analog` samples.
fn simulate_capture(
    cfg: &RunConfig,
    q: &QuantizerConfig,
    label: WaveformLabel,
    n: usize,
    keep_analog: usize,
) -> Result<(RawSampleBlock, Vec<f64>)> {
    let master = cfg.master_seed(Stage::Simulate)?;
    let fs = cfg.simulate.sample_rate_hz;
    let mut codes = Vec::with_capacity(n);
    let mut clips = 0;
    let mut analog = Vec::with_capacity(keep_analog.min(n));
    let mut start = 0;
    let mut chunk = 0u64;
    while start < n {
        let len = SIM_CHUNK.min(n - start);
        let s = seed::derive(master, label.as_str(), chunk);
        let wave = receiver::simulate_waveform(&cfg.receiver, label, len, fs, s)?;
        let block = acquisition::quantize(&wave, q)?;
        clips += block.clip_count();
        codes.extend_from_slice(block.codes());
        if analog.len() < keep_analog {
            let take = (keep_analog - analog.len()).min(len);
            analog.extend_from_slice(&wave.samples()[..take]);
        }
        start += len;
        chunk += 1;
    }
    Ok((RawSampleBlock::new(codes, *q, clips)?, analog))
}

/// Simulates the dark and lit captures, writes both sample files, the
/// estimated clearance spectrum and the model CMRR curve.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateSection> {
    create_out_dir(&cfg.out_dir)?;
    let sim = &cfg.simulate;
    let fs = sim.sample_rate_hz;
    let q = cfg.quantizer_config(cfg.model_sigma_ref()?)?;
    let lit_n = cfg.lit_samples()?;

    let (dark, dark_wave) = simulate_capture(cfg, &q, WaveformLabel::Dark, sim.dark_samples, sim.clearance_samples)?;
    acquisition::write_raw_file(&cfg.path(DARK_RAW), &dark)?;
    let (lit, lit_wave) = simulate_capture(cfg, &q, WaveformLabel::Lit, lit_n, sim.clearance_samples)?;
    acquisition::write_raw_file(&cfg.path(LIT_RAW), &lit)?;

    let lit_wave = receiver::WaveformBlock::new(lit_wave, fs, WaveformLabel::Lit)?;
    let dark_wave = receiver::WaveformBlock::new(dark_wave, fs, WaveformLabel::Dark)?;
    let spectrum = receiver::clearance_spectrum(&lit_wave, &dark_wave, sim.welch_segment)?;
    write_with(&cfg.path(CLEARANCE_CSV), |w| receiver::write_curve_csv(w, spectrum.rows()))?;
    let integrated = receiver::integrated_clearance_db(&spectrum, sim.clearance_band_hz)?;
    let min_flat = spectrum
        .frequencies_hz
        .iter()
        .zip(&spectrum.clearance_db)
        .filter(|(&f, _)| f > 0.0 && f < sim.flat_band_hz)
        .map(|(_, &c)| c)
        .fold(f64::INFINITY, f64::min);

    let steps = (sim.cmrr_max_hz / sim.cmrr_step_hz).floor() as usize;
    let freqs: Vec<f64> = (1..=steps).map(|k| k as f64 * sim.cmrr_step_hz).collect();
    let cmrr = receiver::cmrr_curve(&cfg.receiver, &freqs)?;
    write_with(&cfg.path(CMRR_CSV), |w| receiver::write_curve_csv(w, cmrr))?;

    let model = cfg.receiver.model()?;
    let (vd, vl) = (code_variance(dark.codes()), code_variance(lit.codes()));
    Ok(SimulateSection {
        sample_rate_hz: fs,
        lo_power_dbm: cfg.receiver.lo_power_dbm,
        quantizer: q,
        dark: CaptureSummary {
            file: DARK_RAW.into(),
            samples: dark.len(),
            clip_count: dark.clip_count(),
            code_variance: vd,
        },
        lit: CaptureSummary {
            file: LIT_RAW.into(),
            samples: lit.len(),
            clip_count: lit.clip_count(),
            code_variance: vl,
        },
        file_variance_ratio_db: 10.0 * (vl / vd).log10(),
        model_variance_ratio_db: model.variance_ratio_db(fs / 2.0),
        clearance_band_hz: sim.clearance_band_hz,
        integrated_clearance_db: integrated,
        model_integrated_clearance_db: model.integrated_clearance_db(sim.clearance_band_hz),
        min_flat_band_clearance_db: min_flat,
        welch_resolution_hz: spectrum.resolution_bw_hz,
        model_cmrr_db_at_1ghz: cfg.receiver.cmrr_db(1e9),
        model_cmrr_db_at_2ghz: cfg.receiver.cmrr_db(2e9),
    })
}

// ----------------------------------------------------------------- extract

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractSection {
    pub input: String,
    pub output: String,
    pub seed_file: String,
    pub n: usize,
    pub m: usize,
    pub stats: ExtractStats,
    /// Output bits per second of wall time, Gb/s.
    pub output_rate_gbps: f64,
    /// 256-bit keys per second at the measured output rate.
    pub aes256_keys_per_second: f64,
    pub entropy: EntropyReport,
}

fn raw_to_bits(raw: &acquisition::RawFile) -> Result<(RawSampleBlock, BitString)> {
    let q = QuantizerConfig {
        bits: raw.bits,
        ..QuantizerConfig::default()
    };
    let block = RawSampleBlock::new(raw.codes.iter().map(|&c| c as u16).collect(), q, 0)?;
    let bits = if raw.bits == 8 {
        BitString::from_msb_bytes(&raw.codes)
    } else {
        acquisition::pack_bits(&block)
    };
    Ok((block, bits))
}

/// Extracts `input` (default: the lit sample file) into `extracted.qbits`.
///
/// The Toeplitz seed comes from `extractor.seed_file` when set; otherwise it
/// is derived from the master seed and published as `toeplitz_seed.bin`.
pub fn run_extract(cfg: &RunConfig, input: Option<&Path>) -> Result<ExtractSection> {
    create_out_dir(&cfg.out_dir)?;
    let in_path = input.map(Path::to_path_buf).unwrap_or_else(|| cfg.path(LIT_RAW));
    let raw = acquisition::read_raw_file(&in_path)?;
    let (block, bits) = raw_to_bits(&raw)?;

    let ex = cfg.extractor_config()?;
    let seed_path = match &ex.seed_source {
        SeedSource::File(p) => p.clone(),
        SeedSource::Generated(_) => {
            cfg.master_seed(Stage::Extract)?;
            cfg.path(SEED_FILE)
        }
    };
    let toeplitz = ex.load_seed()?;
    if matches!(ex.seed_source, SeedSource::Generated(_)) {
        toeplitz.write_file(&seed_path)?;
    }
    let (out, stats) = extractor::extract_stream(&ex, &toeplitz, &bits)?;
    acquisition::write_bitstream_file(&cfg.path(EXTRACTED_BITS), &out)?;

    let sigma = cfg.model_sigma_ref()?;
    let q = cfg.quantizer_config(sigma)?;
    let entropy = EntropyReport {
        hmin_model_bits_per_sample: entropy::min_entropy_gaussian(q.sigma_ref, &q)?,
        hmin_mcv_bits_per_sample: if block.len() >= entropy::MCV_MIN_SAMPLES {
            Some(entropy::min_entropy_mcv(&block)?)
        } else {
            None
        },
        assumed_bound_bits_per_bit: cfg.entropy.assumed_bound_bits_per_bit,
        epsilon_security: cfg.entropy.epsilon_security,
        n_input_bits: ex.n,
        m_output_bits: ex.m,
        loading_sensitivity: entropy::loading_sensitivity(q.sigma_ref, &q, &cfg.entropy.loading_factors)?,
    };
    let output_rate_gbps = if stats.wall_time_s > 0.0 {
        stats.bits_out as f64 / stats.wall_time_s / 1e9
    } else {
        0.0
    };
    Ok(ExtractSection {
        input: in_path.display().to_string(),
        output: EXTRACTED_BITS.into(),
        seed_file: seed_path.display().to_string(),
        n: ex.n,
        m: ex.m,
        stats,
        output_rate_gbps,
        aes256_keys_per_second: entropy::aes256_keys_per_second(output_rate_gbps * 1e9),
        entropy,
    })
}

// -------------------------------------------------------------------- test

/// Runs the battery on `input` (default: the extracted bit file) and writes
/// the full per-slot report.
pub fn run_test(cfg: &RunConfig, input: Option<&Path>) -> Result<SuiteReport> {
    create_out_dir(&cfg.out_dir)?;
    let in_path = input.map(Path::to_path_buf).unwrap_or_else(|| cfg.path(EXTRACTED_BITS));
    let bits = acquisition::read_bitstream_file(&in_path)?;
    let s = &cfg.suite;
    let catalog = TestCatalog::new(s.params.clone())?;
    let report = crate::stattests::run_suite_with(&catalog, &bits, s.sequence_len, s.sequence_count, s.alpha)?;
    write_json(&cfg.path(SUITE_JSON), &report)?;
    Ok(report)
}

/// Compact view of a [`SuiteReport`] for the run report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub verdict: &'static str,
    pub report_file: String,
    pub sequence_len: usize,
    pub sequence_count: usize,
    pub alpha: f64,
    pub slot_count: usize,
    pub slots_applicable: usize,
    pub slots_passed: usize,
    pub slots_insufficient_length: usize,
    pub failed_slots: Vec<String>,
}

impl SuiteSummary {
    pub fn of(report: &SuiteReport) -> Self {
        SuiteSummary {
            verdict: report.verdict(),
            report_file: SUITE_JSON.into(),
            sequence_len: report.sequence_len,
            sequence_count: report.sequence_count,
            alpha: report.alpha,
            slot_count: report.slot_count,
            slots_applicable: report.slots_applicable,
            slots_passed: report.slots_passed,
            slots_insufficient_length: report.slots_insufficient_length,
            failed_slots: report.failures().map(|s| s.slot_name.clone()).collect(),
        }
    }
}

// --------------------------------------------------------------- duobinary

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSummary {
    pub params: LinkParams,
    pub noise_rms_a: f64,
    pub delay_samples: usize,
    pub thresholds: Vec<f64>,
    /// Noiseless decision margin as a fraction of the high level.
    pub noiseless_margin: f64,
    /// Errors over `bits_per_point` bits with the noise switched off.
    pub noiseless_errors: u64,
    pub points: Vec<BerPoint>,
    pub sensitivity_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuobinarySection {
    pub target_ber: f64,
    pub link: LinkSummary,
    pub eye_link: LinkSummary,
    pub eye_opening_a: f64,
    pub eye_center_phase: usize,
    pub ber_csv: String,
    pub ook_ber_csv: String,
    pub eye_csv: String,
}

fn sweep_link(cfg: &RunConfig, params: &LinkParams, label: &str, master: u64) -> Result<(Link, LinkSummary)> {
    let d = &cfg.duobinary;
    let link = Link::new(&cfg.receiver, params, seed::derive(master, label, 0))?;
    let points = link.sweep(&d.powers_dbm, d.bits_per_point, seed::derive(master, label, 1))?;
    let quiet = LinkParams {
        noise_enabled: false,
        ..params.clone()
    };
    let noiseless = Link::new(&cfg.receiver, &quiet, seed::derive(master, label, 0))?.simulate(
        params.rx_power_dbm,
        d.bits_per_point,
        seed::derive(master, label, 2),
    )?;
    let rx = link.receiver();
    let summary = LinkSummary {
        params: params.clone(),
        noise_rms_a: link.noise_rms(),
        delay_samples: rx.delay_samples,
        thresholds: rx.thresholds.clone(),
        noiseless_margin: rx.margin,
        noiseless_errors: noiseless.errors_counted,
        sensitivity_dbm: duobinary::sensitivity_dbm(&points, d.target_ber),
        points,
    };
    Ok((link, summary))
}

/// Sweeps BER against received power for both links and writes the eye
/// histogram of the OOK link at its configured power.
pub fn run_duobinary(cfg: &RunConfig) -> Result<DuobinarySection> {
    create_out_dir(&cfg.out_dir)?;
    let master = cfg.master_seed(Stage::Duobinary)?;
    let d = &cfg.duobinary;
    let (_, link) = sweep_link(cfg, &d.link, "duobinary-link", master)?;
    let (eye_link_model, eye_link) = sweep_link(cfg, &d.eye_link, "eye-link", master)?;
    write_with(&cfg.path(BER_CSV), |w| duobinary::write_ber_csv(w, &link.points))?;
    write_with(&cfg.path(OOK_BER_CSV), |w| duobinary::write_ber_csv(w, &eye_link.points))?;

    let (wave, _) = eye_link_model.waveform(d.eye_symbols, seed::derive(master, "eye", 0))?;
    let eye = duobinary::eye_diagram(&wave, d.eye_link.samples_per_symbol, d.eye_bins)?;
    write_with(&cfg.path(EYE_CSV), |w| duobinary::write_eye_csv(w, &eye))?;
    Ok(DuobinarySection {
        target_ber: d.target_ber,
        link,
        eye_link,
        eye_opening_a: eye.eye_opening,
        eye_center_phase: eye.center_phase,
        ber_csv: BER_CSV.into(),
        ook_ber_csv: OOK_BER_CSV.into(),
        eye_csv: EYE_CSV.into(),
    })
}

// ------------------------------------------------------------------- bench

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub workers: usize,
    pub wall_time_s: f64,
    /// Input bits hashed per second, Gb/s.
    pub throughput_gbps: f64,
    pub output_rate_gbps: f64,
    pub aes256_keys_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSection {
    pub kernel: String,
    pub n: usize,
    pub m: usize,
    pub input_bits: usize,
    pub output_bits: usize,
    pub available_parallelism: usize,
    pub runs: Vec<BenchRun>,
    /// Throughput of each run relative to the first.
    pub scaling: Vec<f64>,
    pub reference_rate_bps: f64,
    /// `reference_rate_bps / 256`.
    pub reference_keys_per_second: f64,
}

/// Times the extractor on random input at each configured worker count.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchSection> {
    create_out_dir(&cfg.out_dir)?;
    let master = cfg.master_seed(Stage::Bench)?;
    let mut bytes = vec![0u8; cfg.bench.input_bytes];
    seed::rng(master, "bench-input", 0).fill_bytes(&mut bytes);
    let input = BitString::from_msb_bytes(&bytes);
    drop(bytes);
    let base = cfg.extractor_config()?;
    let toeplitz = ToeplitzSeed::generate(base.n, base.m, seed::derive(master, "bench-seed", 0))?;
    let mut runs = Vec::new();
    let mut kernel = String::new();
    let mut output_bits = 0;
    for &w in &cfg.bench.workers {
        let ex = ExtractorConfig {
            worker_count: w,
            ..base.clone()
        };
        let (out, stats) = extractor::extract_stream(&ex, &toeplitz, &input)?;
        output_bits = out.len();
        kernel = stats.kernel.clone();
        let output_rate_gbps = if stats.wall_time_s > 0.0 {
            stats.bits_out as f64 / stats.wall_time_s / 1e9
        } else {
            0.0
        };
        runs.push(BenchRun {
            workers: w,
            wall_time_s: stats.wall_time_s,
            throughput_gbps: stats.throughput_gbps,
            output_rate_gbps,
            aes256_keys_per_second: entropy::aes256_keys_per_second(output_rate_gbps * 1e9),
        });
    }
    let first = runs[0].throughput_gbps;
    let scaling = runs
        .iter()
        .map(|r| if first > 0.0 { r.throughput_gbps / first } else { 0.0 })
        .collect();
    let section = BenchSection {
        kernel,
        n: base.n,
        m: base.m,
        input_bits: input.len(),
        output_bits,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        runs,
        scaling,
        reference_rate_bps: cfg.bench.reference_rate_bps,
        reference_keys_per_second: entropy::aes256_keys_per_second(cfg.bench.reference_rate_bps),
    };
    write_json(&cfg.path(Stage::Bench.section_file()), &section)?;
    Ok(section)
}

// ------------------------------------------------------------------ report

/// Sections contributed by the executed stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub config: Option<RunConfig>,
    pub stages_run: Vec<Stage>,
    pub clearance: Option<SimulateSection>,
    pub extraction: Option<ExtractSection>,
    /// Same as `extraction.entropy`, at the top level for convenience.
    pub entropy: Option<EntropyReport>,
    pub suite: Option<SuiteSummary>,
    pub duobinary: Option<DuobinarySection>,
    pub bench: Option<BenchSection>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(cfg: &RunConfig) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            tool_version: TOOL_VERSION,
            config: Some(cfg.clone()),
            ..RunReport::default()
        }
    }

    /// `Some(passed)` when the battery ran.
    pub fn suite_passed(&self) -> Option<bool> {
        self.suite.as_ref().map(|s| s.verdict == "PASS")
    }
}

/// Inputs the stages take from outside the output directory.
#[derive(Debug, Clone, Default)]
pub struct StageInputs {
    pub extract_input: Option<PathBuf>,
    pub test_input: Option<PathBuf>,
}

/// Runs `stages` in pipeline order, writing each stage's artifacts and
/// section file; returns the accumulated report.
pub fn run_stages(cfg: &RunConfig, stages: &[Stage], inputs: &StageInputs) -> Result<RunReport> {
    cfg.validate()?;
    let mut order: Vec<Stage> = stages.to_vec();
    order.sort();
    order.dedup();
    for &st in &order {
        if st.needs_seed() && (st != Stage::Extract || cfg.extractor.seed_file.is_none()) {
            cfg.master_seed(st)?;
        }
    }
    let mut report = RunReport::new(cfg);
    for st in order {
        let start = Instant::now();
        match st {
            Stage::Simulate => {
                let s = run_simulate(cfg)?;
                write_json(&cfg.path(st.section_file()), &s)?;
                report.clearance = Some(s);
            }
            Stage::Extract => {
                let s = run_extract(cfg, inputs.extract_input.as_deref())?;
                write_json(&cfg.path(st.section_file()), &s)?;
                report.entropy = Some(s.entropy.clone());
                report.extraction = Some(s);
            }
            Stage::Test => {
                let s = run_test(cfg, inputs.test_input.as_deref())?;
                report.suite = Some(SuiteSummary::of(&s));
            }
            Stage::Duobinary => {
                let s = run_duobinary(cfg)?;
                write_json(&cfg.path(st.section_file()), &s)?;
                report.duobinary = Some(s);
            }
            Stage::Bench => report.bench = Some(run_bench(cfg)?),
        }
        report.stages_run.push(st);
        report.timings.push(StageTiming {
            stage: st,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

/// Writes `report.json` into the output directory.
pub fn write_report(cfg: &RunConfig, report: &RunReport) -> Result<PathBuf> {
    create_out_dir(&cfg.out_dir)?;
    let path = cfg.path(REPORT_JSON);
    write_json(&path, report)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = RunConfig::with_seed(42);
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str("seed = 7\n[extractor]\nworkers = 2\n").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.extractor.workers, 2);
        assert_eq!(cfg.extractor.n, 4096);
        assert_eq!(cfg.output_block().unwrap(), 824);
        assert_eq!(cfg.receiver, ReceiverParams::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("sed = 1"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_str("[suite]\nalpha = 1.5").is_err());
        assert!(RunConfig::from_toml_str("[extractor]\nn = 100\nm = 200").is_err());
        assert!(RunConfig::from_toml_str("[simulate]\nsample_rate_hz = 1e9").is_err());
    }

    #[test]
    fn seedless_config_is_rejected_by_random_stages_only() {
        let cfg = RunConfig::default();
        assert!(cfg.master_seed(Stage::Simulate).is_err());
        let err = run_stages(&cfg, &[Stage::Duobinary], &StageInputs::default()).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn lit_capture_is_sized_for_the_suite() {
        let cfg = RunConfig::with_seed(1);
        let samples = cfg.lit_samples().unwrap();
        let blocks = samples * 8 / 4096;
        assert!(blocks * 824 >= 100_000_000);
        assert!((blocks - 1) * 824 < 100_000_000);
    }

    #[test]
    fn stage_names_parse() {
        for st in Stage::ALL {
            assert_eq!(st.as_str().parse::<Stage>().unwrap(), st);
        }
        assert!("extraction".parse::<Stage>().is_err());
    }

    #[test]
    fn timing_keys_are_stripped_at_any_depth() {
        let mut v = serde_json::json!({
            "a": 1, "timings": [1],
            "b": {"wall_time_s": 2.0, "c": [{"throughput_gbps": 3.0, "d": 4}]}
        });
        strip_timings(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "b": {"c": [{"d": 4}]}}));
    }
}
