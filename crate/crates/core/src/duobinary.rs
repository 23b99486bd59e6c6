//! The homodyne receiver reused as a classical data receiver.
//!
//! Binary NRZ drives the 2.5 GHz Bessel response. At 10 Gb/s the response
//! itself forms the three-level duobinary signal, and precoding lets each bit
//! be decided from one sample without error propagation. At 4 Gb/s the same
//! receiver carries plain on-off keying.
//!
//! The link is linear, so the noiseless photocurrent at any instant is a sum
//! of shifted copies of one NRZ pulse response. BER runs sample that sum once
//! per symbol, at the phase that maximises the noiseless decision margin on
//! a training preamble, and add Gaussian electronic noise with the variance
//! of the dark (LO off) receiver. Eye diagrams render the full oversampled
//! waveform with spectrally shaped noise.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise;
use crate::receiver::{NoiseModel, ReceiverParams, WaveformLabel};
use crate::seed;
use crate::units::dbm_to_mw;

/// BER threshold of the forward error correction.
pub const FEC_LIMIT: f64 = 1e-3;

/// Symbols in the noiseless training preamble.
const PREAMBLE_SYMBOLS: usize = 4096;

/// Span of the truncated pulse response, in symbols.
const PULSE_SPAN: usize = 16;

/// Line coding on the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// Precoded binary NRZ, three-level decision.
    Duobinary,
    /// On-off keying, mid-level decision.
    Ook,
}

/// Parameters of one link configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    pub modulation: Modulation,
    pub bitrate_bps: f64,
    /// Average received optical power.
    pub rx_power_dbm: f64,
    pub responsivity_a_per_w: f64,
    pub samples_per_symbol: usize,
    /// Off-level power as a fraction of the on level; 0 is ideal extinction.
    pub extinction_floor: f64,
    /// When false, the electronic noise is switched off.
    pub noise_enabled: bool,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams::duobinary_10g()
    }
}

impl LinkParams {
    pub fn duobinary_10g() -> Self {
        LinkParams {
            modulation: Modulation::Duobinary,
            bitrate_bps: 10e9,
            rx_power_dbm: -15.0,
            responsivity_a_per_w: 1.0,
            samples_per_symbol: 16,
            extinction_floor: 0.0,
            noise_enabled: true,
        }
    }

    pub fn ook_4g() -> Self {
        LinkParams {
            modulation: Modulation::Ook,
            bitrate_bps: 4e9,
            // 120 µA of dc photocurrent at 1 A/W.
            rx_power_dbm: 10.0 * (0.120f64).log10(),
            ..LinkParams::duobinary_10g()
        }
    }

    pub fn with_power_dbm(&self, dbm: f64) -> Self {
        LinkParams {
            rx_power_dbm: dbm,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bitrate_bps > 0.0 && self.bitrate_bps.is_finite()) {
            return Err(Error::param("bitrate_bps", "must be positive"));
        }
        if self.samples_per_symbol < 8 {
            return Err(Error::param("samples_per_symbol", "must be at least 8"));
        }
        if !(self.responsivity_a_per_w > 0.0) {
            return Err(Error::param("responsivity_a_per_w", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.extinction_floor) {
            return Err(Error::param("extinction_floor", "must lie in [0, 1)"));
        }
        if !self.rx_power_dbm.is_finite() {
            return Err(Error::param("rx_power_dbm", "must be finite"));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.bitrate_bps * self.samples_per_symbol as f64
    }

    /// Photocurrents of the off and on levels, A. The average of the two
    /// is the average received power times the responsivity.
    pub fn current_levels(&self) -> (f64, f64) {
        let avg = self.responsivity_a_per_w * dbm_to_mw(self.rx_power_dbm) * 1e-3;
        let on = 2.0 * avg / (1.0 + self.extinction_floor);
        (on * self.extinction_floor, on)
    }
}

/// XOR precoder `b_k = d_k ⊕ b_{k-1}` starting from `b_{-1} = 0`.
pub fn precode(data: &[u8]) -> Vec<u8> {
    let mut prev = 0u8;
    data.iter()
        .map(|&d| {
            prev ^= d & 1;
            prev
        })
        .collect()
}

/// Duobinary levels `c_k = b_k + b_{k-1}` with `b_{-1} = 0`.
pub fn duobinary_encode(precoded: &[u8]) -> Vec<u8> {
    let mut prev = 0u8;
    precoded
        .iter()
        .map(|&b| {
            let c = b + prev;
            prev = b;
            c
        })
        .collect()
}

/// Decodes levels: the centre level means a one.
pub fn duobinary_decode(levels: &[u8]) -> Vec<u8> {
    levels.iter().map(|&c| u8::from(c == 1)).collect()
}

/// Response of the receiver to one NRZ symbol of unit amplitude, sampled
/// `samples_per_symbol` times per symbol over [`PULSE_SPAN`] symbols.
#[derive(Debug, Clone)]
pub struct PulseResponse {
    samples: Vec<f64>,
    samples_per_symbol: usize,
}

impl PulseResponse {
    pub fn new(receiver: &ReceiverParams, bitrate_bps: f64, samples_per_symbol: usize) -> Result<Self> {
        let filter = receiver.filter()?;
        let sps = samples_per_symbol;
        let fs = bitrate_bps * sps as f64;
        // A long period keeps the circular wrap of the impulse response
        // negligible.
        let n = (sps * PULSE_SPAN * 8).next_power_of_two();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for v in &mut buf[..sps] {
            *v = Complex64::new(1.0, 0.0);
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for k in 0..=n / 2 {
            let h = filter.response(k as f64 * fs / n as f64);
            buf[k] *= h;
            if k != 0 && k != n / 2 {
                buf[n - k] *= h.conj();
            }
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        let samples = buf[..sps * PULSE_SPAN].iter().map(|c| c.re / n as f64).collect();
        Ok(PulseResponse {
            samples,
            samples_per_symbol: sps,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    /// Noiseless waveform for a symbol sequence: `levels[i]` is the drive
    /// level of symbol i. Output has `levels.len() · sps` samples.
    pub fn render(&self, levels: &[f64]) -> Vec<f64> {
        let sps = self.samples_per_symbol;
        let span = PULSE_SPAN;
        let mut out = vec![0.0; levels.len() * sps];
        for (n, y) in out.iter_mut().enumerate() {
            let k = n / sps;
            let phase = n % sps;
            let mut acc = 0.0;
            for j in 0..span.min(k + 1) {
                acc += levels[k - j] * self.samples[j * sps + phase];
            }
            *y = acc;
        }
        out
    }

    /// Symbol-spaced taps seen by a sampler at `delay` samples after the
    /// start of its symbol: the sample for symbol k is
    /// `Σ_j taps[j] · level[k + lead - j]`, with `lead = delay / sps`.
    fn taps(&self, delay: usize) -> (Vec<f64>, usize) {
        let sps = self.samples_per_symbol;
        let lead = delay / sps;
        let phase = delay % sps;
        let taps = (0..PULSE_SPAN).map(|j| self.samples[j * sps + phase]).collect();
        (taps, lead)
    }
}

/// Noiseless decision set-up of a link: sampling delay and thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Receiver {
    pub modulation: Modulation,
    /// Sampling instant after the start of the decided symbol, in samples.
    pub delay_samples: usize,
    pub thresholds: Vec<f64>,
    /// Smallest noiseless distance of a training sample from a threshold,
    /// as a fraction of the on-level current (negative if the eye is shut).
    pub margin: f64,
    /// Steady-state on level of the unit-amplitude pulse response.
    pub high_level: f64,
    taps: Vec<f64>,
    lead: usize,
}

/// The drive symbols and the expected decisions for a data sequence.
fn line_code(modulation: Modulation, data: &[u8]) -> (Vec<u8>, Vec<u8>) {
    match modulation {
        Modulation::Duobinary => {
            let b = precode(data);
            let c = duobinary_encode(&b);
            (b, c)
        }
        Modulation::Ook => (data.to_vec(), data.to_vec()),
    }
}

fn slice(modulation: Modulation, thresholds: &[f64], y: f64) -> u8 {
    match modulation {
        Modulation::Duobinary => u8::from(y > thresholds[0]) + u8::from(y > thresholds[1]),
        Modulation::Ook => u8::from(y > thresholds[0]),
    }
}

/// Levels sampled by a receiver with `taps`/`lead`, unit amplitude, no noise.
fn sample_symbols(taps: &[f64], lead: usize, drive: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for (j, &t) in taps.iter().enumerate() {
        let idx = k as isize + lead as isize - j as isize;
        if idx >= 0 && (idx as usize) < drive.len() {
            acc += t * drive[idx as usize];
        }
    }
    acc
}

impl Receiver {
    /// Picks the sampling delay with the largest noiseless decision margin
    /// on a random preamble; thresholds sit at 1/4 and 3/4 (duobinary) or
    /// 1/2 (OOK) of the steady-state high level.
    pub fn train(pulse: &PulseResponse, modulation: Modulation, seed: u64) -> Receiver {
        let sps = pulse.samples_per_symbol();
        let high: f64 = (0..PULSE_SPAN).map(|j| pulse.samples()[j * sps + sps / 2]).sum();
        let thresholds = match modulation {
            Modulation::Duobinary => vec![0.25 * high, 0.75 * high],
            Modulation::Ook => vec![0.5 * high],
        };
        let mut rng = seed::rng(seed, "link-preamble", 0);
        let data: Vec<u8> = (0..PREAMBLE_SYMBOLS).map(|_| rng.random_range(0..2u8)).collect();
        let (drive, expected) = line_code(modulation, &data);
        let drive: Vec<f64> = drive.iter().map(|&b| b as f64).collect();
        // Skip the start-up and the tail so every sample sees full history.
        let range = PULSE_SPAN..PREAMBLE_SYMBOLS - PULSE_SPAN;

        let mut best: Option<Receiver> = None;
        for delay in 0..(PULSE_SPAN - 1) * sps {
            let (taps, lead) = pulse.taps(delay);
            let mut margin = f64::INFINITY;
            for k in range.clone() {
                let y = sample_symbols(&taps, lead, &drive, k);
                let level = expected[k] as usize;
                // Signed distance to the thresholds bounding this level.
                let below = if level > 0 { y - thresholds[level - 1] } else { f64::INFINITY };
                let above = if level < thresholds.len() { thresholds[level] - y } else { f64::INFINITY };
                margin = margin.min(below.min(above));
            }
            let margin = margin / high;
            if best.as_ref().is_none_or(|b| margin > b.margin) {
                best = Some(Receiver {
                    modulation,
                    delay_samples: delay,
                    thresholds: thresholds.clone(),
                    margin,
                    high_level: high,
                    taps,
                    lead,
                });
            }
        }
        best.expect("non-empty delay range")
    }

    /// Decisions for drive currents `drive` (A, one per symbol) between
    /// `off` and `on`, with optional additive noise (one sample per symbol).
    fn decide(&self, drive: &[f64], off: f64, on: f64, noise: &[f64]) -> Vec<u8> {
        let base = off * self.high_level;
        let thresholds: Vec<f64> = self.thresholds.iter().map(|t| base + t * (on - off)).collect();
        (0..drive.len())
            .map(|k| {
                let y = sample_symbols(&self.taps, self.lead, drive, k) + noise.get(k).copied().unwrap_or(0.0);
                slice(self.modulation, &thresholds, y)
            })
            .collect()
    }
}

/// One Monte Carlo BER measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub rx_power_dbm: f64,
    pub errors_counted: u64,
    pub bits_simulated: u64,
    pub ber: f64,
}

impl BerPoint {
    /// At least 10⁵ bits or 100 errors.
    pub fn is_reportable(&self) -> bool {
        self.bits_simulated >= 100_000 || self.errors_counted >= 100
    }
}

/// RMS electronic noise current of the dark receiver, A.
pub fn electronic_noise_rms(model: &NoiseModel) -> f64 {
    let band = 16.0 * model.filter().f3db_hz();
    model.variance(WaveformLabel::Dark, band).sqrt()
}

/// A link ready for repeated simulation.
#[derive(Debug, Clone)]
pub struct Link {
    params: LinkParams,
    model: NoiseModel,
    pulse: PulseResponse,
    receiver: Receiver,
    noise_rms: f64,
}

impl Link {
    pub fn new(receiver: &ReceiverParams, params: &LinkParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let model = receiver.model()?;
        let pulse = PulseResponse::new(receiver, params.bitrate_bps, params.samples_per_symbol)?;
        let trained = Receiver::train(&pulse, params.modulation, seed);
        let noise_rms = electronic_noise_rms(&model);
        Ok(Link {
            params: params.clone(),
            model,
            pulse,
            receiver: trained,
            noise_rms,
        })
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    pub fn pulse(&self) -> &PulseResponse {
        &self.pulse
    }

    pub fn receiver(&self) -> &Receiver {
        &self.receiver
    }

    /// RMS noise current at the decision point, A.
    pub fn noise_rms(&self) -> f64 {
        self.noise_rms
    }

    /// BER at `rx_power_dbm` from `n_bits` random data bits.
    pub fn simulate(&self, rx_power_dbm: f64, n_bits: usize, rng_seed: u64) -> Result<BerPoint> {
        if n_bits < 100_000 {
            return Err(Error::InsufficientData {
                what: "bits for a BER point".into(),
                required: 100_000,
                actual: n_bits,
            });
        }
        let p = self.params.with_power_dbm(rx_power_dbm);
        p.validate()?;
        let (off, on) = p.current_levels();
        let mut rng = seed::rng(rng_seed, "link-data", 0);
        let data: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2u8)).collect();
        let (drive, _) = line_code(p.modulation, &data);
        let drive: Vec<f64> = drive.iter().map(|&b| if b == 1 { on } else { off }).collect();
        let noise: Vec<f64> = if p.noise_enabled {
            let mut nrng = seed::rng(rng_seed, "link-noise", 0);
            (0..n_bits)
                .map(|_| self.noise_rms * nrng.sample::<f64, _>(StandardNormal))
                .collect()
        } else {
            Vec::new()
        };
        let levels = self.receiver.decide(&drive, off, on, &noise);
        let decoded = match p.modulation {
            Modulation::Duobinary => duobinary_decode(&levels),
            Modulation::Ook => levels,
        };
        // The first symbols see the preamble-free start-up transient.
        let skip = PULSE_SPAN;
        let errors = decoded[skip..]
            .iter()
            .zip(&data[skip..])
            .filter(|(a, b)| a != b)
            .count() as u64;
        let bits = (n_bits - skip) as u64;
        Ok(BerPoint {
            rx_power_dbm,
            errors_counted: errors,
            bits_simulated: bits,
            ber: errors as f64 / bits as f64,
        })
    }

    /// BER at each power; point i uses a seed derived from `(rng_seed, i)`,
    /// so results do not depend on the thread count.
    pub fn sweep(&self, powers_dbm: &[f64], n_bits: usize, rng_seed: u64) -> Result<Vec<BerPoint>> {
        powers_dbm
            .par_iter()
            .enumerate()
            .map(|(i, &p)| self.simulate(p, n_bits, seed::derive(rng_seed, "ber-point", i as u64)))
            .collect()
    }

    /// Oversampled photocurrent for `n_symbols` random data symbols, with
    /// spectrally shaped electronic noise when enabled. Also returns the
    /// mean optical power of the drive waveform, W.
    pub fn waveform(&self, n_symbols: usize, rng_seed: u64) -> Result<(Vec<f64>, f64)> {
        let p = &self.params;
        let (off, on) = p.current_levels();
        let mut rng = seed::rng(rng_seed, "eye-data", 0);
        let data: Vec<u8> = (0..n_symbols).map(|_| rng.random_range(0..2u8)).collect();
        let (drive, _) = line_code(p.modulation, &data);
        let currents: Vec<f64> = drive.iter().map(|&b| if b == 1 { on } else { off }).collect();
        let mean_optical_w = currents.iter().sum::<f64>() / n_symbols.max(1) as f64 / p.responsivity_a_per_w;
        let mut wave = self.pulse.render(&currents);
        if p.noise_enabled {
            let fs = p.sample_rate_hz();
            let model = &self.model;
            let n = noise::synthesize(|f| model.electronic_psd(f), wave.len(), fs, rng_seed, "eye-noise");
            for (w, v) in wave.iter_mut().zip(n) {
                *w += v;
            }
        }
        Ok((wave, mean_optical_w))
    }
}

/// Convenience wrapper: builds the link and measures one BER point.
pub fn simulate_link(receiver: &ReceiverParams, params: &LinkParams, n_bits: usize, rng_seed: u64) -> Result<BerPoint> {
    Link::new(receiver, params, rng_seed)?.simulate(params.rx_power_dbm, n_bits, rng_seed)
}

/// Power at which BER crosses `target`, from a least-squares line through
/// log10(BER) versus dBm near the crossing, using points (ordered by power)
/// with at least 10 errors and BER between 1e-6 and 0.1. `None` when fewer
/// than two such points exist or the fit has no downward slope.
pub fn sensitivity_dbm(points: &[BerPoint], target: f64) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.errors_counted >= 10 && p.ber > 1e-6 && p.ber < 0.1)
        .map(|p| (p.rx_power_dbm, p.ber.log10()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    // Fit near the crossing only: the bracketing pair and one neighbour on
    // each side keep the curvature of the waterfall out of the line.
    let lt = target.log10();
    let cross = usable.iter().position(|&(_, y)| y < lt).unwrap_or(usable.len() - 1).max(1);
    let lo = cross.saturating_sub(2);
    let hi = (cross + 2).min(usable.len());
    let win = &usable[lo..hi];
    let n = win.len() as f64;
    let mx = win.iter().map(|p| p.0).sum::<f64>() / n;
    let my = win.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = win.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = win.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    Some(mx + (lt - my) / slope)
}

/// Amplitude × phase occupancy of a waveform folded over two symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EyeDiagram {
    pub samples_per_symbol: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    /// `counts[row][phase]`, row 0 at `amplitude_min`.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    /// Phase (within the two-symbol window) of the widest vertical opening.
    pub center_phase: usize,
    /// Vertical opening at `center_phase`; negative when the eye is shut.
    pub eye_opening: f64,
}

/// Folds `waveform` (starting at a symbol boundary) over two symbol periods
/// into `amplitude_bins` rows. The opening at each phase is the gap between
/// the lowest sample above and the highest sample below the phase mean.
pub fn eye_diagram(waveform: &[f64], samples_per_symbol: usize, amplitude_bins: usize) -> Result<EyeDiagram> {
    if samples_per_symbol == 0 || amplitude_bins == 0 {
        return Err(Error::param("eye_diagram", "bins must be positive"));
    }
    if waveform.len() < 100 * samples_per_symbol {
        return Err(Error::InsufficientData {
            what: "samples for an eye diagram (100 symbols)".into(),
            required: 100 * samples_per_symbol,
            actual: waveform.len(),
        });
    }
    if let Some(i) = waveform.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    let phases = 2 * samples_per_symbol;
    let lo = waveform.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = waveform.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { hi - lo } else { 1.0 };
    let mut counts = vec![vec![0u64; phases]; amplitude_bins];
    for (n, &v) in waveform.iter().enumerate() {
        let row = (((v - lo) / width * amplitude_bins as f64) as usize).min(amplitude_bins - 1);
        counts[row][n % phases] += 1;
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for ph in 0..phases {
        let col: Vec<f64> = waveform.iter().skip(ph).step_by(phases).copied().collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let upper = col.iter().copied().filter(|&v| v > mean).fold(f64::INFINITY, f64::min);
        let lower = col.iter().copied().filter(|&v| v <= mean).fold(f64::NEG_INFINITY, f64::max);
        let opening = if upper.is_finite() && lower.is_finite() { upper - lower } else { 0.0 };
        if opening > best.1 {
            best = (ph, opening);
        }
    }
    Ok(EyeDiagram {
        samples_per_symbol,
        amplitude_min: lo,
        amplitude_max: hi,
        counts,
        total: waveform.len() as u64,
        center_phase: best.0,
        eye_opening: best.1,
    })
}

/// Writes the BER sweep as `power_dbm,ber,bits,errors`.
pub fn write_ber_csv<W: Write>(mut w: W, points: &[BerPoint]) -> std::io::Result<()> {
    writeln!(w, "power_dbm,ber,bits,errors")?;
    for p in points {
        writeln!(w, "{:?},{:?},{},{}", p.rx_power_dbm, p.ber, p.bits_simulated, p.errors_counted)?;
    }
    Ok(())
}

/// Writes the eye histogram: a header of phase bins, then one row per
/// amplitude bin (highest first) led by the bin-centre amplitude.
pub fn write_eye_csv<W: Write>(mut w: W, eye: &EyeDiagram) -> std::io::Result<()> {
    let phases = 2 * eye.samples_per_symbol;
    write!(w, "amplitude")?;
    for ph in 0..phases {
        write!(w, ",{ph}")?;
    }
    writeln!(w)?;
    let rows = eye.counts.len();
    let step = (eye.amplitude_max - eye.amplitude_min) / rows as f64;
    for r in (0..rows).rev() {
        write!(w, "{:?}", eye.amplitude_min + (r as f64 + 0.5) * step)?;
        for c in &eye.counts[r] {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
