//! Balanced homodyne receiver noise model.
//!
//! Both noise sources pass through the same TIA response `|H(f)|²` (a
//! Bessel lowpass). The electronic noise is input-referred white at
//! `tia_noise_density` with a term rising as `(f / hf_noise_corner)²` from
//! the photodiode capacitance loading the TIA input. Vacuum shot noise is
//! white at the input with a PSD proportional to the linear LO power.
//!
//! Two constants are not measured directly and are calibrated from the
//! quoted receiver figures: the shot-noise coefficient (A²/Hz per mW) is
//! fixed by the band-integrated clearance at the reference LO power, and
//! the electronic-noise corner by the clearance at the top of the flat
//! band. The CMRR model uses a static amplitude imbalance and a photodiode
//! bandwidth mismatch, with the mismatch calibrated against the 2 GHz
//! rejection figure.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bessel::BesselLowpass;
use crate::error::{Error, Result};
use crate::noise;
use crate::units::{bisect, db_to_linear, dbm_to_mw, linear_to_db, simpson};
use crate::welch::welch;

/// Clearance bins where `S_lit <= S_dark` are clamped to this value and flagged.
pub const CLEARANCE_FLOOR_DB: f64 = -30.0;

/// Figures the free model constants are fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub reference_lo_dbm: f64,
    pub integrated_clearance_db: f64,
    pub integration_band_hz: f64,
    pub flat_band_edge_hz: f64,
    pub flat_band_clearance_db: f64,
    pub cmrr_reference_hz: f64,
    pub cmrr_reference_db: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        CalibrationTargets {
            reference_lo_dbm: 12.7,
            integrated_clearance_db: 19.1,
            integration_band_hz: 3e9,
            flat_band_edge_hz: 1e9,
            flat_band_clearance_db: 20.0,
            cmrr_reference_hz: 2e9,
            cmrr_reference_db: 40.0,
        }
    }
}

/// Physical constants of the detector chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverParams {
    pub lo_power_dbm: f64,
    pub responsivity_a_per_w: f64,
    pub tia_noise_density_pa_rthz: f64,
    pub tia_rms_noise_na: f64,
    pub bessel_order: u32,
    pub f3db_hz: f64,
    /// Frequency at which the input-referred electronic density has doubled.
    pub hf_noise_corner_hz: f64,
    /// Shot-noise input PSD per mW of LO power, A²/Hz/mW.
    pub shot_noise_coeff: f64,
    /// Static responsivity/splitting mismatch of the second arm.
    pub imbalance_fraction: f64,
    /// Single-pole bandwidth of the photodiodes.
    pub pd_bandwidth_hz: f64,
    /// Fractional bandwidth deficit of the second photodiode.
    pub pd_bandwidth_mismatch: f64,
    /// TIA gain used to express samples in volts.
    pub transimpedance_ohm: f64,
    /// Highest frequency the simulation must represent.
    pub model_band_hz: f64,
}

impl Default for ReceiverParams {
    fn default() -> Self {
        ReceiverParams::calibrated(&CalibrationTargets::default())
            .expect("default calibration targets are feasible")
    }
}

impl ReceiverParams {
    /// Measured figures with the free constants still unset.
    fn uncalibrated() -> Self {
        ReceiverParams {
            lo_power_dbm: 12.7,
            responsivity_a_per_w: 1.0,
            tia_noise_density_pa_rthz: 8.8,
            tia_rms_noise_na: 460.0,
            bessel_order: 5,
            f3db_hz: 2.5e9,
            hf_noise_corner_hz: 2e9,
            shot_noise_coeff: 0.0,
            imbalance_fraction: 5e-4,
            pd_bandwidth_hz: 10e9,
            pd_bandwidth_mismatch: 0.0,
            transimpedance_ohm: 1000.0,
            model_band_hz: 5e9,
        }
    }

    /// Solves for the shot coefficient, noise corner and PD mismatch.
    pub fn calibrated(targets: &CalibrationTargets) -> Result<Self> {
        let mut p = ReceiverParams::uncalibrated();
        p.lo_power_dbm = targets.reference_lo_dbm;
        p.calibrate(targets)?;
        Ok(p)
    }

    /// Refits the calibrated constants in place, keeping the measured figures.
    pub fn calibrate(&mut self, targets: &CalibrationTargets) -> Result<()> {
        let lo = self.lo_power_dbm;
        self.lo_power_dbm = targets.reference_lo_dbm;
        let filt = self.filter()?;
        let band = targets.integration_band_hz;
        let gain_integral = simpson(|f| filt.power_gain(f), 0.0, band, 4000);
        let rise_integral = simpson(|f| (f / band).powi(2) * filt.power_gain(f), 0.0, band, 4000);
        let density = self.input_density_flat();
        let ratio = db_to_linear(targets.integrated_clearance_db);
        let p_mw = dbm_to_mw(targets.reference_lo_dbm);

        // Integrated ratio fixes the shot coefficient for a given corner:
        //   K P ∫|H|² = R i² ∫(1 + (f/fc)²)|H|²
        let coeff_for = |fc: f64| {
            ratio * density * (gain_integral + (band / fc).powi(2) * rise_integral) / (p_mw * gain_integral)
        };
        let edge = targets.flat_band_edge_hz;
        let edge_clearance = |fc: f64| {
            linear_to_db(coeff_for(fc) * p_mw / (density * (1.0 + (edge / fc).powi(2))))
        };
        let target = targets.flat_band_clearance_db;
        // edge_clearance rises as fc falls; search over a wide log range.
        let lo_fc: f64 = 1e6;
        let hi_fc: f64 = 1e13;
        if (edge_clearance(lo_fc) - target) * (edge_clearance(hi_fc) - target) > 0.0 {
            return Err(Error::param(
                "flat_band_clearance_db",
                format!(
                    "{target} dB at {edge} Hz is not reachable with {} dB integrated",
                    targets.integrated_clearance_db
                ),
            ));
        }
        let log_fc = bisect(
            |l| edge_clearance(10f64.powf(l)) - target,
            lo_fc.log10(),
            hi_fc.log10(),
            200,
        );
        self.hf_noise_corner_hz = 10f64.powf(log_fc);
        self.shot_noise_coeff = coeff_for(self.hf_noise_corner_hz);

        let f_ref = targets.cmrr_reference_hz;
        let want = targets.cmrr_reference_db;
        if self.imbalance_fraction > 0.0 && -20.0 * self.imbalance_fraction.log10() < want {
            return Err(Error::param(
                "imbalance_fraction",
                "static imbalance alone already violates the CMRR target",
            ));
        }
        self.pd_bandwidth_mismatch = bisect(
            |d| {
                let mut q = self.clone();
                q.pd_bandwidth_mismatch = d;
                q.cmrr_db(f_ref) - want
            },
            0.0,
            0.99,
            200,
        );
        self.lo_power_dbm = lo;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("responsivity_a_per_w", self.responsivity_a_per_w),
            ("tia_noise_density_pa_rthz", self.tia_noise_density_pa_rthz),
            ("tia_rms_noise_na", self.tia_rms_noise_na),
            ("f3db_hz", self.f3db_hz),
            ("hf_noise_corner_hz", self.hf_noise_corner_hz),
            ("shot_noise_coeff", self.shot_noise_coeff),
            ("pd_bandwidth_hz", self.pd_bandwidth_hz),
            ("transimpedance_ohm", self.transimpedance_ohm),
            ("model_band_hz", self.model_band_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !self.lo_power_dbm.is_finite() {
            return Err(Error::param("lo_power_dbm", "must be finite"));
        }
        if !(0.0..1.0).contains(&self.imbalance_fraction) {
            return Err(Error::param("imbalance_fraction", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.pd_bandwidth_mismatch) {
            return Err(Error::param("pd_bandwidth_mismatch", "must lie in [0, 1)"));
        }
        if self.bessel_order < 1 {
            return Err(Error::param("bessel_order", "must be at least 1"));
        }
        Ok(())
    }

    pub fn filter(&self) -> Result<BesselLowpass> {
        BesselLowpass::new(self.bessel_order, self.f3db_hz)
    }

    pub fn with_lo_power_dbm(&self, dbm: f64) -> Self {
        ReceiverParams {
            lo_power_dbm: dbm,
            ..self.clone()
        }
    }

    pub fn lo_power_mw(&self) -> f64 {
        dbm_to_mw(self.lo_power_dbm)
    }

    fn input_density_flat(&self) -> f64 {
        let i = self.tia_noise_density_pa_rthz * 1e-12;
        i * i
    }

    /// Input-referred electronic current density, A²/Hz.
    pub fn input_referred_noise_density(&self, f_hz: f64) -> f64 {
        self.input_density_flat() * (1.0 + (f_hz / self.hf_noise_corner_hz).powi(2))
    }

    /// RMS current of the flat datasheet density through the modelled response.
    pub fn datasheet_rms_noise_a(&self) -> Result<f64> {
        Ok((self.input_density_flat() * self.filter()?.noise_bandwidth_hz()).sqrt())
    }

    /// A model bound to a concrete filter, for repeated PSD evaluation.
    pub fn model(&self) -> Result<NoiseModel> {
        self.validate()?;
        Ok(NoiseModel {
            filter: self.filter()?,
            params: self.clone(),
        })
    }

    /// CMRR in dB; `f64::INFINITY` when the arms are perfectly matched.
    pub fn cmrr_db(&self, f_hz: f64) -> f64 {
        let a = 1.0 / (1.0 + (f_hz / self.pd_bandwidth_hz).powi(2)).sqrt();
        let fb = self.pd_bandwidth_hz * (1.0 - self.pd_bandwidth_mismatch);
        let b = (1.0 - self.imbalance_fraction) / (1.0 + (f_hz / fb).powi(2)).sqrt();
        let residual = (a - b).abs();
        if residual == 0.0 {
            f64::INFINITY
        } else {
            20.0 * (a / residual).log10()
        }
    }
}

/// Electronic and shot PSDs for one parameter set.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    params: ReceiverParams,
    filter: BesselLowpass,
}

impl NoiseModel {
    pub fn params(&self) -> &ReceiverParams {
        &self.params
    }

    pub fn filter(&self) -> &BesselLowpass {
        &self.filter
    }

    /// Electronic current PSD after the receiver response, A²/Hz.
    pub fn electronic_psd(&self, f_hz: f64) -> f64 {
        self.params.input_referred_noise_density(f_hz) * self.filter.power_gain(f_hz)
    }

    /// Vacuum shot-noise current PSD after the receiver response, A²/Hz.
    pub fn shot_psd(&self, f_hz: f64) -> f64 {
        self.shot_psd_at(self.params.lo_power_mw(), f_hz)
    }

    fn shot_psd_at(&self, lo_mw: f64, f_hz: f64) -> f64 {
        self.params.shot_noise_coeff * lo_mw * self.filter.power_gain(f_hz)
    }

    /// Current PSD seen for a waveform label.
    pub fn label_psd(&self, label: WaveformLabel, f_hz: f64) -> f64 {
        let p = self.params.lo_power_mw();
        let elec = self.electronic_psd(f_hz);
        match label {
            WaveformLabel::Dark => elec,
            WaveformLabel::Lit => elec + self.shot_psd_at(p, f_hz),
            WaveformLabel::SinglePdA => elec + self.shot_psd_at(p / 2.0, f_hz),
            WaveformLabel::SinglePdB => {
                elec + self.shot_psd_at(p * (1.0 - self.params.imbalance_fraction) / 2.0, f_hz)
            }
        }
    }

    /// Model clearance `S_shot / S_elec` in dB.
    pub fn clearance_db(&self, f_hz: f64) -> f64 {
        linear_to_db(self.shot_psd(f_hz) / self.electronic_psd(f_hz))
    }

    /// Ratio of band-integrated shot to electronic power over `(0, f_max]`, dB.
    pub fn integrated_clearance_db(&self, f_max_hz: f64) -> f64 {
        let s = simpson(|f| self.shot_psd(f), 0.0, f_max_hz, 4000);
        let e = simpson(|f| self.electronic_psd(f), 0.0, f_max_hz, 4000);
        linear_to_db(s / e)
    }

    /// Variance of a label's current over `(0, band]`, A².
    pub fn variance(&self, label: WaveformLabel, band_hz: f64) -> f64 {
        simpson(|f| self.label_psd(label, f), 0.0, band_hz, 4000)
    }

    /// Predicted `var(lit) / var(dark)` in dB over `(0, band]`.
    pub fn variance_ratio_db(&self, band_hz: f64) -> f64 {
        linear_to_db(self.variance(WaveformLabel::Lit, band_hz) / self.variance(WaveformLabel::Dark, band_hz))
    }
}

/// Electronic current PSD after the receiver response, A²/Hz.
pub fn electronic_noise_psd(params: &ReceiverParams, f_hz: f64) -> Result<f64> {
    Ok(params.model()?.electronic_psd(f_hz))
}

/// Shot-noise current PSD after the receiver response, A²/Hz.
pub fn shot_noise_psd(params: &ReceiverParams, f_hz: f64) -> Result<f64> {
    Ok(params.model()?.shot_psd(f_hz))
}

/// CMRR at `f_hz`; infinite for a perfectly balanced receiver.
pub fn cmrr_db(params: &ReceiverParams, f_hz: f64) -> Result<f64> {
    params.validate()?;
    Ok(params.cmrr_db(f_hz))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformLabel {
    Dark,
    Lit,
    SinglePdA,
    SinglePdB,
}

impl WaveformLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            WaveformLabel::Dark => "dark",
            WaveformLabel::Lit => "lit",
            WaveformLabel::SinglePdA => "single_pd_a",
            WaveformLabel::SinglePdB => "single_pd_b",
        }
    }
}

impl fmt::Display for WaveformLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finite block of TIA output samples, in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformBlock {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: WaveformLabel,
}

impl WaveformBlock {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: WaveformLabel) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("samples", "waveform must not be empty"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(WaveformBlock {
            samples,
            sample_rate_hz,
            label,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> WaveformLabel {
        self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        self.samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
    }

    pub fn rms(&self) -> f64 {
        self.variance().sqrt()
    }
}

/// Simulates `n_samples` of the TIA output for `label`.
///
/// The block is a zero-mean Gaussian process whose PSD is the label's
/// current PSD times the transimpedance squared. Output depends only on
/// `(params, label, n_samples, sample_rate_hz, rng_seed)`.
pub fn simulate_waveform(
    params: &ReceiverParams,
    label: WaveformLabel,
    n_samples: usize,
    sample_rate_hz: f64,
    rng_seed: u64,
) -> Result<WaveformBlock> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be positive"));
    }
    let model = params.model()?;
    if !(sample_rate_hz >= 2.0 * params.model_band_hz) {
        return Err(Error::SampleRateTooLow {
            sample_rate_hz,
            band_hz: params.model_band_hz,
        });
    }
    let g2 = params.transimpedance_ohm * params.transimpedance_ohm;
    let samples = noise::synthesize(
        |f| g2 * model.label_psd(label, f),
        n_samples,
        sample_rate_hz,
        rng_seed,
        label.as_str(),
    );
    WaveformBlock::new(samples, sample_rate_hz, label)
}

/// Per-bin clearance estimated from lit and dark captures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClearanceSpectrum {
    pub frequencies_hz: Vec<f64>,
    pub clearance_db: Vec<f64>,
    /// Bins where the lit PSD did not exceed the dark PSD.
    pub floored: Vec<bool>,
    pub resolution_bw_hz: f64,
    pub lit_psd: Vec<f64>,
    pub dark_psd: Vec<f64>,
}

impl ClearanceSpectrum {
    /// Builds a spectrum from PSDs on a shared grid.
    pub fn from_psds(frequencies_hz: Vec<f64>, lit_psd: Vec<f64>, dark_psd: Vec<f64>, resolution_bw_hz: f64) -> Self {
        assert_eq!(frequencies_hz.len(), lit_psd.len());
        assert_eq!(frequencies_hz.len(), dark_psd.len());
        let mut clearance_db = Vec::with_capacity(lit_psd.len());
        let mut floored = Vec::with_capacity(lit_psd.len());
        for (&l, &d) in lit_psd.iter().zip(&dark_psd) {
            let excess = l - d;
            if excess > 0.0 && d > 0.0 {
                let c = linear_to_db(excess / d);
                if c < CLEARANCE_FLOOR_DB {
                    clearance_db.push(CLEARANCE_FLOOR_DB);
                    floored.push(true);
                } else {
                    clearance_db.push(c);
                    floored.push(false);
                }
            } else {
                clearance_db.push(CLEARANCE_FLOOR_DB);
                floored.push(true);
            }
        }
        ClearanceSpectrum {
            frequencies_hz,
            clearance_db,
            floored,
            resolution_bw_hz,
            lit_psd,
            dark_psd,
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies_hz.is_empty()
    }

    /// Rows of `(freq_hz, value_db, flag)` for CSV output.
    pub fn rows(&self) -> impl Iterator<Item = CurveRow> + '_ {
        self.frequencies_hz
            .iter()
            .zip(&self.clearance_db)
            .zip(&self.floored)
            .map(|((&f, &c), &fl)| CurveRow {
                freq_hz: f,
                value_db: c,
                flag: if fl { CurveFlag::Floor } else { CurveFlag::Ok },
            })
    }
}

/// Welch clearance spectrum `(S_lit - S_dark) / S_dark`.
pub fn clearance_spectrum(lit: &WaveformBlock, dark: &WaveformBlock, segment_len: usize) -> Result<ClearanceSpectrum> {
    if lit.sample_rate_hz != dark.sample_rate_hz {
        return Err(Error::SampleRateMismatch(lit.sample_rate_hz, dark.sample_rate_hz));
    }
    let l = welch(&lit.samples, lit.sample_rate_hz, segment_len)?;
    let d = welch(&dark.samples, dark.sample_rate_hz, segment_len)?;
    Ok(ClearanceSpectrum::from_psds(l.frequencies_hz, l.psd, d.psd, l.resolution_bw_hz))
}

/// Band-integrated clearance over `(0, f_max]` from an estimated spectrum.
pub fn integrated_clearance_db(spec: &ClearanceSpectrum, f_max_hz: f64) -> Result<f64> {
    let top = spec.frequencies_hz.last().copied().unwrap_or(0.0);
    if !(f_max_hz > 0.0) || f_max_hz > top + 0.5 * spec.resolution_bw_hz {
        return Err(Error::param(
            "f_max",
            format!("{f_max_hz} Hz lies outside the spectrum grid (0, {top}]"),
        ));
    }
    let mut shot = 0.0;
    let mut elec = 0.0;
    let mut bins = 0;
    for ((&f, &l), &d) in spec.frequencies_hz.iter().zip(&spec.lit_psd).zip(&spec.dark_psd) {
        if f > 0.0 && f <= f_max_hz {
            shot += l - d;
            elec += d;
            bins += 1;
        }
    }
    if bins == 0 {
        return Err(Error::param("f_max", "band contains no bins"));
    }
    if shot <= 0.0 || elec <= 0.0 {
        return Ok(CLEARANCE_FLOOR_DB);
    }
    Ok(linear_to_db(shot / elec))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFlag {
    Ok,
    Floor,
    Perfect,
}

impl CurveFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveFlag::Ok => "ok",
            CurveFlag::Floor => "floor",
            CurveFlag::Perfect => "perfect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub freq_hz: f64,
    pub value_db: f64,
    pub flag: CurveFlag,
}

/// CMRR sampled on `freqs`; unbounded points carry the `perfect` flag.
pub fn cmrr_curve(params: &ReceiverParams, freqs: &[f64]) -> Result<Vec<CurveRow>> {
    params.validate()?;
    Ok(freqs
        .iter()
        .map(|&f| {
            let v = params.cmrr_db(f);
            CurveRow {
                freq_hz: f,
                value_db: v,
                flag: if v.is_infinite() { CurveFlag::Perfect } else { CurveFlag::Ok },
            }
        })
        .collect())
}

/// Writes `freq_hz,value_db,flag` CSV with shortest round-trip numbers.
pub fn write_curve_csv<W: Write>(mut w: W, rows: impl IntoIterator<Item = CurveRow>) -> std::io::Result<()> {
    w.write_all(b"freq_hz,value_db,flag\n")?;
    for r in rows {
        writeln!(w, "{:?},{:?},{}", r.freq_hz, r.value_db, r.flag.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ReceiverParams {
        ReceiverParams::default()
    }

    #[test]
    fn calibration_hits_targets() {
        let p = params();
        let m = p.model().unwrap();
        assert!((m.integrated_clearance_db(3e9) - 19.1).abs() < 1e-6);
        assert!((m.clearance_db(1e9) - 20.0).abs() < 1e-6);
        assert!((p.cmrr_db(2e9) - 40.0).abs() < 1e-6);
    }

    #[test]
    fn electronic_density_is_datasheet_value_at_low_frequency() {
        let p = params();
        let d = p.input_referred_noise_density(1e6);
        assert!((d / (8.8e-12f64).powi(2) - 1.0).abs() < 1e-5);
        // Flat well below the corner.
        for f in [1e3, 1e5, 1e6, 1e7] {
            let r = p.input_referred_noise_density(f) / p.input_referred_noise_density(1e6);
            assert!((r - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn shot_noise_is_linear_in_lo_power() {
        let p = params();
        let m1 = p.model().unwrap();
        let m2 = p.with_lo_power_dbm(p.lo_power_dbm + linear_to_db(2.0)).model().unwrap();
        for f in [1e6, 1e8, 1e9, 2.5e9, 4e9] {
            assert!((m2.shot_psd(f) / m1.shot_psd(f) - 2.0).abs() < 1e-12);
        }
        let dim = p.with_lo_power_dbm(-200.0).model().unwrap();
        assert!(dim.shot_psd(1e9) < 1e-40);
    }

    #[test]
    fn integrated_clearance_tracks_lo_power() {
        let p = params();
        let m = p.with_lo_power_dbm(12.7 - 3.0).model().unwrap();
        assert!((m.integrated_clearance_db(3e9) - 16.1).abs() < 1e-6);
    }

    #[test]
    fn model_clearance_shape() {
        let m = params().model().unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let f = 1e9 + i as f64 * 1e8;
            let c = m.clearance_db(f);
            assert!(c <= prev);
            prev = c;
        }
        assert!(m.clearance_db(4e9) > 10.0);
        assert!(m.clearance_db(0.5e9) >= 19.0);
    }

    #[test]
    fn time_domain_prediction() {
        let m = params().model().unwrap();
        let r = m.variance_ratio_db(5e9);
        assert!((r - 17.7).abs() < 1.0, "{r}");
    }

    #[test]
    fn datasheet_rms() {
        let rms = params().datasheet_rms_noise_a().unwrap();
        assert!((rms / 460e-9 - 1.0).abs() < 0.1);
        assert!((rms - 4.5e-7).abs() < 5e-9, "{rms}");
    }

    #[test]
    fn cmrr_figures() {
        let p = params();
        assert!(p.cmrr_db(0.5e9) >= 50.0);
        assert!(p.cmrr_db(1e9) >= 50.0);
        assert!((p.cmrr_db(2e9) - 40.0).abs() <= 2.0);
        let perfect = ReceiverParams {
            imbalance_fraction: 0.0,
            pd_bandwidth_mismatch: 0.0,
            ..p.clone()
        };
        for f in [0.0, 1e9, 5e9] {
            assert!(cmrr_db(&perfect, f).unwrap().is_infinite());
        }
        let rows = cmrr_curve(&perfect, &[1e9]).unwrap();
        assert_eq!(rows[0].flag, CurveFlag::Perfect);
    }

    #[test]
    fn cmrr_monotone() {
        let p = params();
        let mut prev = f64::INFINITY;
        for i in 0..100 {
            let c = p.cmrr_db(i as f64 * 5e7);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn validation() {
        let mut p = params();
        p.imbalance_fraction = 1.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.f3db_hz = 0.0;
        assert!(p.model().is_err());
        let mut p = params();
        p.bessel_order = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn simulate_rejects_low_rate_and_empty() {
        let p = params();
        assert!(matches!(
            simulate_waveform(&p, WaveformLabel::Dark, 100, 5e9, 1),
            Err(Error::SampleRateTooLow { .. })
        ));
        assert!(simulate_waveform(&p, WaveformLabel::Dark, 0, 10e9, 1).is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let p = params();
        let a = simulate_waveform(&p, WaveformLabel::Lit, 10_000, 10e9, 5).unwrap();
        let b = simulate_waveform(&p, WaveformLabel::Lit, 10_000, 10e9, 5).unwrap();
        assert_eq!(a, b);
        let c = simulate_waveform(&p, WaveformLabel::Dark, 10_000, 10e9, 5).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn equal_statistics_floor_every_bin() {
        let p = params();
        let a = simulate_waveform(&p, WaveformLabel::Dark, 1 << 16, 10e9, 1).unwrap();
        let spec = clearance_spectrum(&a, &a, 1024).unwrap();
        assert!(spec.floored.iter().all(|&f| f));
        assert!(spec.clearance_db.iter().all(|&c| c == CLEARANCE_FLOOR_DB));
    }

    #[test]
    fn mismatched_rates_rejected() {
        let a = WaveformBlock::new(vec![0.0; 64], 1.0, WaveformLabel::Lit).unwrap();
        let b = WaveformBlock::new(vec![0.0; 64], 2.0, WaveformLabel::Dark).unwrap();
        assert!(matches!(clearance_spectrum(&a, &b, 16), Err(Error::SampleRateMismatch(..))));
    }

    #[test]
    fn waveform_rejects_nan() {
        assert!(matches!(
            WaveformBlock::new(vec![0.0, f64::NAN], 1.0, WaveformLabel::Lit),
            Err(Error::NonFiniteSample(1))
        ));
    }

    #[test]
    fn integrated_equal_psds_is_zero_db() {
        let f: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let dark = vec![1.0; 10];
        let lit = vec![2.0; 10];
        let s = ClearanceSpectrum::from_psds(f, lit, dark, 1.0);
        assert!(integrated_clearance_db(&s, 10.0).unwrap().abs() < 1e-12);
        assert!(integrated_clearance_db(&s, 0.0).is_err());
        assert!(integrated_clearance_db(&s, 100.0).is_err());
    }

    #[test]
    fn csv_format() {
        let rows = vec![
            CurveRow { freq_hz: 2.5e9, value_db: 19.1, flag: CurveFlag::Ok },
            CurveRow { freq_hz: 0.1, value_db: f64::INFINITY, flag: CurveFlag::Perfect },
        ];
        let mut out = Vec::new();
        write_curve_csv(&mut out, rows).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s, "freq_hz,value_db,flag\n2500000000.0,19.1,ok\n0.1,inf,perfect\n");
        let back: f64 = s.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 19.1);
    }
}
