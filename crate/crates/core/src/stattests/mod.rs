//! The SP800-22 rev1a statistical test battery and its two meta-analyses:
//! the proportion of passing sequences and the uniformity of p-values.
//!
//! With default parameters the battery fills 188 p-value slots per sequence.
//! Individual tests are exposed in the submodules and take the sequence as
//! one byte per bit; [`run_test`] adds the minimum-length policy and
//! [`run_suite`] runs the whole catalog over many sequences.

pub mod basic;
pub mod excursions;
pub mod matrix;
pub mod patterns;
pub mod spectral;
pub mod templates;
pub mod universal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::special::igamc;

use excursions::{Excursions, EXCURSION_STATES, VARIANT_STATES};

/// Slot count of the catalog at default parameters.
pub const STANDARD_SLOT_COUNT: usize = 188;

/// Uniformity p-values below this fail.
pub const UNIFORMITY_THRESHOLD: f64 = 1e-4;

/// The fifteen tests of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Frequency,
    BlockFrequency,
    CumulativeSums,
    Runs,
    LongestRun,
    Rank,
    Dft,
    NonOverlappingTemplate,
    OverlappingTemplate,
    Universal,
    ApproximateEntropy,
    Serial,
    LinearComplexity,
    RandomExcursions,
    RandomExcursionsVariant,
}

impl TestId {
    pub const ALL: [TestId; 15] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::CumulativeSums,
        TestId::Runs,
        TestId::LongestRun,
        TestId::Rank,
        TestId::Dft,
        TestId::NonOverlappingTemplate,
        TestId::OverlappingTemplate,
        TestId::Universal,
        TestId::ApproximateEntropy,
        TestId::Serial,
        TestId::LinearComplexity,
        TestId::RandomExcursions,
        TestId::RandomExcursionsVariant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::Frequency => "frequency",
            TestId::BlockFrequency => "block_frequency",
            TestId::CumulativeSums => "cumulative_sums",
            TestId::Runs => "runs",
            TestId::LongestRun => "longest_run",
            TestId::Rank => "rank",
            TestId::Dft => "dft",
            TestId::NonOverlappingTemplate => "non_overlapping_template",
            TestId::OverlappingTemplate => "overlapping_template",
            TestId::Universal => "universal",
            TestId::ApproximateEntropy => "approximate_entropy",
            TestId::Serial => "serial",
            TestId::LinearComplexity => "linear_complexity",
            TestId::RandomExcursions => "random_excursions",
            TestId::RandomExcursionsVariant => "random_excursions_variant",
        }
    }
}

impl std::fmt::Display for TestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable parameters of the battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestParams {
    pub block_frequency_m: usize,
    pub non_overlapping_m: usize,
    pub approximate_entropy_m: usize,
    pub serial_m: usize,
    pub linear_complexity_m: usize,
}

impl Default for TestParams {
    fn default() -> Self {
        TestParams {
            block_frequency_m: 128,
            non_overlapping_m: 9,
            approximate_entropy_m: 10,
            serial_m: 16,
            linear_complexity_m: 500,
        }
    }
}

/// Template length of the overlapping test; its class probabilities are
/// tabulated for this length only.
pub const OVERLAPPING_M: usize = 9;

impl TestParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_frequency_m < 2 {
            return Err(Error::param("block_frequency_m", "must be at least 2"));
        }
        if !(2..=16).contains(&self.non_overlapping_m) {
            return Err(Error::param("non_overlapping_m", "must be in 2..=16"));
        }
        if !(1..=20).contains(&self.approximate_entropy_m) {
            return Err(Error::param("approximate_entropy_m", "must be in 1..=20"));
        }
        if !(3..=24).contains(&self.serial_m) {
            return Err(Error::param("serial_m", "must be in 3..=24"));
        }
        if self.linear_complexity_m < 2 {
            return Err(Error::param("linear_complexity_m", "must be at least 2"));
        }
        Ok(())
    }

    /// Shortest sequence on which `test` is run.
    pub fn min_length(&self, test: TestId) -> usize {
        match test {
            TestId::Frequency | TestId::Runs | TestId::CumulativeSums => 100,
            TestId::BlockFrequency => 100.max(self.block_frequency_m),
            TestId::LongestRun => basic::LONGEST_RUN_MIN_BITS,
            TestId::Rank => 38 * matrix::RANK_DIM * matrix::RANK_DIM,
            TestId::Dft => 1000,
            TestId::NonOverlappingTemplate => templates::NON_OVERLAPPING_BLOCKS << self.non_overlapping_m,
            TestId::OverlappingTemplate => 1_000_000,
            TestId::Universal => universal::UNIVERSAL_MIN_BITS,
            // m < floor(log2 n) - 5 and m < floor(log2 n) - 2 respectively.
            TestId::ApproximateEntropy => 1 << (self.approximate_entropy_m + 6),
            TestId::Serial => 1 << (self.serial_m + 3),
            TestId::LinearComplexity | TestId::RandomExcursions | TestId::RandomExcursionsVariant => 1_000_000,
        }
    }
}

/// One p-value slot of the catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slot {
    pub test: TestId,
    pub name: String,
}

/// The ordered list of p-value slots produced per sequence.
#[derive(Debug, Clone)]
pub struct TestCatalog {
    params: TestParams,
    templates: Vec<u32>,
    slots: Vec<Slot>,
}

impl TestCatalog {
    pub fn new(params: TestParams) -> Result<Self> {
        params.validate()?;
        let templates = templates::aperiodic_templates(params.non_overlapping_m);
        let mut slots = Vec::new();
        let mut push = |test: TestId, name: String| slots.push(Slot { test, name });
        for test in TestId::ALL {
            match test {
                TestId::CumulativeSums => {
                    push(test, "cumulative_sums_forward".into());
                    push(test, "cumulative_sums_reverse".into());
                }
                TestId::NonOverlappingTemplate => {
                    for &t in &templates {
                        let s = templates::template_string(t, params.non_overlapping_m);
                        push(test, format!("non_overlapping_template_{s}"));
                    }
                }
                TestId::Serial => {
                    push(test, "serial_1".into());
                    push(test, "serial_2".into());
                }
                TestId::RandomExcursions => {
                    for x in EXCURSION_STATES {
                        push(test, format!("random_excursions_x{x:+}"));
                    }
                }
                TestId::RandomExcursionsVariant => {
                    for x in VARIANT_STATES {
                        push(test, format!("random_excursions_variant_x{x:+}"));
                    }
                }
                _ => push(test, test.name().into()),
            }
        }
        Ok(TestCatalog { params, templates, slots })
    }

    /// The default catalog; its slot count is checked against 188.
    pub fn standard() -> Self {
        let c = TestCatalog::new(TestParams::default()).expect("default parameters are valid");
        assert_eq!(c.slots.len(), STANDARD_SLOT_COUNT, "standard catalog slot count");
        c
    }

    pub fn params(&self) -> &TestParams {
        &self.params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of slots filled by `test`.
    pub fn slot_count(&self, test: TestId) -> usize {
        self.slots.iter().filter(|s| s.test == test).count()
    }

    /// Runs every test on one sequence; returns one entry per slot.
    pub fn run_all(&self, eps: &[u8]) -> Vec<SlotOutcome> {
        let mut out = Vec::with_capacity(self.slots.len());
        for test in TestId::ALL {
            let k = self.slot_count(test);
            match self.run_bytes(test, eps) {
                TestOutcome::PValues(p) => {
                    debug_assert_eq!(p.len(), k);
                    out.extend(p.into_iter().map(SlotOutcome::P));
                }
                TestOutcome::NotApplicable { .. } => out.extend((0..k).map(|_| SlotOutcome::NotApplicable)),
                TestOutcome::InsufficientLength { .. } => {
                    out.extend((0..k).map(|_| SlotOutcome::InsufficientLength))
                }
            }
        }
        out
    }

    /// Runs one test on a byte-per-bit sequence.
    pub fn run_bytes(&self, test: TestId, eps: &[u8]) -> TestOutcome {
        let p = &self.params;
        let required = p.min_length(test);
        if eps.len() < required {
            return TestOutcome::InsufficientLength {
                required,
                actual: eps.len(),
            };
        }
        let na = |reason: &str| TestOutcome::NotApplicable { reason: reason.into() };
        let values = match test {
            TestId::Frequency => vec![basic::frequency(eps)],
            TestId::BlockFrequency => vec![basic::block_frequency(eps, p.block_frequency_m)],
            TestId::CumulativeSums => vec![basic::cumulative_sums(eps, false), basic::cumulative_sums(eps, true)],
            TestId::Runs => vec![basic::runs(eps)],
            TestId::LongestRun => match basic::longest_run(eps) {
                Some(v) => vec![v],
                None => return na("sequence shorter than one block"),
            },
            TestId::Rank => match matrix::rank(eps) {
                Some(v) => vec![v],
                None => return na("no complete matrix"),
            },
            TestId::Dft => vec![spectral::dft(eps)],
            TestId::NonOverlappingTemplate => templates::non_overlapping(
                eps,
                &self.templates,
                p.non_overlapping_m,
                templates::NON_OVERLAPPING_BLOCKS,
            ),
            TestId::OverlappingTemplate => match templates::overlapping(eps, OVERLAPPING_M) {
                Some(v) => vec![v],
                None => return na("no complete block"),
            },
            TestId::Universal => match universal::universal(eps) {
                Some(v) => vec![v],
                None => return na("no test blocks after initialisation"),
            },
            TestId::ApproximateEntropy => vec![patterns::approximate_entropy(eps, p.approximate_entropy_m)],
            TestId::Serial => patterns::serial(eps, p.serial_m).to_vec(),
            TestId::LinearComplexity => match matrix::linear_complexity(eps, p.linear_complexity_m) {
                Some(v) => vec![v],
                None => return na("no complete block"),
            },
            TestId::RandomExcursions => match excursions::random_excursions(eps) {
                Excursions::PValues(v) => v,
                Excursions::TooFewCycles { cycles, required } => {
                    return na(&format!("{cycles} cycles, {required} required"))
                }
            },
            TestId::RandomExcursionsVariant => match excursions::random_excursions_variant(eps) {
                Excursions::PValues(v) => v,
                Excursions::TooFewCycles { cycles, required } => {
                    return na(&format!("{cycles} cycles, {required} required"))
                }
            },
        };
        TestOutcome::PValues(values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

/// Result of running one test on one sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum TestOutcome {
    PValues(Vec<f64>),
    /// The test's own applicability condition failed (e.g. too few cycles).
    NotApplicable { reason: String },
    /// The sequence is shorter than the test's minimum length.
    InsufficientLength { required: usize, actual: usize },
}

/// Result of one slot on one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotOutcome {
    P(f64),
    NotApplicable,
    InsufficientLength,
}

impl SlotOutcome {
    pub fn p_value(self) -> Option<f64> {
        match self {
            SlotOutcome::P(p) => Some(p),
            _ => None,
        }
    }
}

/// Runs one test with the given parameters.
pub fn run_test(test: TestId, params: &TestParams, bits: &BitString) -> Result<TestOutcome> {
    let catalog = TestCatalog::new(params.clone())?;
    Ok(catalog.run_bytes(test, &bits.to_bytes01()))
}

/// Acceptance band of the proportion meta-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionResult {
    pub proportion: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Half width `3·sqrt(alpha(1-alpha)/count)` of the proportion band.
pub fn proportion_half_width(alpha: f64, count: usize) -> f64 {
    3.0 * (alpha * (1.0 - alpha) / count as f64).sqrt()
}

/// Fraction of p-values ≥ `alpha`, checked against
/// `(1-alpha) ± 3·sqrt(alpha(1-alpha)/count)`. Only the lower bound can
/// fail: a proportion above the band means every sequence passed.
pub fn proportion_test(p_values: &[f64], alpha: f64) -> Result<ProportionResult> {
    if p_values.is_empty() {
        return Err(Error::InsufficientData {
            what: "p-values for the proportion test".into(),
            required: 1,
            actual: 0,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    let count = p_values.len();
    let passed = p_values.iter().filter(|&&p| p >= alpha).count();
    let proportion = passed as f64 / count as f64;
    let half = proportion_half_width(alpha, count);
    let lower = 1.0 - alpha - half;
    let upper = (1.0 - alpha + half).min(1.0);
    Ok(ProportionResult {
        proportion,
        lower,
        upper,
        pass: proportion >= lower,
    })
}

/// χ² of p-values over ten equal bins of [0, 1]; returns `igamc(9/2, χ²/2)`.
pub fn uniformity_test(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::InsufficientData {
            what: "p-values for the uniformity test".into(),
            required: 1,
            actual: 0,
        });
    }
    let mut bins = [0usize; 10];
    for &p in p_values {
        bins[((p * 10.0).floor() as usize).min(9)] += 1;
    }
    let expected = p_values.len() as f64 / 10.0;
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
    Ok(igamc(4.5, chi2 / 2.0))
}

/// Meta-analysis of one slot across all sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotReport {
    pub test: TestId,
    pub slot_name: String,
    /// One entry per sequence; `None` where the slot did not apply.
    pub p_values: Vec<Option<f64>>,
    pub n_applicable: usize,
    pub proportion: Option<f64>,
    pub proportion_lower: Option<f64>,
    pub proportion_pass: Option<bool>,
    pub uniformity_p: Option<f64>,
    pub uniformity_pass: Option<bool>,
    /// Set when the sequence length was below the test's minimum.
    pub insufficient_length: bool,
}

impl SlotReport {
    /// `None` for slots without applicable sequences.
    pub fn passed(&self) -> Option<bool> {
        Some(self.proportion_pass? && self.uniformity_pass?)
    }
}

/// Result of the whole battery over many sequences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub sequence_len: usize,
    pub sequence_count: usize,
    pub alpha: f64,
    pub params: TestParams,
    pub slot_count: usize,
    pub slots_applicable: usize,
    pub slots_passed: usize,
    pub slots_insufficient_length: usize,
    pub passed: bool,
    pub slots: Vec<SlotReport>,
}

impl SuiteReport {
    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// Slots that had applicable sequences and failed a meta-test.
    pub fn failures(&self) -> impl Iterator<Item = &SlotReport> {
        self.slots.iter().filter(|s| s.passed() == Some(false))
    }
}

/// Splits `bits` into `sequence_count` sequences of `sequence_len` bits,
/// runs the default catalog on each and applies both meta-analyses.
pub fn run_suite(bits: &BitString, sequence_len: usize, sequence_count: usize, alpha: f64) -> Result<SuiteReport> {
    run_suite_with(&TestCatalog::standard(), bits, sequence_len, sequence_count, alpha)
}

/// [`run_suite`] with an explicit catalog.
pub fn run_suite_with(
    catalog: &TestCatalog,
    bits: &BitString,
    sequence_len: usize,
    sequence_count: usize,
    alpha: f64,
) -> Result<SuiteReport> {
    if sequence_len == 0 || sequence_count == 0 {
        return Err(Error::param("sequence_len/sequence_count", "must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    let required = sequence_len
        .checked_mul(sequence_count)
        .ok_or_else(|| Error::param("sequence_len", "sequence_len × sequence_count overflows"))?;
    if bits.len() < required {
        return Err(Error::InsufficientData {
            what: format!("bits for {sequence_count} sequences of {sequence_len}"),
            required,
            actual: bits.len(),
        });
    }
    let per_sequence: Vec<Vec<SlotOutcome>> = (0..sequence_count)
        .into_par_iter()
        .map(|i| catalog.run_all(&bits.slice(i * sequence_len, sequence_len).to_bytes01()))
        .collect();

    let mut slots = Vec::with_capacity(catalog.slots().len());
    for (k, slot) in catalog.slots().iter().enumerate() {
        let outcomes: Vec<SlotOutcome> = per_sequence.iter().map(|s| s[k]).collect();
        let p_values: Vec<Option<f64>> = outcomes.iter().map(|o| o.p_value()).collect();
        let applicable: Vec<f64> = p_values.iter().flatten().copied().collect();
        let insufficient = outcomes.iter().any(|o| *o == SlotOutcome::InsufficientLength);
        let (proportion, uniformity) = if applicable.is_empty() {
            (None, None)
        } else {
            (Some(proportion_test(&applicable, alpha)?), Some(uniformity_test(&applicable)?))
        };
        slots.push(SlotReport {
            test: slot.test,
            slot_name: slot.name.clone(),
            n_applicable: applicable.len(),
            p_values,
            proportion: proportion.map(|r| r.proportion),
            proportion_lower: proportion.map(|r| r.lower),
            proportion_pass: proportion.map(|r| r.pass),
            uniformity_p: uniformity,
            uniformity_pass: uniformity.map(|u| u >= UNIFORMITY_THRESHOLD),
            insufficient_length: insufficient,
        });
    }
    let slots_applicable = slots.iter().filter(|s| s.n_applicable > 0).count();
    let slots_passed = slots.iter().filter(|s| s.passed() == Some(true)).count();
    let slots_insufficient_length = slots.iter().filter(|s| s.insufficient_length).count();
    // Short sequences never pass silently: a skipped slot fails the suite.
    let passed = slots_insufficient_length == 0 && slots_applicable > 0 && slots_passed == slots_applicable;
    Ok(SuiteReport {
        sequence_len,
        sequence_count,
        alpha,
        params: catalog.params().clone(),
        slot_count: slots.len(),
        slots_applicable,
        slots_passed,
        slots_insufficient_length,
        passed,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_catalog_has_188_slots() {
        let c = TestCatalog::standard();
        let expected = [1, 1, 2, 1, 1, 1, 1, 148, 1, 1, 1, 2, 1, 8, 18];
        for (t, n) in TestId::ALL.iter().zip(expected) {
            assert_eq!(c.slot_count(*t), n, "{t}");
        }
        assert_eq!(c.slots().len(), 188);
    }

    #[test]
    fn proportion_band() {
        // 3·sqrt(0.01·0.99/1000)
        let half = proportion_half_width(0.01, 1000);
        let oracle = 3.0 * (0.0099f64 / 1000.0).sqrt();
        assert!((half - oracle).abs() < 1e-15);
        assert!((half - 0.0094393).abs() < 1e-7);

        let all = vec![0.5; 1000];
        let r = proportion_test(&all, 0.01).unwrap();
        assert_eq!(r.proportion, 1.0);
        assert!(r.pass);

        let half_fail: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.001 } else { 0.5 }).collect();
        let r = proportion_test(&half_fail, 0.01).unwrap();
        assert_eq!(r.proportion, 0.5);
        assert!(!r.pass);
        assert!(proportion_test(&[], 0.01).is_err());
    }

    #[test]
    fn uniformity_cases() {
        let one_per_bin: Vec<f64> = (0..10).map(|i| i as f64 / 10.0 + 0.05).collect();
        assert_eq!(uniformity_test(&one_per_bin).unwrap(), 1.0);
        for n in 6..40 {
            let same = vec![0.42; n];
            let p = uniformity_test(&same).unwrap();
            // χ² = 9N
            assert!((p - igamc(4.5, 9.0 * n as f64 / 2.0)).abs() < 1e-15);
            assert!(p < UNIFORMITY_THRESHOLD, "n = {n}: {p}");
        }
        assert!(uniformity_test(&[]).is_err());
        // p = 1 lands in the last bin.
        assert!(uniformity_test(&[1.0; 20]).unwrap() < 1e-4);
    }

    #[test]
    fn short_sequences_are_flagged() {
        let bits = BitString::from_str01("0101").unwrap();
        let out = run_test(TestId::Frequency, &TestParams::default(), &bits).unwrap();
        assert_eq!(out, TestOutcome::InsufficientLength { required: 100, actual: 4 });
    }

    #[test]
    fn suite_rejects_short_input() {
        let bits = BitString::zeros(1000);
        let err = run_suite(&bits, 1000, 2, 0.01).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { required: 2000, .. }));
    }
}
