//! Each test of the battery checked against the worked examples printed in
//! NIST SP 800-22 rev1a: the short example inputs, the first 100 bits of π
//! and the first 10⁶ bits of the binary expansion of e.
//!
//! The e fixture is embedded at compile time, so a missing file fails the
//! build instead of skipping the check.

use vacuum_qrng::stattests::{
    basic, excursions, matrix, patterns, spectral, templates, universal, TestCatalog, TestId, TestOutcome,
};
use vacuum_qrng::BitString;

const E_BITS: &[u8] = include_bytes!("fixtures/e_1e6.bin");

const PI_100: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|c| c - b'0').collect()
}

fn e_bits() -> Vec<u8> {
    let b = BitString::from_msb_bytes(E_BITS).to_bytes01();
    assert_eq!(b.len(), 1_000_000);
    b
}

#[track_caller]
fn close(actual: f64, expected: f64) {
    // Worked examples are printed to six decimals.
    assert!(
        (actual - expected).abs() <= 5e-7 + 1e-6 * expected.abs(),
        "got {actual:.7}, expected {expected}"
    );
}

#[test]
fn frequency_examples() {
    close(basic::frequency(&bits("1011010101")), 0.527089);
    close(basic::frequency(&bits(PI_100)), 0.109599);
    close(basic::frequency(&e_bits()), 0.953749);
}

#[test]
fn block_frequency_examples() {
    close(basic::block_frequency(&bits("0110011010"), 3), 0.801252);
    close(basic::block_frequency(&bits(PI_100), 10), 0.706438);
    close(basic::block_frequency(&e_bits(), 128), 0.211072);
}

#[test]
fn cumulative_sums_examples() {
    close(basic::cumulative_sums(&bits("1011010111"), false), 0.4116588);
    close(basic::cumulative_sums(&bits(PI_100), false), 0.219194);
    close(basic::cumulative_sums(&bits(PI_100), true), 0.114866);
    let e = e_bits();
    close(basic::cumulative_sums(&e, false), 0.669887);
    close(basic::cumulative_sums(&e, true), 0.724266);
}

#[test]
fn runs_examples() {
    close(basic::runs(&bits("1001101011")), 0.147232);
    close(basic::runs(&bits(PI_100)), 0.500798);
    close(basic::runs(&e_bits()), 0.561917);
}

#[test]
fn longest_run_examples() {
    let s = "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010";
    // The printed p-value (0.180609) does not follow from the printed
    // χ² = 4.882605, which gives 0.180598.
    close(basic::longest_run(&bits(s)).unwrap(), 0.180598);
    close(basic::longest_run(&e_bits()).unwrap(), 0.718945);
}

#[test]
fn rank_example() {
    close(matrix::rank(&e_bits()).unwrap(), 0.306156);
}

#[test]
fn dft_examples() {
    // The two short examples print peak counts that their own inputs do not
    // give: all five peak heights of the 10-bit example (0, 2, 4.47, 2,
    // 4.47) lie below T = 5.47, and 48 (not 46) of the first 50 peaks of π
    // lie below T = 17.31. Expected values here come from an independent
    // numpy FFT with those counts; the 10⁶-bit e result matches as printed.
    close(spectral::dft(&bits("1001010011")), 0.468160);
    close(spectral::dft(&bits(PI_100)), 0.646355);
    close(spectral::dft(&e_bits()), 0.847187);
}

#[test]
fn non_overlapping_template_examples() {
    let p = templates::non_overlapping(&bits("10100100101110010110"), &[0b001], 3, 2);
    close(p[0], 0.344154);
    let p = templates::non_overlapping(&e_bits(), &[0b000000001], 9, 8);
    close(p[0], 0.078790);
}

#[test]
fn overlapping_template_example() {
    // Class counts printed for e; the printed p-value (0.110434) uses the
    // superseded class probabilities, the corrected ones give 0.159027.
    assert_eq!(templates::overlapping_counts(&e_bits(), 9).unwrap(), [329, 164, 150, 111, 78, 136]);
    close(templates::overlapping(&e_bits(), 9).unwrap(), 0.159027);
}

#[test]
fn universal_example() {
    close(universal::universal(&e_bits()).unwrap(), 0.282568);
    assert_eq!(universal::universal_block_length(1_000_000), Some(7));
}

#[test]
fn approximate_entropy_examples() {
    close(patterns::approximate_entropy(&bits("0100110101"), 3), 0.261961);
    close(patterns::approximate_entropy(&bits(PI_100), 2), 0.235301);
    close(patterns::approximate_entropy(&e_bits(), 10), 0.700073);
}

#[test]
fn serial_examples() {
    let p = patterns::serial(&bits("0011011101"), 3);
    close(p[0], 0.808792);
    close(p[1], 0.670320);
    let p = patterns::serial(&e_bits(), 2);
    close(p[0], 0.843764);
    close(p[1], 0.561915);
}

#[test]
fn linear_complexity_example() {
    let e = e_bits();
    assert_eq!(matrix::linear_complexity_counts(&e, 1000).unwrap(), [11, 31, 116, 501, 258, 57, 26]);
    close(matrix::linear_complexity(&e, 1000).unwrap(), 0.845406);
    close(matrix::linear_complexity(&e, 500).unwrap(), 0.826335);
}

#[test]
fn random_excursions_example() {
    let excursions::Excursions::PValues(p) = excursions::random_excursions(&e_bits()) else {
        panic!("e has enough cycles");
    };
    let expected = [0.573306, 0.197996, 0.164011, 0.007779, 0.786868, 0.440912, 0.797854, 0.778186];
    for (a, e) in p.iter().zip(expected) {
        close(*a, e);
    }
}

#[test]
fn random_excursions_variant_example() {
    let excursions::Excursions::PValues(p) = excursions::random_excursions_variant(&e_bits()) else {
        panic!("e has enough cycles");
    };
    // States -9..=-1, 1..=9.
    let expected = [
        0.858946, 0.794755, 0.576249, 0.493417, 0.633873, 0.917283, 0.934708, 0.816012, 0.826009, 0.137861,
        0.200642, 0.441254, 0.939291, 0.505683, 0.445935, 0.512207, 0.538635, 0.593930,
    ];
    for (a, e) in p.iter().zip(expected) {
        close(*a, e);
    }
}

#[test]
fn trivial_frequency_cases() {
    let zeros = vec![0u8; 1000];
    assert!(basic::frequency(&zeros) < 1e-10);
    let alternating: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
    assert_eq!(basic::frequency(&alternating), 1.0);
}

#[test]
fn whole_catalog_on_e_is_in_range() {
    let catalog = TestCatalog::standard();
    let out = catalog.run_all(&e_bits());
    assert_eq!(out.len(), 188);
    for o in &out {
        let p = o.p_value().expect("every test applies to e");
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(matches!(
        catalog.run_bytes(TestId::Universal, &e_bits()[..1000]),
        TestOutcome::InsufficientLength { required: 387_840, actual: 1000 }
    ));
}
