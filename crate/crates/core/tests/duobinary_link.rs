//! Link-level behaviour of the receiver used for data: noiseless decoding,
//! SNR monotonicity, bookkeeping of the photocurrent, the duobinary shape
//! formed by the Bessel response, and the 4 Gb/s OOK eye.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vacuum_qrng::duobinary::{
    duobinary_decode, duobinary_encode, eye_diagram, precode, simulate_link, Link, LinkParams, Modulation,
};
use vacuum_qrng::receiver::ReceiverParams;

#[test]
fn round_trip_one_million_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d: Vec<u8> = (0..1_000_000).map(|_| rng.random_range(0..2u8)).collect();
    let c = duobinary_encode(&precode(&d));
    assert!(c.iter().all(|&v| v <= 2));
    assert_eq!(duobinary_decode(&c), d);
}

#[test]
fn noiseless_link_is_error_free() {
    let rx = ReceiverParams::default();
    for base in [LinkParams::duobinary_10g(), LinkParams::ook_4g()] {
        for dbm in [-40.0, -20.0, -5.0] {
            let p = LinkParams {
                noise_enabled: false,
                rx_power_dbm: dbm,
                ..base.clone()
            };
            let pt = simulate_link(&rx, &p, 200_000, 5).unwrap();
            assert_eq!(pt.errors_counted, 0, "{:?} at {dbm} dBm", p.modulation);
            assert!(pt.is_reportable());
        }
    }
}

#[test]
fn ber_falls_with_power_and_ook_beats_duobinary() {
    let rx = ReceiverParams::default();
    let db = Link::new(&rx, &LinkParams::duobinary_10g(), 3).unwrap();
    let ook = Link::new(&rx, &LinkParams::ook_4g(), 3).unwrap();
    let powers: Vec<f64> = (-30..=-8).map(f64::from).collect();
    let n = 200_000;
    let a = db.sweep(&powers, n, 11).unwrap();
    let b = ook.sweep(&powers, n, 11).unwrap();
    for w in a.windows(2) {
        // Non-increasing within 3σ of the binomial noise of the counts.
        let slack = 3.0 * (w[0].ber * (1.0 - w[0].ber) / n as f64).sqrt();
        assert!(w[1].ber <= w[0].ber + slack, "{:?}", w);
    }
    for (x, y) in a.iter().zip(&b) {
        let sigma = ((x.ber + y.ber) / n as f64).sqrt();
        assert!(y.ber <= x.ber + 3.0 * sigma, "OOK {y:?} vs duobinary {x:?}");
        if x.ber > 1e-3 {
            assert!(y.ber < x.ber);
        }
    }
}

#[test]
fn sweeps_do_not_depend_on_thread_count() {
    let rx = ReceiverParams::default();
    let link = Link::new(&rx, &LinkParams::duobinary_10g(), 3).unwrap();
    let powers = [-26.0, -25.0, -24.0];
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| link.sweep(&powers, 100_000, 9)).unwrap();
    let b = three.install(|| link.sweep(&powers, 100_000, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mean_photocurrent_matches_optical_power() {
    let rx = ReceiverParams::default();
    for base in [LinkParams::duobinary_10g(), LinkParams::ook_4g()] {
        let p = LinkParams {
            noise_enabled: false,
            ..base
        };
        let link = Link::new(&rx, &p, 1).unwrap();
        let (wave, mean_optical_w) = link.waveform(20_000, 4).unwrap();
        let mean_current = wave.iter().sum::<f64>() / wave.len() as f64;
        let expected = p.responsivity_a_per_w * mean_optical_w;
        assert!((mean_current / expected - 1.0).abs() < 0.005, "{mean_current} vs {expected}");
    }
}

#[test]
fn ten_gbps_nrz_through_bessel_is_three_level() {
    let rx = ReceiverParams::default();
    let p = LinkParams {
        noise_enabled: false,
        rx_power_dbm: -8.0,
        ..LinkParams::duobinary_10g()
    };
    let link = Link::new(&rx, &p, 1).unwrap();
    let (wave, _) = link.waveform(20_000, 2).unwrap();
    let (_, on) = p.current_levels();
    let sps = p.samples_per_symbol;
    let phase = link.receiver().delay_samples % sps;
    // Histogram of decision-phase samples in units of the on level.
    let mut hist = [0usize; 20];
    for v in wave.iter().skip(16 * sps + phase).step_by(sps) {
        let x = v / on;
        hist[((x * 20.0).floor().clamp(0.0, 19.0)) as usize] += 1;
    }
    let total: usize = hist.iter().sum();
    let mass = |lo: usize, hi: usize| hist[lo..hi].iter().sum::<usize>() as f64 / total as f64;
    // Three separated clusters near 0, 1/2 and 1 with empty gaps between.
    assert!(mass(0, 5) > 0.15 && mass(7, 13) > 0.3 && mass(15, 20) > 0.15, "{hist:?}");
    assert_eq!(hist[5] + hist[6] + hist[13] + hist[14], 0, "{hist:?}");
    assert_eq!(link.receiver().modulation, Modulation::Duobinary);
}

#[test]
fn four_gbps_ook_eye_is_open_at_120_microamps() {
    let rx = ReceiverParams::default();
    let p = LinkParams::ook_4g();
    assert!((p.rx_power_dbm + 9.2).abs() < 0.01);
    let link = Link::new(&rx, &p, 1).unwrap();
    let (wave, _) = link.waveform(4000, 8).unwrap();
    let eye = eye_diagram(&wave, p.samples_per_symbol, 64).unwrap();
    assert_eq!(eye.total as usize, wave.len());
    assert_eq!(eye.counts.iter().flatten().sum::<u64>(), eye.total);
    assert!(eye.eye_opening > 0.0, "opening {}", eye.eye_opening);
    // Most of the 240 µA swing survives the noise.
    assert!(eye.eye_opening > 100e-6, "opening {}", eye.eye_opening);
}
