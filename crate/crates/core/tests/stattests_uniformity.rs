//! Under ideal random input the p-values of each test are uniform on [0, 1].
//!
//! 10⁴ sequences of 20 000 bits from a ChaCha generator; the Kolmogorov–
//! Smirnov distance of each test's p-values from U(0,1) must stay below 0.02.
//! (With 10⁴ samples a perfect test sits near 0.009.) Tests whose p-values
//! are coarsely discrete at this length are exercised at full length by the
//! e fixtures and the acceptance run instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use vacuum_qrng::stattests::{basic, patterns, proportion_test, uniformity_test};

const SEQUENCES: usize = 10_000;
const LEN: usize = 20_000;

fn ks_distance(mut p: Vec<f64>) -> f64 {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn p_values_are_uniform_under_random_input() {
    let named: Vec<(&str, Vec<f64>)> = {
        let rows: Vec<Vec<f64>> = (0..SEQUENCES)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i as u64);
                let eps: Vec<u8> = (0..LEN).map(|_| rng.random_range(0..2u8)).collect();
                let serial = patterns::serial(&eps, 5);
                vec![
                    basic::frequency(&eps),
                    basic::block_frequency(&eps, 128),
                    basic::cumulative_sums(&eps, false),
                    basic::cumulative_sums(&eps, true),
                    basic::runs(&eps),
                    basic::longest_run(&eps).unwrap(),
                    patterns::approximate_entropy(&eps, 5),
                    serial[0],
                    serial[1],
                ]
            })
            .collect();
        let names = [
            "frequency",
            "block_frequency",
            "cumulative_sums_forward",
            "cumulative_sums_reverse",
            "runs",
            "longest_run",
            "approximate_entropy",
            "serial_1",
            "serial_2",
        ];
        names
            .iter()
            .enumerate()
            .map(|(k, n)| (*n, rows.iter().map(|r| r[k]).collect()))
            .collect()
    };
    for (name, p) in named {
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let d = ks_distance(p.clone());
        println!("{name}: KS distance {d:.4}");
        assert!(d < 0.02, "{name}: KS distance {d}");
        assert!(proportion_test(&p, 0.01).unwrap().pass, "{name}: proportion");
        assert!(uniformity_test(&p).unwrap() >= 1e-4, "{name}: uniformity");
    }
}

#[test]
fn uniformity_meta_test_accepts_uniform_p_values() {
    // Monte Carlo oracle: for truly uniform p-values the meta-test rejects
    // at rate ≈ 1e-4, so 2000 trials should see well under 0.1 % rejections.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let trials = 2000;
    let mut rejected = 0;
    for _ in 0..trials {
        let p: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        if uniformity_test(&p).unwrap() < 1e-4 {
            rejected += 1;
        }
    }
    assert!(rejected as f64 / trials as f64 <= 0.001, "{rejected} of {trials} rejected");
}
