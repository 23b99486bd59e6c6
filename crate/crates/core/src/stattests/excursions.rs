//! Random-excursions and random-excursions-variant tests.

use crate::special::{erfc, igamc};

/// Fewest zero-crossing cycles for which the excursion tests apply.
pub const MIN_CYCLES: usize = 500;

/// States of the random-excursions test, in reporting order.
pub const EXCURSION_STATES: [i32; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];

/// States of the variant test, in reporting order.
pub const VARIANT_STATES: [i32; 18] = [-9, -8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Partial sums of the ±1 walk.
fn walk(eps: &[u8]) -> Vec<i32> {
    let mut s = 0i32;
    eps.iter()
        .map(|&b| {
            s += if b == 1 { 1 } else { -1 };
            s
        })
        .collect()
}

/// Number of cycles: zeros of the walk plus a final open cycle.
fn cycle_count(s: &[i32]) -> usize {
    let zeros = s.iter().filter(|&&v| v == 0).count();
    zeros + usize::from(s.last().is_some_and(|&v| v != 0))
}

/// Required cycle count for a sequence of `n` bits.
pub fn required_cycles(n: usize) -> usize {
    (0.005 * (n as f64).sqrt()).ceil().max(MIN_CYCLES as f64) as usize
}

/// Outcome of an excursion test.
#[derive(Debug, Clone, PartialEq)]
pub enum Excursions {
    PValues(Vec<f64>),
    TooFewCycles { cycles: usize, required: usize },
}

/// Probability that a cycle visits state `x` exactly `k` times (k = 5 means ≥ 5).
fn visit_probability(x: i32, k: usize) -> f64 {
    let a = 1.0 / (2.0 * x.unsigned_abs() as f64);
    match k {
        0 => 1.0 - a,
        5 => a * (1.0 - a).powi(4),
        _ => a * a * (1.0 - a).powi(k as i32 - 1),
    }
}

/// Random-excursions test: one p-value per state in [`EXCURSION_STATES`].
pub fn random_excursions(eps: &[u8]) -> Excursions {
    let s = walk(eps);
    let j = cycle_count(&s);
    let required = required_cycles(eps.len());
    if j < required {
        return Excursions::TooFewCycles { cycles: j, required };
    }
    // nu[state][k]: cycles visiting the state k times (≥ 5 pooled).
    let mut nu = [[0usize; 6]; 8];
    let mut visits = [0usize; 8];
    let index = |v: i32| -> Option<usize> {
        match v {
            -4..=-1 => Some((v + 4) as usize),
            1..=4 => Some((v + 3) as usize),
            _ => None,
        }
    };
    let mut close = |visits: &mut [usize; 8]| {
        for (row, c) in nu.iter_mut().zip(visits.iter_mut()) {
            row[(*c).min(5)] += 1;
            *c = 0;
        }
    };
    for &v in &s {
        if v == 0 {
            close(&mut visits);
        } else if let Some(i) = index(v) {
            visits[i] += 1;
        }
    }
    if s.last().is_some_and(|&v| v != 0) {
        close(&mut visits);
    }
    let jf = j as f64;
    let p = EXCURSION_STATES
        .iter()
        .zip(nu.iter())
        .map(|(&x, row)| {
            let chi2: f64 = (0..6)
                .map(|k| {
                    let e = jf * visit_probability(x, k);
                    (row[k] as f64 - e).powi(2) / e
                })
                .sum();
            igamc(2.5, chi2 / 2.0)
        })
        .collect();
    Excursions::PValues(p)
}

/// Random-excursions-variant test: one p-value per state in [`VARIANT_STATES`].
pub fn random_excursions_variant(eps: &[u8]) -> Excursions {
    let s = walk(eps);
    let j = cycle_count(&s);
    let required = required_cycles(eps.len());
    if j < required {
        return Excursions::TooFewCycles { cycles: j, required };
    }
    let mut counts = [0usize; 19];
    for &v in &s {
        if (-9..=9).contains(&v) {
            counts[(v + 9) as usize] += 1;
        }
    }
    let jf = j as f64;
    let p = VARIANT_STATES
        .iter()
        .map(|&x| {
            let xi = counts[(x + 9) as usize] as f64;
            let den = (2.0 * jf * (4.0 * x.abs() as f64 - 2.0)).sqrt();
            erfc((xi - jf).abs() / den)
        })
        .collect();
    Excursions::PValues(p)
}
