use crate::bits::BitString;
use crate::error::{Error, Result};

use super::ToeplitzSeed;

/// Toeplitz hash by the definition: `y_i = XOR_j T[i][j]·x_j` with
/// `T[i][j] = seed[i - j + n - 1]`. Quadratic and bit-at-a-time; it is the
/// oracle the fast kernels are checked against.
pub fn toeplitz_hash_ref(seed: &ToeplitzSeed, x: &BitString) -> Result<BitString> {
    let (n, m) = (seed.n(), seed.m());
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let s = seed.bits();
    let mut y = BitString::zeros(m);
    for i in 0..m {
        let mut acc = false;
        for j in 0..n {
            acc ^= s.get(i + n - 1 - j) & x.get(j);
        }
        y.set(i, acc);
    }
    Ok(y)
}

/// The explicit `m × n` matrix, row-major.
pub fn toeplitz_matrix(seed: &ToeplitzSeed) -> Vec<Vec<u8>> {
    let (n, m) = (seed.n(), seed.m());
    (0..m)
        .map(|i| (0..n).map(|j| seed.bits().bit(i + n - 1 - j)).collect())
        .collect()
}
