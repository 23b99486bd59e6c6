//! Bessel (maximally flat group delay) lowpass response.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::bisect;

/// An `order`-pole Bessel lowpass normalised so that `|H(f3db)| = 1/sqrt(2)`.
#[derive(Debug, Clone)]
pub struct BesselLowpass {
    order: u32,
    f3db_hz: f64,
    /// Reverse Bessel polynomial coefficients, `coeffs[k]` multiplies `s^k`.
    coeffs: Vec<f64>,
    /// Normalised angular frequency at which the prototype is 3 dB down.
    omega_3db: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl BesselLowpass {
    pub fn new(order: u32, f3db_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("bessel_order", "must be at least 1"));
        }
        if !(f3db_hz > 0.0 && f3db_hz.is_finite()) {
            return Err(Error::param("f3db_hz", format!("must be positive, got {f3db_hz}")));
        }
        let n = order;
        let coeffs: Vec<f64> = (0..=n)
            .map(|k| {
                factorial(2 * n - k) / (2f64.powi((n - k) as i32) * factorial(k) * factorial(n - k))
            })
            .collect();
        let mut filt = BesselLowpass {
            order,
            f3db_hz,
            coeffs,
            omega_3db: 1.0,
        };
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let w = bisect(|w| filt.prototype(w).norm() - half, 1e-6, 4.0 * n as f64 + 4.0, 200);
        filt.omega_3db = w;
        Ok(filt)
    }

    fn prototype(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let mut den = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            den = den * s + c;
        }
        Complex64::new(self.coeffs[0], 0.0) / den
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn f3db_hz(&self) -> f64 {
        self.f3db_hz
    }

    /// Complex response at frequency `f_hz` (may be negative).
    pub fn response(&self, f_hz: f64) -> Complex64 {
        self.prototype(f_hz / self.f3db_hz * self.omega_3db)
    }

    /// `|H(f)|`.
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm()
    }

    /// `|H(f)|^2`.
    pub fn power_gain(&self, f_hz: f64) -> f64 {
        self.response(f_hz).norm_sqr()
    }

    /// Equivalent noise bandwidth `∫_0^∞ |H(f)|² df`.
    pub fn noise_bandwidth_hz(&self) -> f64 {
        // |H|^2 falls as f^(-2n); 60 cutoffs out the remainder is negligible.
        crate::units::simpson(|f| self.power_gain(f), 0.0, 60.0 * self.f3db_hz, 60_000)
    }
}

/// Magnitude of an `order`-pole Bessel lowpass with cutoff `f3db_hz` at `f_hz`.
pub fn bessel_response(f_hz: f64, order: u32, f3db_hz: f64) -> Result<f64> {
    if f_hz < 0.0 {
        return Err(Error::param("f", "frequency must be non-negative"));
    }
    Ok(BesselLowpass::new(order, f3db_hz)?.magnitude(f_hz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_gain_and_cutoff() {
        assert!((bessel_response(0.0, 5, 2.5e9).unwrap() - 1.0).abs() < 1e-15);
        let m = bessel_response(2.5e9, 5, 2.5e9).unwrap();
        assert!((m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((20.0 * m.log10() + 3.0103).abs() < 1e-3);
    }

    #[test]
    fn fifth_order_prototype_cutoff() {
        // Known normalised 3 dB frequency of the 5-pole delay-normalised Bessel filter.
        let f = BesselLowpass::new(5, 1.0).unwrap();
        assert!((f.omega_3db - 2.427_410_702).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(bessel_response(1.0, 5, 0.0).is_err());
        assert!(bessel_response(1.0, 5, -1.0).is_err());
        assert!(BesselLowpass::new(0, 1.0).is_err());
    }

    #[test]
    fn strictly_decreasing() {
        for order in 1..=8 {
            let f = BesselLowpass::new(order, 2.5e9).unwrap();
            let mut prev = f.magnitude(0.0);
            for i in 1..2000 {
                let m = f.magnitude(i as f64 * 1e7);
                assert!(m < prev, "order {order} not decreasing at {i}");
                prev = m;
            }
        }
    }

    #[test]
    fn noise_bandwidth_of_fifth_order() {
        // Oracle: trapezoid rule on a different grid.
        let f = BesselLowpass::new(5, 2.5e9).unwrap();
        let df = 1e6;
        let mut acc = 0.5 * f.power_gain(0.0);
        for i in 1..100_000 {
            acc += f.power_gain(i as f64 * df);
        }
        let trap = acc * df;
        let enbw = f.noise_bandwidth_hz();
        assert!((enbw - trap).abs() / trap < 1e-6);
        assert!((enbw / 2.5e9 - 1.0386).abs() < 1e-3);
    }
}
