//! Continuous-argument bookkeeping for square roots of complex prefactors.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this modulus a sample is treated as a zero of the tracked function.
pub const ZERO_MODULUS: f64 = 1e-13;

/// Incremental unwinding of `arg w(t)` starting from the principal value at the first sample.
#[derive(Debug, Clone, Copy)]
pub struct PhaseTracker {
    arg: f64,
    count: usize,
}

impl Default for PhaseTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl PhaseTracker {
    pub fn new() -> Self {
        Self { arg: 0.0, count: 0 }
    }

    /// Feeds the next sample; returns the continuous argument.
    pub fn push(&mut self, w: Complex64) -> Result<f64> {
        if !(w.norm() >= ZERO_MODULUS) {
            return Err(Error::ZeroCrossing { index: self.count });
        }
        let a = w.arg();
        if self.count == 0 {
            self.arg = a;
        } else {
            let mut d = a - self.arg.rem_euclid(2.0 * PI);
            d = d.rem_euclid(2.0 * PI);
            if d > PI {
                d -= 2.0 * PI;
            }
            self.arg += d;
        }
        self.count += 1;
        Ok(self.arg)
    }

    pub fn arg(&self) -> f64 {
        self.arg
    }

    /// `w^{1/2}` on the continued branch, given the current modulus.
    pub fn sqrt_of(&self, w: Complex64) -> Complex64 {
        Complex64::from_polar(w.norm().sqrt(), 0.5 * self.arg)
    }
}

/// Unwinds the argument of a sampled complex sequence (jump threshold π) and
/// returns half of it per sample.
pub fn phase_continue(samples: &[Complex64]) -> Result<Vec<f64>> {
    let mut tr = PhaseTracker::new();
    samples.iter().map(|&w| tr.push(w).map(|a| 0.5 * a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_has_zero_phase() {
        let s = vec![Complex64::new(1.0, 0.0); 3];
        assert_eq!(phase_continue(&s).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_full_turn_gives_half_argument_pi() {
        let s: Vec<_> = (0..=64).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0)).collect();
        let h = phase_continue(&s).unwrap();
        assert!((h[64] - PI).abs() < 1e-12);
        let pref = Complex64::from_polar(1.0, -h[64]);
        assert!((pref + 1.0).norm() < 1e-12);
    }

    #[test]
    fn winding_four_pi() {
        let s: Vec<_> = (0..=200).map(|k| Complex64::from_polar(2.0, 4.0 * PI * k as f64 / 200.0)).collect();
        let h = phase_continue(&s).unwrap();
        assert!((h[200] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn zero_sample_is_rejected() {
        let s = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(phase_continue(&s), Err(Error::ZeroCrossing { index: 1 }));
    }

    #[test]
    fn negative_winding() {
        let s: Vec<_> = (0..=40).map(|k| Complex64::from_polar(1.0, -3.0 * PI * k as f64 / 40.0)).collect();
        let h = phase_continue(&s).unwrap();
        assert!((h[40] + 1.5 * PI).abs() < 1e-12);
    }
}
