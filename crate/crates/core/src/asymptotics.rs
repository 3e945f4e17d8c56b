//! Stationary-phase evaluation of ∫g(x) e^{if(x)/ħ} dx with its first
//! correction in ħ, plus the tools used to check it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Derivatives at the stationary point: f, f′, …, f⁗ and g, g′, g″.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaInput {
    pub f: [f64; 5],
    pub g: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaResult {
    /// √(2πħ/|f″|) g e^{iπs/4 + if/ħ}.
    pub a0: Complex64,
    pub r: f64,
    /// A0 (1 + iħR).
    pub corrected: Complex64,
}

/// Correction coefficient R(x0).
pub fn correction(input: &SpaInput) -> f64 {
    let [_, _, f2, f3, f4] = input.f;
    let [g0, g1, g2] = input.g;
    (f2 * g2 - f3 * g1) / (2.0 * f2 * f2 * g0) + (5.0 * f3 * f3 - 3.0 * f2 * f4) / (24.0 * f2 * f2 * f2)
}

pub fn spa_integrate(input: &SpaInput, hbar: f64) -> Result<SpaResult> {
    let [f0, f1, f2, _, _] = input.f;
    if !(hbar > 0.0) {
        return Err(Error::InvalidParams(format!("hbar must be positive, got {hbar}")));
    }
    if f2.abs() < 1e-14 {
        return Err(Error::DegenerateStationaryPoint { f2 });
    }
    if f1.abs() > 1e-10 * f2.abs().max(1.0) {
        return Err(Error::NotStationary { f1 });
    }
    if input.g[0] == 0.0 {
        return Err(Error::Degenerate("g vanishes at the stationary point".into()));
    }
    let s = f2.signum();
    let a0 = (2.0 * PI * hbar / f2.abs()).sqrt() * input.g[0] * (I * (0.25 * PI * s + f0 / hbar)).exp();
    let r = correction(input);
    Ok(SpaResult { a0, r, corrected: a0 * (1.0 + I * hbar * r) })
}

/// ∫ h(x) dx along the line x = e^{iθ} y, y ∈ [−Y, Y], by the trapezoid rule
/// with n intervals. Valid when h is entire and decays in the sector swept
/// between the real axis and the rotated line; the rule is spectrally
/// accurate for such integrands.
pub fn rotated_line_integral(h: impl Fn(Complex64) -> Complex64, theta: f64, half_width: f64, n: usize) -> Complex64 {
    let dir = Complex64::from_polar(1.0, theta);
    let step = 2.0 * half_width / n as f64;
    let mut acc = Complex64::default();
    for k in 0..=n {
        let y = -half_width + step * k as f64;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * h(dir * y);
    }
    acc * dir * step
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Errors of the leading and corrected SPA against the rotated-contour
/// value, for f = x² + x⁴, g = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaErrorSample {
    pub hbar: f64,
    pub reference: Complex64,
    pub leading_error: f64,
    pub corrected_error: f64,
}

pub fn quartic_phase_errors(hbar: f64) -> Result<SpaErrorSample> {
    let input = SpaInput { f: [0.0, 0.0, 2.0, 0.0, 24.0], g: [1.0, 0.0, 0.0] };
    let spa = spa_integrate(&input, hbar)?;
    // e^{iπ/8} makes both i x²/ħ and i x⁴/ħ decay
    let reference = rotated_line_integral(|x| (I * (x * x + x * x * x * x) / hbar).exp(), PI / 8.0, 12.0 * hbar.sqrt().max(hbar.powf(0.25)), 4000);
    let scale = spa.a0.norm();
    Ok(SpaErrorSample {
        hbar,
        reference,
        leading_error: (reference - spa.a0).norm() / scale,
        corrected_error: (reference - spa.corrected).norm() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_gaussian_is_exact() {
        let r = spa_integrate(&SpaInput { f: [0.0, 0.0, 2.0, 0.0, 0.0], g: [1.0, 0.0, 0.0] }, 0.1).unwrap();
        assert_eq!(r.r, 0.0);
        let exact = (PI * 0.1).sqrt() * Complex64::from_polar(1.0, PI / 4.0);
        assert!((r.a0 - exact).norm() < 1e-15);
        let num = rotated_line_integral(|x| (I * x * x / 0.1).exp(), PI / 4.0, 4.0, 400);
        assert!((num - exact).norm() < 1e-13);
    }

    #[test]
    fn quartic_phase_coefficient() {
        let input = SpaInput { f: [0.0, 0.0, 2.0, 0.0, 24.0], g: [1.0, 0.0, 0.0] };
        assert!((correction(&input) + 0.75).abs() < 1e-15);
    }

    #[test]
    fn amplitude_curvature_coefficient_matches_gaussian_moments() {
        // ∫(1 + x²)e^{ix²/ħ} dx = √(πħ)e^{iπ/4}(1 + iħ/2)
        let input = SpaInput { f: [0.0, 0.0, 2.0, 0.0, 0.0], g: [1.0, 0.0, 2.0] };
        let hbar = 0.3;
        let r = spa_integrate(&input, hbar).unwrap();
        assert!((r.r - 0.5).abs() < 1e-15);
        let num = rotated_line_integral(|x| (1.0 + x * x) * (I * x * x / hbar).exp(), PI / 4.0, 6.0, 600);
        assert!((num - r.corrected).norm() < 1e-12);
    }

    #[test]
    fn negative_curvature_phase() {
        let r = spa_integrate(&SpaInput { f: [0.3, 0.0, -2.0, 0.0, 0.0], g: [1.0, 0.0, 0.0] }, 0.1).unwrap();
        let num = rotated_line_integral(|x| (I * (0.3 - x * x) / 0.1).exp(), -PI / 4.0, 4.0, 400);
        assert!((num - r.a0).norm() < 1e-13);
    }

    #[test]
    fn invalid_points() {
        let flat = SpaInput { f: [0.0, 0.0, 0.0, 1.0, 0.0], g: [1.0, 0.0, 0.0] };
        assert!(matches!(spa_integrate(&flat, 0.1), Err(Error::DegenerateStationaryPoint { .. })));
        let sloped = SpaInput { f: [0.0, 0.1, 2.0, 0.0, 0.0], g: [1.0, 0.0, 0.0] };
        assert!(matches!(spa_integrate(&sloped, 0.1), Err(Error::NotStationary { .. })));
    }

    #[test]
    fn reference_integral_is_converged() {
        let hbar = 0.05;
        let a = rotated_line_integral(|x| (I * (x * x + x * x * x * x) / hbar).exp(), PI / 8.0, 3.0, 4000);
        let b = rotated_line_integral(|x| (I * (x * x + x * x * x * x) / hbar).exp(), PI / 8.0, 4.0, 8000);
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn error_orders_in_hbar() {
        // the ħ³ term of the quartic series is large, so the orders only
        // separate cleanly well below ħ = 0.1
        let hs = [0.0125, 0.00625, 0.003125, 0.0015625];
        let samples: Vec<SpaErrorSample> = hs.iter().map(|&h| quartic_phase_errors(h).unwrap()).collect();
        let lead: Vec<f64> = samples.iter().map(|s| s.leading_error).collect();
        let corr: Vec<f64> = samples.iter().map(|s| s.corrected_error).collect();
        let s1 = loglog_slope(&hs, &lead);
        let s2 = loglog_slope(&hs, &corr);
        assert!((s1 - 1.0).abs() < 0.15, "leading slope {s1}");
        assert!((s2 - 2.0).abs() < 0.3, "corrected slope {s2}");
    }

    #[test]
    fn residual_matches_next_gaussian_moment() {
        // next term of the series is −(105/32)ħ²
        let h = 0.002;
        let e = quartic_phase_errors(h).unwrap().corrected_error;
        let predicted = 105.0 / 32.0 * h * h;
        assert!((e / predicted - 1.0).abs() < 0.05, "{e} vs {predicted}");
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [0.1, 0.2, 0.4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.7).abs() < 1e-12);
    }
}
