//! Coherent states |z⟩, their position wavefunctions, overlaps and the
//! Bargmann transform of sampled states.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{simpson, trapezoid, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Width scales of the coherent-state family, with `b * c = hbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentParams {
    pub b: f64,
    pub c: f64,
    pub hbar: f64,
}

impl CoherentParams {
    pub fn new(b: f64, hbar: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) || !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParams(format!("need b > 0 and hbar > 0, got b = {b}, hbar = {hbar}")));
        }
        Ok(Self { b, c: hbar / b, hbar })
    }

    /// The width matched to a harmonic oscillator, `b = sqrt(hbar / (m ω))`.
    pub fn matched(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && omega > 0.0) {
            return Err(Error::InvalidParams(format!("need mass > 0 and omega > 0, got {mass}, {omega}")));
        }
        Self::new((hbar / (mass * omega)).sqrt(), hbar)
    }

    pub fn label(&self, q: f64, p: f64) -> Complex64 {
        Complex64::new(q / self.b, p / self.c) / SQRT_2
    }

    /// Complex (q, p) from a pair (u, v); real points have `v = conj(u)`.
    pub fn qp_of_uv(&self, u: Complex64, v: Complex64) -> (Complex64, Complex64) {
        (self.b * (u + v) / SQRT_2, -I * self.c * (u - v) / SQRT_2)
    }

    pub fn uv_of_qp(&self, q: Complex64, p: Complex64) -> (Complex64, Complex64) {
        let (qs, ps) = (q / self.b, p / self.c);
        ((qs + I * ps) / SQRT_2, (qs - I * ps) / SQRT_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexLabel {
    pub z: Complex64,
}

impl ComplexLabel {
    pub fn new(z: Complex64) -> Self {
        Self { z }
    }
    pub fn x(&self) -> f64 {
        self.z.re
    }
    pub fn y(&self) -> f64 {
        self.z.im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPhase {
    pub u: Complex64,
    pub v: Complex64,
}

impl ComplexPhase {
    pub fn of_label(z: ComplexLabel) -> Self {
        Self { u: z.z, v: z.z.conj() }
    }
}

pub fn label_of(point: PhasePoint, params: &CoherentParams) -> ComplexLabel {
    ComplexLabel { z: params.label(point.q, point.p) }
}

pub fn point_of(label: ComplexLabel, params: &CoherentParams) -> PhasePoint {
    PhasePoint { q: SQRT_2 * params.b * label.z.re, p: SQRT_2 * params.c * label.z.im }
}

fn norm_const(params: &CoherentParams) -> f64 {
    PI.powf(-0.25) / params.b.sqrt()
}

/// ⟨x|z⟩ for the coherent state centred at `point`.
pub fn wavefunction(point: PhasePoint, params: &CoherentParams, x: f64) -> Complex64 {
    let d = (x - point.q) / params.b;
    let phase = point.p * (x - 0.5 * point.q) / params.hbar;
    norm_const(params) * Complex64::from_polar((-0.5 * d * d).exp(), phase)
}

/// ⟨x|z⟩ written through the label, `exp[-½(x/b − √2 z)² + z(z − z*)/2]`.
pub fn wavefunction_from_label(label: ComplexLabel, params: &CoherentParams, x: f64) -> Complex64 {
    let z = label.z;
    let w = Complex64::new(x / params.b, 0.0) - SQRT_2 * z;
    norm_const(params) * (-0.5 * w * w + 0.5 * z * (z - z.conj())).exp()
}

/// ⟨z1|z2⟩.
pub fn overlap(z1: ComplexLabel, z2: ComplexLabel) -> Complex64 {
    (-0.5 * z1.z.norm_sqr() + z1.z.conj() * z2.z - 0.5 * z2.z.norm_sqr()).exp()
}

/// ⟨z|ψ⟩ for ψ sampled on `grid`.
pub fn bargmann_transform(
    psi: &[Complex64],
    grid: &UniformGrid,
    point: PhasePoint,
    params: &CoherentParams,
) -> Result<Complex64> {
    if psi.len() != grid.n {
        return Err(Error::InvalidParams(format!("psi has {} samples but grid has {}", psi.len(), grid.n)));
    }
    let mut norm2 = 0.0;
    let vals: Vec<Complex64> = psi
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let v = wavefunction(point, params, grid.x(i)).conj() * f;
            norm2 += f.norm_sqr();
            v
        })
        .collect();
    let s = simpson(&vals, grid.step);
    let t = trapezoid(&vals, grid.step);
    let diff = (s - t).norm();
    if diff > 1e-6 * s.norm() && diff > 1e-12 * (norm2 * grid.step).sqrt() {
        return Err(Error::GridTooCoarse(format!(
            "Simpson and trapezoid estimates differ by {diff:e} at (q, p) = ({}, {})",
            point.q, point.p
        )));
    }
    Ok(s)
}
