//! Semiclassical quantization rules, semiclassical Husimi densities and the
//! coherent-state Green's function built from periodic orbits.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{bottom_limit, find_periodic_orbit, quadrature_action_period};
use crate::coherent::{CoherentParams, PhasePoint};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SymbolKind};
use crate::quad::UniformGrid;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizationRule {
    /// (𝓢 + 𝓘)(E) = (m + ½)h with the smoothed symbol.
    SmoothedPlusI,
    /// (𝓢 − 𝓘)(E) = (m + ½)h with the antismoothed symbol.
    AntismoothedMinusI,
    /// 𝓢(E) = (m + ½)h with the Weyl symbol.
    WeylWkb,
}

impl QuantizationRule {
    pub const ALL: [QuantizationRule; 3] =
        [QuantizationRule::SmoothedPlusI, QuantizationRule::AntismoothedMinusI, QuantizationRule::WeylWkb];

    pub fn kind(self) -> SymbolKind {
        match self {
            QuantizationRule::SmoothedPlusI => SymbolKind::Smoothed,
            QuantizationRule::AntismoothedMinusI => SymbolKind::Antismoothed,
            QuantizationRule::WeylWkb => SymbolKind::Weyl,
        }
    }

    pub fn sigma(self) -> f64 {
        self.kind().sigma()
    }

    pub fn name(self) -> &'static str {
        match self {
            QuantizationRule::SmoothedPlusI => "smoothed-plus-i",
            QuantizationRule::AntismoothedMinusI => "antismoothed-minus-i",
            QuantizationRule::WeylWkb => "weyl-wkb",
        }
    }
}

/// Orbit quantities at one energy for one rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyShell {
    pub energy: f64,
    /// Reduced action ∮p dq.
    pub action: f64,
    pub period: f64,
    pub dt_de: f64,
    /// 𝓘 over one period (zero for the Weyl rule).
    pub i_term: f64,
    pub di_de: f64,
}

impl EnergyShell {
    /// 𝓢 + σ𝓘.
    pub fn total_action(&self, rule: QuantizationRule) -> f64 {
        self.action + rule.sigma() * self.i_term
    }

    /// d(𝓢 + σ𝓘)/dE = T + σ d𝓘/dE.
    pub fn total_rate(&self, rule: QuantizationRule) -> f64 {
        self.period + rule.sigma() * self.di_de
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalLevel {
    pub m: usize,
    pub rule: QuantizationRule,
    pub energy: f64,
    pub action: f64,
    pub i_term: f64,
    pub period: f64,
    pub di_de: f64,
    /// Final |F(E)| / h.
    pub residual: f64,
}

/// 𝓢 and T by Gauss–Chebyshev quadrature, doubling the node count until the
/// action settles to 1e−13 relative.
pub fn action_period(model: &HamiltonianModel, kind: SymbolKind, energy: f64) -> Result<(f64, f64)> {
    let mut n = 64;
    let mut prev = quadrature_action_period(model, kind, energy, n)?;
    while n < 1 << 14 {
        n *= 2;
        let next = quadrature_action_period(model, kind, energy, n)?;
        if (next.0 - prev.0).abs() <= 1e-13 * next.0.abs() && (next.1 - prev.1).abs() <= 1e-12 * next.1.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Orbit quantities at `energy`. 𝓢, T come from turning-point quadrature;
/// 𝓘 and its derivative from the periodic orbit in the time domain.
pub fn energy_shell(model: &HamiltonianModel, rule: QuantizationRule, energy: f64) -> Result<EnergyShell> {
    let kind = rule.kind();
    let (action, period) = action_period(model, kind, energy)?;
    let (i_term, di_de, dt_de) = if rule == QuantizationRule::WeylWkb {
        let o = find_periodic_orbit(model, kind, energy)?;
        (0.0, 0.0, o.dt_de)
    } else {
        let o = find_periodic_orbit(model, kind, energy)?;
        (o.i_term, o.di_de, o.dt_de)
    };
    Ok(EnergyShell { energy, action, period, dt_de, i_term, di_de })
}

fn bottom(model: &HamiltonianModel, kind: SymbolKind) -> Result<f64> {
    let (_, vmin) = model
        .potential_minimum(kind)
        .ok_or(Error::Unbound { energy: f64::NAN, q_max: model.q_max() })?;
    Ok(vmin + model.kinetic_shift(kind))
}

/// Energy at which 𝓢 + σ𝓘 equals `target`, by bracketing from the bottom of
/// the well followed by Newton steps safeguarded with bisection.
pub fn solve_action(model: &HamiltonianModel, rule: QuantizationRule, target: f64, m: usize) -> Result<EnergyShell> {
    let kind = rule.kind();
    let h = 2.0 * PI * model.params.hbar;
    let e_min = bottom(model, kind)?;
    let (t0, i0) = bottom_limit(model, kind)?;
    let f_bottom = rule.sigma() * i0 - target;
    let omega0 = 2.0 * PI / t0;
    if f_bottom > 1e-10 * h {
        return Err(Error::NoBracket { m });
    }
    if f_bottom > -1e-10 * h {
        // the root sits at the bottom of the well; rates by a second-order
        // one-sided difference from the small-oscillation limit
        let d = 1e-3 * model.params.hbar * omega0;
        let s1 = energy_shell(model, rule, e_min + d)?;
        let s2 = energy_shell(model, rule, e_min + 2.0 * d)?;
        let slope = |y0: f64, y1: f64, y2: f64| (4.0 * (y1 - y0) - (y2 - y0)) / (2.0 * d);
        return Ok(EnergyShell {
            energy: e_min,
            action: 0.0,
            period: t0,
            dt_de: slope(t0, s1.period, s2.period),
            i_term: i0,
            di_de: slope(i0, s1.i_term, s2.i_term),
        });
    }
    let f = |e: f64| energy_shell(model, rule, e).map(|s| (s.total_action(rule) - target, s));

    let mut lo = e_min;
    let mut depth = (target - rule.sigma() * i0) * omega0 / (2.0 * PI);
    let mut hi_eval = None;
    for _ in 0..60 {
        let e = e_min + depth;
        match f(e) {
            Ok((fe, s)) if fe > 0.0 => {
                hi_eval = Some((e, fe, s));
                break;
            }
            Ok(_) => {
                lo = e;
                depth *= 2.0;
            }
            Err(Error::Unbound { .. }) => return Err(Error::NoBracket { m }),
            Err(e) => return Err(e),
        }
    }
    let (mut hi, _, mut best) = hi_eval.ok_or(Error::NoBracket { m })?;
    let mut e = hi;
    let mut fe = best.total_action(rule) - target;
    for _ in 0..100 {
        if fe.abs() < 1e-10 * h {
            return Ok(best);
        }
        let rate = best.total_rate(rule);
        let mut next = e - fe / rate;
        if !(next > lo && next < hi) || !rate.is_finite() || rate <= 0.0 {
            next = 0.5 * (lo + hi);
        }
        let (fn_, s) = f(next)?;
        if fn_ > 0.0 {
            hi = next;
        } else {
            lo = next;
        }
        e = next;
        fe = fn_;
        best = s;
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    if fe.abs() < 1e-8 * h {
        Ok(best)
    } else {
        Err(Error::NoConvergence { iterations: 100, residual: fe.abs() / h })
    }
}

/// Levels m in `levels` for one rule; (m + ½)h on the right-hand side.
pub fn quantize(model: &HamiltonianModel, rule: QuantizationRule, levels: std::ops::Range<usize>) -> Result<Vec<SemiclassicalLevel>> {
    let h = 2.0 * PI * model.params.hbar;
    levels
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&m| {
            let target = (m as f64 + 0.5) * h;
            let s = solve_action(model, rule, target, m)?;
            Ok(SemiclassicalLevel {
                m,
                rule,
                energy: s.energy,
                action: s.action,
                i_term: s.i_term,
                period: s.period,
                di_de: s.di_de,
                residual: (s.total_action(rule) - target).abs() / h,
            })
        })
        .collect()
}

/// Phase-space speed |ż| = √(½(q̇²/b² + ṗ²/c²)).
pub fn phase_speed(model: &HamiltonianModel, kind: SymbolKind, point: PhasePoint) -> f64 {
    let d = model.eval_real(kind, point);
    let CoherentParams { b, c, .. } = model.params;
    (0.5 * ((d.h_p / b).powi(2) + (d.h_q / c).powi(2))).sqrt()
}

/// Semiclassical Husimi density of one level on a tensor grid; NaN marks
/// grid points at an equilibrium where the formula is singular.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub q: UniformGrid,
    pub p: UniformGrid,
    /// Rows along q.
    pub rho: Vec<Vec<f64>>,
    pub level: usize,
    pub rule: QuantizationRule,
}

impl HusimiGrid {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "q,p,rho")?;
        for (i, row) in self.rho.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", self.q.x(i), self.p.x(j), v)?;
            }
        }
        Ok(())
    }

    pub fn missing(&self) -> usize {
        self.rho.iter().flatten().filter(|v| v.is_nan()).count()
    }
}

/// ρ(z) = √(2π)/(|ż|[T + σ d𝓘/dE]) exp{−(E_m − 𝓔(z) + σε(z))²/(2ħ²|ż|²)}.
pub fn husimi_point(model: &HamiltonianModel, rule: QuantizationRule, level: &SemiclassicalLevel, point: PhasePoint) -> Result<f64> {
    let kind = rule.kind();
    let speed = phase_speed(model, kind, point);
    if speed < 1e-12 {
        return Err(Error::StationaryPoint { q: point.q, p: point.p });
    }
    let sigma = rule.sigma();
    let rate = level.period + sigma * level.di_de;
    let shift = level.energy - model.energy(kind, point) + sigma * model.epsilon(kind, point);
    let hbar = model.params.hbar;
    Ok((2.0 * PI).sqrt() / (speed * rate) * (-(shift * shift) / (2.0 * hbar * hbar * speed * speed)).exp())
}

pub fn husimi_semiclassical(
    model: &HamiltonianModel,
    level: &SemiclassicalLevel,
    q: &UniformGrid,
    p: &UniformGrid,
) -> HusimiGrid {
    let rho = (0..q.n)
        .into_par_iter()
        .map(|i| {
            (0..p.n)
                .map(|j| husimi_point(model, level.rule, level, PhasePoint::new(q.x(i), p.x(j))).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    HusimiGrid { q: *q, p: *p, rho, level: level.m, rule: level.rule }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: Complex64,
    /// |1 − e^{iΦ}| fell below 1e−8.
    pub near_pole: bool,
}

/// G(z, E + iγ) summed over repeated traversals of the orbit through the
/// energy shell at E. 𝓢 and 𝓘 are continued to E + iγ by their Taylor
/// expansions about E.
pub fn greens_function(model: &HamiltonianModel, rule: QuantizationRule, point: PhasePoint, energy: f64, gamma: f64) -> Result<GreenValue> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParams(format!("gamma must be positive, got {gamma}")));
    }
    let shell = energy_shell(model, rule, energy)?;
    Ok(greens_from_shell(model, rule, &shell, point, gamma)?)
}

/// Same as [`greens_function`] with the orbit quantities supplied.
pub fn greens_from_shell(
    model: &HamiltonianModel,
    rule: QuantizationRule,
    shell: &EnergyShell,
    point: PhasePoint,
    gamma: f64,
) -> Result<GreenValue> {
    let kind = rule.kind();
    let hbar = model.params.hbar;
    let speed = phase_speed(model, kind, point);
    if speed < 1e-12 {
        return Err(Error::StationaryPoint { q: point.q, p: point.p });
    }
    let sigma = rule.sigma();
    let ig = I * gamma;
    let action = shell.action + ig * shell.period + 0.5 * ig * ig * shell.dt_de;
    let i_term = shell.i_term + ig * shell.di_de;
    let e_phi = (I * (action + sigma * i_term - PI * hbar) / hbar).exp();
    let denom = 1.0 - e_phi;
    let shift = shell.energy - model.energy(kind, point) + sigma * model.epsilon(kind, point) + ig;
    let gauss = (-(shift * shift) / (2.0 * hbar * hbar * speed * speed)).exp();
    let value = -I / hbar * (2.0 * PI).sqrt() / speed * e_phi / denom * gauss;
    Ok(GreenValue { value, near_pole: denom.norm() < 1e-8 })
}

/// Closed forms for the harmonic oscillator with b = √(ħ/ω), as functions of
/// m and |z|².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoReference {
    /// Residue of the full Green's function.
    SemiclassicalFull,
    /// Stationary time expanded about the period.
    SemiclassicalExpanded,
    Exact,
}

fn ln_factorial(m: usize) -> f64 {
    (1..=m).map(|k| (k as f64).ln()).sum()
}

pub fn ho_reference(m: usize, z2: f64, which: HoReference) -> f64 {
    let a = m as f64 + 0.5;
    match which {
        HoReference::SemiclassicalFull => {
            let log_ratio = if z2 > 0.0 { m as f64 * (z2 / a).ln() } else if m == 0 { 0.0 } else { f64::NEG_INFINITY };
            (a - z2 + log_ratio).exp() / (2.0 * PI * a).sqrt()
        }
        HoReference::SemiclassicalExpanded => {
            if z2 <= 0.0 {
                return f64::NAN;
            }
            (-(z2 - a).powi(2) / (2.0 * z2)).exp() / ((2.0 * PI).sqrt() * z2.sqrt())
        }
        HoReference::Exact => {
            let log_pow = if z2 > 0.0 { m as f64 * z2.ln() } else if m == 0 { 0.0 } else { f64::NEG_INFINITY };
            (-z2 + log_pow - ln_factorial(m)).exp()
        }
    }
}

/// |z|² at the maximum of the expanded semiclassical density,
/// (√(1 + 4(m + ½)²) − 1)/2 ≈ m + 1/(8(m + ½)).
pub fn ho_expanded_maximum(m: usize) -> f64 {
    let a = m as f64 + 0.5;
    0.5 * ((1.0 + 4.0 * a * a).sqrt() - 1.0)
}
