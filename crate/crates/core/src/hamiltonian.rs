//! Hamiltonians `p²/2m + V(q)` with their Weyl, smoothed (H1) and
//! antismoothed (H2) symbols, evaluated at real or complex phase-space points.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentParams, PhasePoint};
use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 12;

/// Arithmetic needed to evaluate the closed-form symbols.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
{
    fn real(x: f64) -> Self;
    fn exp(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn real(x: f64) -> Self {
        x
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    Weyl,
    Smoothed,
    Antismoothed,
}

impl SymbolKind {
    pub const ALL: [SymbolKind; 3] = [SymbolKind::Weyl, SymbolKind::Smoothed, SymbolKind::Antismoothed];

    /// Sign of the 𝓘 term paired with this symbol.
    pub fn sigma(self) -> f64 {
        match self {
            SymbolKind::Weyl => 0.0,
            SymbolKind::Smoothed => 1.0,
            SymbolKind::Antismoothed => -1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            SymbolKind::Weyl => 0,
            SymbolKind::Smoothed => 1,
            SymbolKind::Antismoothed => 2,
        }
    }
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Weyl => "weyl",
            SymbolKind::Smoothed => "smoothed",
            SymbolKind::Antismoothed => "antismoothed",
        })
    }
}

/// Symbol value with first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalDerivatives<T> {
    pub h: T,
    pub h_q: T,
    pub h_p: T,
    pub h_qq: T,
    pub h_pp: T,
    pub h_qp: T,
}

impl<T: Scalar> LocalDerivatives<T> {
    /// ∂²H/∂u∂v = (b²/2) H_qq + (c²/2) H_pp.
    pub fn h_uv(&self, params: &CoherentParams) -> T {
        self.h_qq * (0.5 * params.b * params.b) + self.h_pp * (0.5 * params.c * params.c)
    }

    /// ε = ½ ∂²H/∂u∂v, the integrand of 𝓘.
    pub fn epsilon(&self, params: &CoherentParams) -> T {
        self.h_uv(params) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Harmonic { omega: f64 },
    /// V(q) = Σ coeffs[k] q^k
    Polynomial { coeffs: Vec<f64> },
    /// V(q) = Σ a e^{α q}
    ExpSum { terms: Vec<ExpTerm> },
}

impl Family {
    fn name(&self) -> &'static str {
        match self {
            Family::Harmonic { .. } => "harmonic",
            Family::Polynomial { .. } => "polynomial",
            Family::ExpSum { .. } => "exp-sum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Potential {
    Poly(Vec<f64>),
    Exp(Vec<ExpTerm>),
}

impl Potential {
    /// (V, V', V'')
    #[inline]
    fn eval<T: Scalar>(&self, q: T) -> (T, T, T) {
        match self {
            Potential::Poly(c) => {
                let (mut v, mut d1, mut d2) = (T::default(), T::default(), T::default());
                for &a in c.iter().rev() {
                    d2 = d2 * q + d1 * 2.0;
                    d1 = d1 * q + v;
                    v = v * q + T::real(a);
                }
                (v, d1, d2)
            }
            Potential::Exp(terms) => {
                let (mut v, mut d1, mut d2) = (T::default(), T::default(), T::default());
                for t in terms {
                    let e = (q * t.alpha).exp() * t.amplitude;
                    v = v + e;
                    d1 = d1 + e * t.alpha;
                    d2 = d2 + e * (t.alpha * t.alpha);
                }
                (v, d1, d2)
            }
        }
    }
}

/// Gaussian smoothing of a polynomial with the given variance in q; a
/// negative variance applies the inverse map.
pub fn smooth_polynomial(coeffs: &[f64], variance: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    for (n, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        // E[(q + X)^n] with X ~ N(0, s): Σ_k C(n, 2k) (2k−1)!! s^k q^{n−2k}
        let mut binom = 1.0; // C(n, 2k)
        let mut dfact = 1.0; // (2k−1)!!
        let mut sk = 1.0;
        for k in 0..=n / 2 {
            if k > 0 {
                let j = 2 * k;
                binom *= ((n - j + 2) * (n - j + 1)) as f64 / ((j - 1) * j) as f64;
                dfact *= (2 * k - 1) as f64;
                sk *= variance;
            }
            out[n - 2 * k] += a * binom * dfact * sk;
        }
    }
    out
}

/// Coefficients of the Gaussian smoothing of `q^n`.
pub fn smooth_monomial(n: usize, variance: f64) -> Result<Vec<f64>> {
    if n > MAX_DEGREE {
        return Err(Error::DegreeTooHigh { degree: n, max: MAX_DEGREE });
    }
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    Ok(smooth_polynomial(&c, variance))
}

/// A time-independent Hamiltonian `p²/2m + V(q)` together with its three symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianModel {
    pub mass: f64,
    pub family: Family,
    pub params: CoherentParams,
    potentials: [Potential; 3],
    minima: [Option<(f64, f64)>; 3],
    scan_range: f64,
    q_max: f64,
}

impl HamiltonianModel {
    pub fn new(mass: f64, family: Family, params: CoherentParams) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {mass}")));
        }
        let s = 0.5 * params.b * params.b;
        let potentials = match &family {
            Family::Harmonic { omega } => {
                if !(*omega > 0.0) {
                    return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
                }
                let k = 0.5 * mass * omega * omega;
                [
                    Potential::Poly(vec![0.0, 0.0, k]),
                    Potential::Poly(vec![k * s, 0.0, k]),
                    Potential::Poly(vec![-k * s, 0.0, k]),
                ]
            }
            Family::Polynomial { coeffs } => {
                if coeffs.len() > MAX_DEGREE + 1 {
                    return Err(Error::DegreeTooHigh { degree: coeffs.len() - 1, max: MAX_DEGREE });
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParams("polynomial coefficients must be finite".into()));
                }
                [
                    Potential::Poly(coeffs.clone()),
                    Potential::Poly(smooth_polynomial(coeffs, s)),
                    Potential::Poly(smooth_polynomial(coeffs, -s)),
                ]
            }
            Family::ExpSum { terms } => {
                if terms.iter().any(|t| !t.amplitude.is_finite() || !t.alpha.is_finite()) {
                    return Err(Error::InvalidParams("exponential terms must be finite".into()));
                }
                let scaled = |sign: f64| {
                    terms
                        .iter()
                        .map(|t| ExpTerm {
                            amplitude: t.amplitude * (sign * t.alpha * t.alpha * params.b * params.b / 4.0).exp(),
                            alpha: t.alpha,
                        })
                        .collect::<Vec<_>>()
                };
                [Potential::Exp(terms.clone()), Potential::Exp(scaled(1.0)), Potential::Exp(scaled(-1.0))]
            }
        };
        let mut model = Self {
            mass,
            family,
            params,
            potentials,
            minima: [None; 3],
            scan_range: 50.0,
            q_max: 1e3,
        };
        model.refresh_minima();
        Ok(model)
    }

    pub fn harmonic(mass: f64, omega: f64, params: CoherentParams) -> Result<Self> {
        Self::new(mass, Family::Harmonic { omega }, params)
    }

    pub fn polynomial(mass: f64, coeffs: Vec<f64>, params: CoherentParams) -> Result<Self> {
        Self::new(mass, Family::Polynomial { coeffs }, params)
    }

    pub fn free_particle(mass: f64, params: CoherentParams) -> Result<Self> {
        Self::new(mass, Family::Polynomial { coeffs: vec![] }, params)
    }

    /// `V0 [e^{α(q−A)} + e^{−α(q+A)}]`
    pub fn barrier(v0: f64, alpha: f64, a: f64, mass: f64, params: CoherentParams) -> Result<Self> {
        if !(alpha > 0.0 && a > 0.0) {
            return Err(Error::InvalidParams(format!("barrier needs alpha > 0 and A > 0, got {alpha}, {a}")));
        }
        let amp = v0 * (-alpha * a).exp();
        Self::new(
            mass,
            Family::ExpSum {
                terms: vec![ExpTerm { amplitude: amp, alpha }, ExpTerm { amplitude: amp, alpha: -alpha }],
            },
            params,
        )
    }

    /// Same Hamiltonian with different coherent-state widths.
    pub fn with_params(&self, params: CoherentParams) -> Result<Self> {
        let mut m = Self::new(self.mass, self.family.clone(), params)?;
        m.scan_range = self.scan_range;
        m.q_max = self.q_max;
        m.refresh_minima();
        Ok(m)
    }

    /// Half-width of the window scanned for the potential minimum.
    pub fn with_scan_range(mut self, range: f64) -> Self {
        self.scan_range = range;
        self.refresh_minima();
        self
    }

    /// Largest |q| searched for turning points.
    pub fn with_q_max(mut self, q_max: f64) -> Self {
        self.q_max = q_max;
        self
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    /// Polynomial coefficients of the symbol's potential, if polynomial.
    pub fn potential_coefficients(&self, kind: SymbolKind) -> Option<&[f64]> {
        match &self.potentials[kind.index()] {
            Potential::Poly(c) => Some(c),
            Potential::Exp(_) => None,
        }
    }

    /// Constant added to the kinetic term: ±c²/4m.
    pub fn kinetic_shift(&self, kind: SymbolKind) -> f64 {
        let c2 = self.params.c * self.params.c / (4.0 * self.mass);
        kind.sigma() * c2
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, kind: SymbolKind, q: T, p: T) -> LocalDerivatives<T> {
        let (v, v1, v2) = self.potentials[kind.index()].eval(q);
        let im = 1.0 / self.mass;
        LocalDerivatives {
            h: p * p * (0.5 * im) + v + T::real(self.kinetic_shift(kind)),
            h_q: v1,
            h_p: p * im,
            h_qq: v2,
            h_pp: T::real(im),
            h_qp: T::default(),
        }
    }

    pub fn eval_symbol(&self, kind: SymbolKind, q: Complex64, p: Complex64) -> LocalDerivatives<Complex64> {
        self.eval(kind, q, p)
    }

    pub fn eval_real(&self, kind: SymbolKind, point: PhasePoint) -> LocalDerivatives<f64> {
        self.eval(kind, point.q, point.p)
    }

    pub fn energy(&self, kind: SymbolKind, point: PhasePoint) -> f64 {
        self.eval_real(kind, point).h
    }

    /// Potential part of the symbol (without the kinetic shift).
    pub fn potential(&self, kind: SymbolKind, q: f64) -> f64 {
        self.potentials[kind.index()].eval(q).0
    }

    pub fn potential_derivatives(&self, kind: SymbolKind, q: f64) -> (f64, f64, f64) {
        self.potentials[kind.index()].eval(q)
    }

    /// ε(z) = b²/4 H_qq + c²/4 H_pp.
    pub fn epsilon(&self, kind: SymbolKind, point: PhasePoint) -> f64 {
        self.eval_real(kind, point).epsilon(&self.params)
    }

    /// Location and value of the global minimum of the symbol's potential
    /// (kinetic shift not included); `None` if not confining within the scan window.
    pub fn potential_minimum(&self, kind: SymbolKind) -> Option<(f64, f64)> {
        self.minima[kind.index()]
    }

    fn refresh_minima(&mut self) {
        for kind in SymbolKind::ALL {
            self.minima[kind.index()] = self.find_minimum(kind);
        }
    }

    fn find_minimum(&self, kind: SymbolKind) -> Option<(f64, f64)> {
        if let Family::Harmonic { .. } = self.family {
            return Some((0.0, self.potential(kind, 0.0)));
        }
        let n = 4001;
        let r = self.scan_range;
        let h = 2.0 * r / (n - 1) as f64;
        let v = |q: f64| self.potential(kind, q);
        let mut best = (0usize, f64::INFINITY);
        for i in 0..n {
            let val = v(-r + h * i as f64);
            if val < best.1 {
                best = (i, val);
            }
        }
        if best.0 == 0 || best.0 == n - 1 || !best.1.is_finite() {
            return None;
        }
        // golden-section refinement on the bracketing cells
        let (mut a, mut b) = (-r + h * (best.0 - 1) as f64, -r + h * (best.0 + 1) as f64);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (v(x1), v(x2));
        for _ in 0..200 {
            if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = v(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = v(x2);
            }
        }
        let q = 0.5 * (a + b);
        Some((q, v(q)))
    }

    /// Left and right turning points where `H(q, 0) = energy`, searched
    /// outward from the potential minimum.
    pub fn turning_points(&self, kind: SymbolKind, energy: f64) -> Result<(f64, f64)> {
        let e = energy - self.kinetic_shift(kind);
        let (q0, vmin) = self
            .potential_minimum(kind)
            .ok_or(Error::Unbound { energy, q_max: self.scan_range })?;
        if e < vmin {
            return Err(Error::BelowMinimum { energy, minimum: vmin + self.kinetic_shift(kind) });
        }
        let v = |q: f64| self.potential(kind, q);
        let search = |dir: f64| -> Result<f64> {
            let mut inner = q0;
            let mut step = 1e-6 * (1.0 + q0.abs());
            loop {
                let outer = q0 + dir * ((inner - q0).abs() + step);
                if outer.abs() > self.q_max {
                    return Err(Error::Unbound { energy, q_max: self.q_max });
                }
                if v(outer) >= e {
                    let (mut a, mut b) = (inner, outer);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m == a || m == b {
                            break;
                        }
                        if v(m) >= e {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    return Ok(0.5 * (a + b));
                }
                inner = outer;
                step *= 2.0;
            }
        };
        Ok((search(-1.0)?, search(1.0)?))
    }
}
