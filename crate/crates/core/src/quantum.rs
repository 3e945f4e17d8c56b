//! Exact reference: diagonalization in the particle-in-a-box sine basis on
//! [−L, L], eigenstate propagation and exact Husimi densities.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{bargmann_transform, CoherentParams, PhasePoint};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SymbolKind};
use crate::quad::{composite_gauss_legendre, simpson, UniformGrid};

/// φ_n(x) = L^{−1/2} sin(nπx/2L + nπ/2), n = 1..=N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub half_width: f64,
    pub size: usize,
}

/// How the basis size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisSpec {
    Size(usize),
    MaxEnergy(f64),
}

impl SpectralBasis {
    pub fn new(half_width: f64, size: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) || size == 0 {
            return Err(Error::InvalidParams(format!("basis needs L > 0 and N ≥ 1, got L = {half_width}, N = {size}")));
        }
        Ok(Self { half_width, size })
    }

    /// φ_n(x) with n starting at 1; zero outside the box.
    pub fn phi(&self, n: usize, x: f64) -> f64 {
        let l = self.half_width;
        if x.abs() > l {
            return 0.0;
        }
        let nf = n as f64;
        (nf * PI * (x + l) / (2.0 * l)).sin() / l.sqrt()
    }

    /// All N basis functions at x.
    pub fn phis(&self, x: f64) -> Vec<f64> {
        let l = self.half_width;
        if x.abs() > l {
            return vec![0.0; self.size];
        }
        // sin(nθ) by the Chebyshev recurrence
        let th = PI * (x + l) / (2.0 * l);
        let (s1, c1) = th.sin_cos();
        let norm = 1.0 / l.sqrt();
        let mut out = Vec::with_capacity(self.size);
        let (mut prev, mut cur) = (0.0, s1);
        for _ in 0..self.size {
            out.push(cur * norm);
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        out
    }

    /// Kinetic energy n²π²ħ²/(8L²m) of φ_n.
    pub fn kinetic(&self, n: usize, hbar: f64, mass: f64) -> f64 {
        let nf = n as f64;
        nf * nf * PI * PI * hbar * hbar / (8.0 * self.half_width * self.half_width * mass)
    }

    pub fn max_energy(&self, hbar: f64, mass: f64) -> f64 {
        self.kinetic(self.size, hbar, mass)
    }
}

fn confining_wall(model: &HamiltonianModel) -> impl Fn(f64) -> f64 + '_ {
    move |l: f64| model.potential(SymbolKind::Weyl, l).min(model.potential(SymbolKind::Weyl, -l))
}

/// Bisection for the smallest L > 0 with g(L) = 0, g increasing through zero.
fn bisect_wall(g: impl Fn(f64) -> f64, q_max: f64, e_max: f64) -> Result<f64> {
    let mut hi = 1e-3;
    while g(hi) < 0.0 {
        hi *= 1.5;
        if hi > q_max {
            return Err(Error::NotConfining { e_max });
        }
    }
    let mut lo = hi / 1.5;
    if g(lo) >= 0.0 {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Box and basis size. With `Size(N)`, L solves V(L) = N²π²ħ²/(8L²m); with
/// `MaxEnergy(E)`, L solves V(L) = E and N = ⌈√(8L²Em)/(πħ)⌉.
pub fn build_basis(model: &HamiltonianModel, spec: BasisSpec, half_width: Option<f64>) -> Result<SpectralBasis> {
    let (hbar, mass) = (model.params.hbar, model.mass);
    let wall = confining_wall(model);
    match spec {
        BasisSpec::Size(n) => {
            if n == 0 {
                return Err(Error::InvalidParams("basis size must be positive".into()));
            }
            let l = match half_width {
                Some(l) => l,
                None => {
                    let e_of = |l: f64| (n as f64 * PI * hbar).powi(2) / (8.0 * l * l * mass);
                    let l = bisect_wall(|l| wall(l) - e_of(l), model.q_max(), f64::NAN)
                        .map_err(|_| Error::NotConfining { e_max: e_of(model.q_max()) })?;
                    l
                }
            };
            SpectralBasis::new(l, n)
        }
        BasisSpec::MaxEnergy(e_max) => {
            if !(e_max > 0.0) {
                return Err(Error::InvalidParams(format!("E_max must be positive, got {e_max}")));
            }
            let l = match half_width {
                Some(l) => {
                    if wall(l) < e_max {
                        return Err(Error::NotConfining { e_max });
                    }
                    l
                }
                None => bisect_wall(|l| wall(l) - e_max, model.q_max(), e_max)?,
            };
            let n = ((8.0 * l * l * e_max * mass).sqrt() / (PI * hbar)).ceil() as usize;
            SpectralBasis::new(l, n.max(1))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub basis: SpectralBasis,
    pub params: CoherentParams,
    pub mass: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column k holds the coefficients of level k in the sine basis.
    pub vectors: DMatrix<f64>,
    /// Leading levels that agree with the 1.25N re-run to 1e−5 relative.
    pub trusted: usize,
    /// Largest ‖Hv − Ev‖ over the trusted levels.
    pub max_residual: f64,
}

fn hamiltonian_matrix(model: &HamiltonianModel, basis: &SpectralBasis, panels: usize) -> DMatrix<f64> {
    let l = basis.half_width;
    let (xs, ws) = composite_gauss_legendre(-l, l, panels, 8);
    let n = basis.size;
    let cols: Vec<Vec<f64>> = xs.par_iter().map(|&x| basis.phis(x)).collect();
    let phi = DMatrix::from_fn(n, xs.len(), |i, k| cols[k][i]);
    let weighted = DMatrix::from_fn(n, xs.len(), |i, k| cols[k][i] * ws[k] * model.potential(SymbolKind::Weyl, xs[k]));
    let mut h = &weighted * phi.transpose();
    for i in 0..n {
        h[(i, i)] += basis.kinetic(i + 1, model.params.hbar, model.mass);
    }
    // symmetrize away rounding
    let ht = h.transpose();
    (h + ht) * 0.5
}

fn potential_diagonal(model: &HamiltonianModel, basis: &SpectralBasis, panels: usize) -> Vec<f64> {
    let l = basis.half_width;
    let (xs, ws) = composite_gauss_legendre(-l, l, panels, 8);
    let mut d = vec![0.0; basis.size];
    for (x, w) in xs.iter().zip(&ws) {
        let v = w * model.potential(SymbolKind::Weyl, *x);
        for (di, p) in d.iter_mut().zip(basis.phis(*x)) {
            *di += v * p * p;
        }
    }
    d
}

fn eigen_sorted(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (energies, vectors)
}

/// Dense symmetric eigensolve. Trusted levels come from a re-run with 1.25N
/// basis functions on the same box.
pub fn diagonalize(model: &HamiltonianModel, basis: &SpectralBasis) -> Result<EigenSolution> {
    let panels = 2 * basis.size;
    let d1 = potential_diagonal(model, basis, panels);
    let d2 = potential_diagonal(model, basis, 2 * panels);
    let scale = d2.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if let Some(k) = (0..d1.len()).find(|&k| (d1[k] - d2[k]).abs() > 1e-10 * scale) {
        return Err(Error::QuadratureFailure(format!(
            "potential element ({k}, {k}) changes from {} to {} on doubling the panels",
            d1[k], d2[k]
        )));
    }

    let h = hamiltonian_matrix(model, basis, panels);
    let (energies, vectors) = eigen_sorted(h.clone());

    let bigger = SpectralBasis { size: (basis.size * 5).div_ceil(4), ..*basis };
    let (check, _) = eigen_sorted(hamiltonian_matrix(model, &bigger, 2 * bigger.size));
    let trusted = energies
        .iter()
        .zip(&check)
        .take_while(|(a, b)| ((*a - *b) / a.abs().max(1e-300)).abs() < 1e-5)
        .count();

    let mut max_residual: f64 = 0.0;
    for k in 0..trusted {
        let v = vectors.column(k);
        let r = &h * v - energies[k] * v;
        max_residual = max_residual.max(r.norm() / v.norm());
    }
    Ok(EigenSolution { basis: *basis, params: model.params, mass: model.mass, energies, vectors, trusted, max_residual })
}

/// Basis coefficients ⟨φ_n|ψ⟩ and the captured fraction of ‖ψ‖².
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// Coefficients in the eigenbasis.
    pub coefficients: Vec<Complex64>,
    pub captured: f64,
    /// Set when less than 1 − 1e−8 of ‖ψ0‖² is captured.
    pub leakage: bool,
}

impl EigenSolution {
    /// Ψ_k(x).
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        let phis = self.basis.phis(x);
        self.vectors.column(k).iter().zip(&phis).map(|(c, p)| c * p).sum()
    }

    pub fn eigenfunction_on(&self, k: usize, grid: &UniformGrid) -> Vec<f64> {
        (0..grid.n).into_par_iter().map(|i| self.eigenfunction(k, grid.x(i))).collect()
    }

    fn finish_expansion(&self, basis_coeffs: Vec<Complex64>, norm2: f64) -> Expansion {
        let n = self.basis.size;
        let re = DVector::from_iterator(n, basis_coeffs.iter().map(|c| c.re));
        let im = DVector::from_iterator(n, basis_coeffs.iter().map(|c| c.im));
        let vt = self.vectors.transpose();
        let (a, b) = (&vt * re, &vt * im);
        let coefficients: Vec<Complex64> = a.iter().zip(b.iter()).map(|(r, i)| Complex64::new(*r, *i)).collect();
        let captured = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / norm2;
        Expansion { coefficients, captured, leakage: captured < 1.0 - 1e-8 }
    }

    /// Expansion of ψ given as a function, by Gauss–Legendre quadrature on the box.
    pub fn expand_fn(&self, psi: impl Fn(f64) -> Complex64 + Sync) -> Expansion {
        let l = self.basis.half_width;
        let (xs, ws) = composite_gauss_legendre(-l, l, 4 * self.basis.size, 8);
        let vals: Vec<Complex64> = xs.par_iter().map(|&x| psi(x)).collect();
        let mut c = vec![Complex64::default(); self.basis.size];
        let mut norm2 = 0.0;
        for ((x, w), v) in xs.iter().zip(&ws).zip(&vals) {
            norm2 += w * v.norm_sqr();
            for (ci, p) in c.iter_mut().zip(self.basis.phis(*x)) {
                *ci += w * p * v;
            }
        }
        self.finish_expansion(c, norm2)
    }

    /// Expansion of ψ sampled on a grid, by Simpson quadrature. ‖ψ‖² counts
    /// the whole grid, so anything outside the box shows up as leakage.
    pub fn expand_samples(&self, psi: &[Complex64], grid: &UniformGrid) -> Result<Expansion> {
        if psi.len() != grid.n {
            return Err(Error::InvalidParams(format!("psi has {} samples but grid has {}", psi.len(), grid.n)));
        }
        let phis: Vec<Vec<f64>> = (0..grid.n).into_par_iter().map(|i| self.basis.phis(grid.x(i))).collect();
        let c: Vec<Complex64> = (0..self.basis.size)
            .into_par_iter()
            .map(|n| {
                let f: Vec<Complex64> = psi.iter().zip(&phis).map(|(v, p)| v * p[n]).collect();
                simpson(&f, grid.step)
            })
            .collect();
        let norm2 = simpson(&psi.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), grid.step);
        Ok(self.finish_expansion(c, norm2))
    }

    /// Σ_k a_k e^{−iE_k t/ħ} Ψ_k(x) on the grid, for each time.
    pub fn evolve(&self, expansion: &Expansion, grid: &UniformGrid, times: &[f64]) -> Vec<Vec<Complex64>> {
        let hbar = self.params.hbar;
        let psi_k: Vec<Vec<f64>> = (0..grid.n)
            .into_par_iter()
            .map(|i| {
                let phis = DVector::from_vec(self.basis.phis(grid.x(i)));
                (self.vectors.tr_mul(&phis)).iter().copied().collect()
            })
            .collect();
        times
            .iter()
            .map(|&t| {
                let a: Vec<Complex64> = expansion
                    .coefficients
                    .iter()
                    .zip(&self.energies)
                    .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t / hbar))
                    .collect();
                psi_k.par_iter().map(|row| row.iter().zip(&a).map(|(p, c)| c * *p).sum()).collect()
            })
            .collect()
    }

    /// Expectation of H in an expansion.
    pub fn energy_of(&self, expansion: &Expansion) -> f64 {
        let w: f64 = expansion.coefficients.iter().map(|c| c.norm_sqr()).sum();
        expansion.coefficients.iter().zip(&self.energies).map(|(c, e)| c.norm_sqr() * e).sum::<f64>() / w
    }

    /// Eigenvalue table with columns n, E_n, trusted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,E_n,trusted")?;
        for (k, e) in self.energies.iter().enumerate() {
            writeln!(w, "{k},{e:.16e},{}", k < self.trusted)?;
        }
        Ok(())
    }
}

/// Evolution result together with the leakage diagnostics of the expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub psi: Vec<Vec<Complex64>>,
    pub captured: f64,
    pub leakage: bool,
}

/// Expands ψ0 (sampled on `grid`), advances each eigencomponent and resums.
pub fn evolve_exact(solution: &EigenSolution, psi0: &[Complex64], grid: &UniformGrid, times: &[f64]) -> Result<Evolved> {
    let ex = solution.expand_samples(psi0, grid)?;
    if ex.leakage {
        log::warn!("basis captures only {:.10} of the initial norm", ex.captured);
    }
    Ok(Evolved { psi: solution.evolve(&ex, grid, times), captured: ex.captured, leakage: ex.leakage })
}

/// |⟨z|Ψ_m⟩|² on a tensor grid, rows along q. The eigenfunction is sampled on
/// 8N + 1 points across the box and Bargmann-transformed.
pub fn husimi_exact(solution: &EigenSolution, level: usize, q: &UniformGrid, p: &UniformGrid) -> Result<Vec<Vec<f64>>> {
    if level >= solution.energies.len() {
        return Err(Error::InvalidParams(format!("level {level} is beyond the basis")));
    }
    if level >= solution.trusted {
        log::warn!("level {level} is not among the {} trusted levels", solution.trusted);
    }
    let l = solution.basis.half_width;
    let xg = UniformGrid::spanning(-l, l, (8 * solution.basis.size).max(2048) + 1);
    let psi: Vec<Complex64> = solution.eigenfunction_on(level, &xg).into_iter().map(Complex64::from).collect();
    let params = solution.params;
    (0..q.n)
        .into_par_iter()
        .map(|i| {
            (0..p.n)
                .map(|j| Ok(bargmann_transform(&psi, &xg, PhasePoint::new(q.x(i), p.x(j)), &params)?.norm_sqr()))
                .collect()
        })
        .collect()
}

/// ∫ρ dq dp/(2πħ) by the trapezoid rule on the tensor grid.
pub fn husimi_norm(rho: &[Vec<f64>], q: &UniformGrid, p: &UniformGrid, hbar: f64) -> f64 {
    let wq = |i: usize| if i == 0 || i == q.n - 1 { 0.5 } else { 1.0 };
    let wp = |j: usize| if j == 0 || j == p.n - 1 { 0.5 } else { 1.0 };
    let mut s = 0.0;
    for (i, row) in rho.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            s += wq(i) * wp(j) * v;
        }
    }
    s * q.step * p.step / (2.0 * PI * hbar)
}
