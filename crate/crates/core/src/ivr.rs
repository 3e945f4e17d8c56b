//! Mixed position/coherent-state propagators ⟨x|K(t)|z′⟩ built from a single
//! real trajectory, full-state propagation by phase-space quadrature, and the
//! stationary-phase reduction to the coordinate propagator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{gamma_of, integrate_real, integrate_real_stops, RealTrajectory, TangentMatrix};
use crate::coherent::{bargmann_transform, wavefunction, CoherentParams, PhasePoint};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SymbolKind};
use crate::ode::OdeOptions;
use crate::quad::{simpson, UniformGrid};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SmoothedIvr,
    HermanKluk,
    Heller,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SmoothedIvr, Method::HermanKluk, Method::Heller];

    /// Symbol whose trajectories drive the method.
    pub fn symbol(self) -> SymbolKind {
        match self {
            Method::SmoothedIvr => SymbolKind::Smoothed,
            Method::HermanKluk | Method::Heller => SymbolKind::Weyl,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SmoothedIvr => "smoothed",
            Method::HermanKluk => "hk",
            Method::Heller => "heller",
        }
    }
}

/// Closed-form Gaussian ⟨x|K(t)|z′⟩ from one trajectory, plus its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPacket {
    pub method: Method,
    pub t: f64,
    pub start: PhasePoint,
    /// Trajectory endpoint (q_r, p_r).
    pub endpoint: PhasePoint,
    pub m: TangentMatrix,
    pub gamma: Complex64,
    /// Everything multiplying the Gaussian except the normalization π^{−1/4} b^{−1/2}.
    pub prefactor: Complex64,
    pub s_h: f64,
    /// 𝓘 along the trajectory, only for the smoothed IVR.
    pub i_term: Option<f64>,
    /// Coefficient A of −½A((x − q_r)/b)².
    pub width: Complex64,
    pub params: CoherentParams,
    pub grid: UniformGrid,
    pub amplitudes: Vec<Complex64>,
}

impl MixedPacket {
    fn from_sample(
        method: Method,
        params: CoherentParams,
        traj: &RealTrajectory,
        idx: usize,
        grid: &UniformGrid,
    ) -> Result<Self> {
        let s = &traj.samples[idx];
        let start = traj.start().point;
        let m = s.m;
        let gamma = gamma_of(&m)?;
        let (prefactor, width, i_term) = match method {
            Method::SmoothedIvr | Method::Heller => {
                let w = m.w();
                if w.norm() < 1e-12 {
                    return Err(Error::Degenerate(format!("m_qq + i m_qp vanishes at t = {}", s.t)));
                }
                let a = Complex64::new(m.m_pp, -m.m_pq) / w;
                let mut pref = 1.0 / traj.sqrt_w(idx);
                let i_term = (method == Method::SmoothedIvr).then_some(s.i_term);
                if let Some(i) = i_term {
                    pref *= Complex64::from_polar(1.0, i / params.hbar);
                }
                (pref, a, i_term)
            }
            Method::HermanKluk => (traj.sqrt_hk(idx), Complex64::new(1.0, 0.0), None),
        };
        let mut packet = MixedPacket {
            method,
            t: s.t,
            start,
            endpoint: s.point,
            m,
            gamma,
            prefactor,
            s_h: s.s_h,
            i_term,
            width,
            params,
            grid: *grid,
            amplitudes: Vec::new(),
        };
        packet.amplitudes = (0..grid.n).map(|i| packet.at(grid.x(i))).collect();
        Ok(packet)
    }

    /// ⟨x|K(t)|z′⟩ at any x.
    pub fn at(&self, x: f64) -> Complex64 {
        let CoherentParams { b, hbar, .. } = self.params;
        let d = (x - self.endpoint.q) / b;
        let phase = self.endpoint.p * (x - self.endpoint.q) + 0.5 * self.start.p * self.start.q + self.s_h;
        let norm = PI.powf(-0.25) / b.sqrt();
        norm * self.prefactor * (-0.5 * self.width * d * d + I * phase / hbar).exp()
    }

    /// ∫|ψ|² on the sample grid.
    pub fn norm(&self) -> f64 {
        let dens: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        simpson(&dens, self.grid.step)
    }

    /// Norm of the analytic Gaussian: 1 for the smoothed IVR and Heller,
    /// (1 − |γ|²)^{−1/2} for Herman–Kluk.
    pub fn analytic_norm(&self) -> f64 {
        match self.method {
            Method::HermanKluk => (1.0 - self.gamma.norm_sqr()).powf(-0.5),
            _ => 1.0,
        }
    }

    /// Position mean and variance measured on the grid.
    pub fn position_moments(&self) -> (f64, f64) {
        let xs = self.grid.points();
        let dens: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let n = simpson(&dens, self.grid.step);
        let m1: Vec<f64> = xs.iter().zip(&dens).map(|(x, d)| x * d).collect();
        let mean = simpson(&m1, self.grid.step) / n;
        let m2: Vec<f64> = xs.iter().zip(&dens).map(|(x, d)| (x - mean).powi(2) * d).collect();
        (mean, simpson(&m2, self.grid.step) / n)
    }

    /// Predicted position variance (b²/2)(m_qq² + m_qp²) of the smoothed IVR and Heller packets.
    pub fn predicted_position_variance(&self) -> f64 {
        0.5 * self.params.b.powi(2) * (self.m.m_qq.powi(2) + self.m.m_qp.powi(2))
    }

    /// Predicted momentum variance (c²/2)(m_pp² + m_pq²).
    pub fn predicted_momentum_variance(&self) -> f64 {
        0.5 * self.params.c.powi(2) * (self.m.m_pp.powi(2) + self.m.m_pq.powi(2))
    }

    /// Complex endpoint momentum p″ ≈ p_r + i A (c/b)(x − q_r) at which the
    /// stationary-phase endpoint sits for a given x.
    pub fn complex_endpoint(&self, x: f64) -> Complex64 {
        let CoherentParams { b, c, .. } = self.params;
        self.endpoint.p + I * self.width * (c / b) * (x - self.endpoint.q)
    }

    /// Largest |ψ|² on the grid and its location.
    pub fn peak(&self) -> (f64, f64) {
        peak_of(&self.amplitudes, &self.grid)
    }
}

/// Largest |ψ|² on a grid and where it sits.
pub fn peak_of(psi: &[Complex64], grid: &UniformGrid) -> (f64, f64) {
    psi.iter()
        .enumerate()
        .map(|(i, a)| (grid.x(i), a.norm_sqr()))
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, (x, d)| if d > acc.1 { (x, d) } else { acc })
}

/// Packets for one initial point at several sorted times.
pub fn mixed_packets(
    model: &HamiltonianModel,
    method: Method,
    start: PhasePoint,
    times: &[f64],
    grid: &UniformGrid,
    opts: &OdeOptions,
) -> Result<Vec<MixedPacket>> {
    let traj = integrate_real_stops(model, method.symbol(), start, times, opts)?;
    traj.stops
        .iter()
        .map(|&idx| MixedPacket::from_sample(method, model.params, &traj, idx, grid))
        .collect()
}

pub fn mixed_packet(
    model: &HamiltonianModel,
    method: Method,
    start: PhasePoint,
    t: f64,
    grid: &UniformGrid,
    opts: &OdeOptions,
) -> Result<MixedPacket> {
    let traj = integrate_real(model, method.symbol(), start, t, opts)?;
    MixedPacket::from_sample(method, model.params, &traj, traj.stops[0], grid)
}

pub fn mixed_smoothed_ivr(model: &HamiltonianModel, start: PhasePoint, t: f64, grid: &UniformGrid) -> Result<MixedPacket> {
    mixed_packet(model, Method::SmoothedIvr, start, t, grid, &OdeOptions::default())
}

pub fn mixed_hk(model: &HamiltonianModel, start: PhasePoint, t: f64, grid: &UniformGrid) -> Result<MixedPacket> {
    mixed_packet(model, Method::HermanKluk, start, t, grid, &OdeOptions::default())
}

pub fn mixed_heller(model: &HamiltonianModel, start: PhasePoint, t: f64, grid: &UniformGrid) -> Result<MixedPacket> {
    mixed_packet(model, Method::Heller, start, t, grid, &OdeOptions::default())
}

/// Uniform tensor grid of initial points (q′, p′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q: UniformGrid,
    pub p: UniformGrid,
}

/// Mean and variance of position and momentum of a sampled state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMoments {
    pub norm: f64,
    pub q_mean: f64,
    pub q_var: f64,
    pub p_mean: f64,
    pub p_var: f64,
}

pub fn state_moments(psi: &[Complex64], grid: &UniformGrid, hbar: f64) -> StateMoments {
    let h = grid.step;
    let n = psi.len();
    let dens: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
    let norm = simpson(&dens, h);
    let xs = grid.points();
    let q_mean = simpson(&xs.iter().zip(&dens).map(|(x, d)| x * d).collect::<Vec<_>>(), h) / norm;
    let q_var = simpson(&xs.iter().zip(&dens).map(|(x, d)| (x - q_mean).powi(2) * d).collect::<Vec<_>>(), h) / norm;
    // fourth-order stencil in the interior, one-sided differences near the edges
    let deriv: Vec<Complex64> = (0..n)
        .map(|i| match i {
            _ if i >= 2 && i + 2 < n => (psi[i - 2] - 8.0 * psi[i - 1] + 8.0 * psi[i + 1] - psi[i + 2]) / (12.0 * h),
            0 => (psi[1] - psi[0]) / h,
            _ if i == n - 1 => (psi[n - 1] - psi[n - 2]) / h,
            _ => (psi[i + 1] - psi[i - 1]) / (2.0 * h),
        })
        .collect();
    let p1: Vec<f64> = psi.iter().zip(&deriv).map(|(a, d)| (a.conj() * d).im).collect();
    let p_mean = hbar * simpson(&p1, h) / norm;
    let p2: Vec<f64> = deriv.iter().map(|d| d.norm_sqr()).collect();
    let p_var = (hbar * hbar * simpson(&p2, h) / norm - p_mean * p_mean).max(0.0);
    StateMoments { norm, q_mean, q_var, p_mean, p_var }
}

impl PhaseSpaceGrid {
    /// Grid covering `extent` Husimi standard deviations around the centroid
    /// of `psi`, with spacings `spacing·b` and `spacing·c`.
    pub fn around(psi: &[Complex64], grid: &UniformGrid, params: &CoherentParams, extent: f64, spacing: f64) -> Self {
        let mom = state_moments(psi, grid, params.hbar);
        let sq = (mom.q_var + 0.5 * params.b * params.b).sqrt();
        let sp = (mom.p_var + 0.5 * params.c * params.c).sqrt();
        let axis = |mean: f64, sigma: f64, h: f64| {
            let n = ((2.0 * extent * sigma / h).ceil() as usize).max(2) + 1;
            UniformGrid::spanning(mean - extent * sigma, mean + extent * sigma, n)
        };
        Self { q: axis(mom.q_mean, sq, spacing * params.b), p: axis(mom.p_mean, sp, spacing * params.c) }
    }

    /// Same extent with the spacing halved.
    pub fn refined(&self) -> Self {
        let r = |g: &UniformGrid| UniformGrid { start: g.start, step: 0.5 * g.step, n: 2 * g.n - 1 };
        Self { q: r(&self.q), p: r(&self.p) }
    }

    pub fn len(&self) -> usize {
        self.q.n * self.p.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub times: Vec<f64>,
    /// ψ(x, t) per time on the x-grid, from the refined phase-space grid.
    pub psi: Vec<Vec<Complex64>>,
    /// L² distance between the coarse and the refined result, per time.
    pub refinement_change: Vec<f64>,
    pub trajectories: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    pub ode: OdeOptions,
    /// Largest tolerated L² change between the coarse and refined grids.
    pub tolerance: f64,
    /// Initial points whose |⟨z′|ψ0⟩| falls below this fraction of the maximum are skipped.
    pub cutoff: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::with_tol(1e-10), tolerance: 1e-4, cutoff: 1e-12 }
    }
}

fn l2_distance(a: &[Complex64], b: &[Complex64], h: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).collect();
    simpson(&d, h).sqrt()
}

/// ψ(x, t) = ∬ dq′dp′/(2πħ) ⟨x|K(t)|z′⟩⟨z′|ψ0⟩ on the refinement of `ps_grid`.
/// The coarse grid (every other point) serves as the convergence check.
pub fn propagate_state(
    model: &HamiltonianModel,
    psi0: &[Complex64],
    xgrid: &UniformGrid,
    times: &[f64],
    method: Method,
    ps_grid: &PhaseSpaceGrid,
    opts: &PropagateOptions,
) -> Result<Propagated> {
    let params = model.params;
    let fine = ps_grid.refined();
    let nq = fine.q.n;
    let points: Vec<(usize, usize)> = (0..nq).flat_map(|i| (0..fine.p.n).map(move |j| (i, j))).collect();
    let weights: Vec<Complex64> = points
        .par_iter()
        .map(|&(i, j)| bargmann_transform(psi0, xgrid, PhasePoint::new(fine.q.x(i), fine.p.x(j)), &params))
        .collect::<Result<_>>()?;
    let wmax = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let active: Vec<usize> = (0..points.len()).filter(|&k| weights[k].norm() > opts.cutoff * wmax).collect();

    let nt = times.len();
    let nx = xgrid.n;
    let cell = fine.q.step * fine.p.step / (2.0 * PI * params.hbar);
    let zero = || (vec![vec![Complex64::default(); nx]; nt], vec![vec![Complex64::default(); nx]; nt]);
    let (coarse, finer) = active
        .par_iter()
        .try_fold(zero, |(mut coarse, mut finer), &k| -> Result<_> {
            let (i, j) = points[k];
            let start = PhasePoint::new(fine.q.x(i), fine.p.x(j));
            let w = weights[k] * cell;
            let on_coarse = i % 2 == 0 && j % 2 == 0;
            let packets = mixed_packets(model, method, start, times, &UniformGrid { n: 2, ..*xgrid }, &opts.ode)?;
            for (ti, pk) in packets.iter().enumerate() {
                for (ix, acc) in finer[ti].iter_mut().enumerate() {
                    let a = w * pk.at(xgrid.x(ix));
                    *acc += a;
                    if on_coarse {
                        coarse[ti][ix] += 4.0 * a;
                    }
                }
            }
            Ok((coarse, finer))
        })
        .try_reduce(zero, |(mut c1, mut f1), (c2, f2)| {
            for (a, b) in c1.iter_mut().flatten().zip(c2.iter().flatten()) {
                *a += b;
            }
            for (a, b) in f1.iter_mut().flatten().zip(f2.iter().flatten()) {
                *a += b;
            }
            Ok((c1, f1))
        })?;
    let refinement_change: Vec<f64> = coarse.iter().zip(&finer).map(|(c, f)| l2_distance(c, f, xgrid.step)).collect();
    if let Some((k, d)) = refinement_change.iter().enumerate().find(|(_, d)| **d > opts.tolerance) {
        return Err(Error::GridTooCoarse(format!(
            "halving the phase-space spacing changes ψ(t = {}) by {d:e} in L²",
            times[k]
        )));
    }
    Ok(Propagated { times: times.to_vec(), psi: finer, refinement_change, trajectories: active.len() })
}

/// How to evaluate ⟨x″|K(t)|x′⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateMode {
    StationaryPhase,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateOptions {
    pub ode: OdeOptions,
    /// Initial-momentum window; defaults to the free-flight estimate ± (|p| + 20c).
    pub p_window: Option<(f64, f64)>,
    /// Scan points for the root search.
    pub scan_points: usize,
    /// Brute force: q′ half-width in units of b.
    pub q_extent: f64,
    /// Brute force: spacing in units of b and c.
    pub spacing: f64,
    /// Below this |m_qp| the endpoint is treated as a focal point.
    pub focal_threshold: f64,
}

impl Default for CoordinateOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::with_tol(1e-11),
            p_window: None,
            scan_points: 400,
            q_extent: 8.0,
            spacing: 0.2,
            focal_threshold: 1e-8,
        }
    }
}

/// One real trajectory from x′ to x″ and its Van Vleck term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanVleckRoot {
    pub p_start: f64,
    pub p_end: f64,
    pub m_qp: f64,
    /// S_H, plus 𝓘 for the smoothed IVR.
    pub action: f64,
    /// Sign changes of m_qp along the trajectory.
    pub maslov: u32,
    pub contribution: Complex64,
}

fn default_window(model: &HamiltonianModel, x1: f64, x2: f64, t: f64) -> (f64, f64) {
    let p0 = model.mass * (x2 - x1) / t;
    let half = p0.abs() + 20.0 * model.params.c;
    (p0 - half, p0 + half)
}

fn van_vleck_term(model: &HamiltonianModel, method: Method, traj: &RealTrajectory, focal: f64) -> Result<VanVleckRoot> {
    let CoherentParams { b, hbar, .. } = model.params;
    let last = traj.last();
    let m_qp = last.m.m_qp;
    if m_qp.abs() < focal {
        return Err(Error::FocalPoint { m_qp });
    }
    let mut maslov = 0;
    let mut sign = 0.0;
    for s in &traj.samples[1..] {
        let sg = s.m.m_qp.signum();
        if s.m.m_qp != 0.0 {
            if sign != 0.0 && sg != sign {
                maslov += 1;
            }
            sign = sg;
        }
    }
    let action = last.s_h + if method == Method::SmoothedIvr { last.i_term } else { 0.0 };
    let phase = action / hbar - 0.25 * PI - 0.5 * PI * maslov as f64;
    let contribution = Complex64::from_polar(1.0 / (b * (2.0 * PI * m_qp.abs()).sqrt()), phase);
    Ok(VanVleckRoot { p_start: traj.start().point.p, p_end: last.point.p, m_qp, action, maslov, contribution })
}

/// Real trajectories from x′ to x″ in time t, found by scanning the initial
/// momentum and refining each sign change of q(t) − x″.
pub fn connecting_roots(
    model: &HamiltonianModel,
    method: Method,
    x1: f64,
    x2: f64,
    t: f64,
    opts: &CoordinateOptions,
) -> Result<Vec<VanVleckRoot>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("coordinate propagator needs t > 0, got {t}")));
    }
    let kind = method.symbol();
    let (lo, hi) = opts.p_window.unwrap_or_else(|| default_window(model, x1, x2, t));
    let n = opts.scan_points.max(3);
    let shoot = |p: f64| integrate_real(model, kind, PhasePoint::new(x1, p), t, &opts.ode);
    let miss = |p: f64| shoot(p).map(|tr| tr.last().point.q - x2);
    let ps: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let fs: Vec<f64> = ps.par_iter().map(|&p| miss(p)).collect::<Result<_>>()?;

    let scale = model.params.b * 1e-12;
    let mut roots = Vec::new();
    for k in 0..n - 1 {
        let (mut a, mut b, mut fa, mut fb) = (ps[k], ps[k + 1], fs[k], fs[k + 1]);
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        // Illinois-modified regula falsi
        let mut side = 0;
        let mut x = a;
        for _ in 0..200 {
            x = (a * fb - b * fa) / (fb - fa);
            let fx = miss(x)?;
            if fx.abs() < scale || (b - a).abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
            if fx.signum() == fb.signum() {
                b = x;
                fb = fx;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = x;
                fa = fx;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        roots.push(x);
    }
    if roots.is_empty() {
        return Err(Error::NoRootTrajectory { x_start: x1, x_end: x2 });
    }
    roots.into_iter().map(|p| van_vleck_term(model, method, &shoot(p)?, opts.focal_threshold)).collect()
}

/// ⟨x″|K(t)|x′⟩ by stationary phase (sum of Van Vleck terms over the
/// connecting trajectories) or by brute-force phase-space quadrature of the
/// mixed propagator against ⟨z′|x′⟩.
pub fn coordinate_propagator(
    model: &HamiltonianModel,
    x1: f64,
    x2: f64,
    t: f64,
    method: Method,
    mode: CoordinateMode,
    opts: &CoordinateOptions,
) -> Result<Complex64> {
    match mode {
        CoordinateMode::StationaryPhase => {
            Ok(connecting_roots(model, method, x1, x2, t, opts)?.iter().map(|r| r.contribution).sum())
        }
        CoordinateMode::BruteForce => brute_force(model, x1, x2, t, method, opts),
    }
}

fn brute_force(model: &HamiltonianModel, x1: f64, x2: f64, t: f64, method: Method, opts: &CoordinateOptions) -> Result<Complex64> {
    let params = model.params;
    let (lo, hi) = opts.p_window.unwrap_or_else(|| default_window(model, x1, x2, t));
    let half = opts.q_extent * params.b;
    let nq = (2.0 * half / (opts.spacing * params.b)).ceil() as usize + 1;
    let np = ((hi - lo) / (opts.spacing * params.c)).ceil() as usize + 1;
    let qg = UniformGrid::spanning(x1 - half, x1 + half, nq);
    let pg = UniformGrid::spanning(lo, hi, np);
    let cell = qg.step * pg.step / (2.0 * PI * params.hbar);
    let probe = UniformGrid { start: x2, step: 1.0, n: 2 };
    let pts: Vec<(usize, usize)> = (0..nq).flat_map(|i| (0..np).map(move |j| (i, j))).collect();
    let sum = pts
        .par_iter()
        .map(|&(i, j)| -> Result<Complex64> {
            let start = PhasePoint::new(qg.x(i), pg.x(j));
            let pk = mixed_packet(model, method, start, t, &probe, &opts.ode)?;
            let w = if i == 0 || i == nq - 1 { 0.5 } else { 1.0 } * if j == 0 || j == np - 1 { 0.5 } else { 1.0 };
            Ok(w * pk.at(x2) * wavefunction(start, &params, x1).conj())
        })
        .try_reduce(Complex64::default, |a, b| Ok(a + b))?;
    Ok(sum * cell)
}

/// Phase-space area of initial conditions that contribute to the coordinate
/// propagator at a stationary point. Infinite at m_qp = 0.
pub fn sampling_spread(m: &TangentMatrix, method: Method, hbar: f64) -> f64 {
    let mqp = m.m_qp.abs();
    if mqp == 0.0 {
        return f64::INFINITY;
    }
    match method {
        Method::HermanKluk => hbar / mqp.sqrt() / m.w_hk().norm().sqrt(),
        Method::SmoothedIvr | Method::Heller => hbar / (2.0 * mqp).sqrt() * m.w().norm().sqrt(),
    }
}
