//! Complex classical trajectories with mixed boundary conditions
//! u(0) = z′, v(t) = conj(z″), and the coherent-state propagator built on them.

use num_complex::Complex64;

use crate::classical::integrate_real;
use crate::coherent::{overlap, CoherentParams, ComplexLabel, PhasePoint};
use crate::error::{Error, Result, RootSummary};
use crate::hamiltonian::{HamiltonianModel, SymbolKind};
use crate::ode::{integrate, Control, OdeOptions};
use crate::phase::PhaseTracker;

pub use crate::phase::phase_continue;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSample {
    pub t: f64,
    pub u: Complex64,
    pub v: Complex64,
    pub du: Complex64,
    pub dv: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrajectory {
    pub kind: SymbolKind,
    pub t: f64,
    pub u_start: Complex64,
    pub v_start: Complex64,
    pub u_end: Complex64,
    pub v_end: Complex64,
    /// Complex action including the boundary term −(iħ/2)(u″v″ + u′v′).
    pub action: Complex64,
    pub i_term: Complex64,
    /// δv″ for δu′ = 0, δv′ = 1.
    pub m_vv: Complex64,
    /// Continuous argument of M_vv along the path.
    pub m_vv_arg: f64,
    pub energy: Complex64,
    /// Largest |H(t) − H(0)| / |H(0)| over the accepted steps.
    pub energy_error: f64,
    pub samples: Vec<ComplexSample>,
    /// Boundary residual after each Newton iterate.
    pub residuals: Vec<f64>,
}

impl ComplexTrajectory {
    /// M_vv^{1/2} on the branch continued from 1 at t = 0.
    pub fn sqrt_m_vv(&self) -> Complex64 {
        Complex64::from_polar(self.m_vv.norm().sqrt(), 0.5 * self.m_vv_arg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub ode: OdeOptions,
    /// Residual tolerance on |v(t) − v″|, relative to max(1, |v″|).
    pub tol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    /// Run both the direct and the homotopy seed and fail if they disagree.
    pub check_ambiguity: bool,
    pub record_samples: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::with_tol(1e-12),
            tol: 1e-10,
            max_newton: 50,
            max_backtracks: 8,
            check_ambiguity: false,
            record_samples: false,
        }
    }
}

struct Shot {
    u1: Complex64,
    v1: Complex64,
    dv1: Complex64,
    arg_dv: f64,
    action_integral: Complex64,
    i_term: Complex64,
    energy: Complex64,
    energy_error: f64,
    samples: Vec<ComplexSample>,
}

#[inline]
fn c(y: &[f64; 12], k: usize) -> Complex64 {
    Complex64::new(y[2 * k], y[2 * k + 1])
}

#[inline]
fn put(dy: &mut [f64; 12], k: usize, z: Complex64) {
    dy[2 * k] = z.re;
    dy[2 * k + 1] = z.im;
}

fn complex_rhs(model: &HamiltonianModel, kind: SymbolKind, y: &[f64; 12], dy: &mut [f64; 12]) {
    let (q, p, dq, dp) = (c(y, 0), c(y, 1), c(y, 2), c(y, 3));
    let d = model.eval(kind, q, p);
    let qd = d.h_p;
    let pd = -d.h_q;
    put(dy, 0, qd);
    put(dy, 1, pd);
    put(dy, 2, d.h_qp * dq + d.h_pp * dp);
    put(dy, 3, -d.h_qq * dq - d.h_qp * dp);
    put(dy, 4, 0.5 * (qd * p - pd * q) - d.h);
    let CoherentParams { b, c: cc, .. } = model.params;
    put(dy, 5, 0.25 * (b * b * d.h_qq + cc * cc * d.h_pp));
}

fn shoot(
    model: &HamiltonianModel,
    kind: SymbolKind,
    u0: Complex64,
    v0: Complex64,
    t: f64,
    ode: &OdeOptions,
    record: bool,
) -> Result<Shot> {
    let params = &model.params;
    let (q0, p0) = params.qp_of_uv(u0, v0);
    let s2 = 2f64.sqrt();
    // δu′ = 0, δv′ = 1
    let dq0 = Complex64::new(params.b / s2, 0.0);
    let dp0 = Complex64::new(0.0, params.c / s2);
    let mut y0 = [0.0; 12];
    put(&mut y0, 0, q0);
    put(&mut y0, 1, p0);
    put(&mut y0, 2, dq0);
    put(&mut y0, 3, dp0);

    let energy = model.eval(kind, q0, p0).h;
    let escale = energy.norm().max(1e-300);
    let mut energy_error: f64 = 0.0;
    let mut tracker = PhaseTracker::new();
    tracker.push(Complex64::new(1.0, 0.0))?;
    let mut failure = None;
    let mut samples = Vec::new();
    let to_sample = |t: f64, y: &[f64; 12]| {
        let (u, v) = params.uv_of_qp(c(y, 0), c(y, 1));
        let (du, dv) = params.uv_of_qp(c(y, 2), c(y, 3));
        ComplexSample { t, u, v, du, dv }
    };
    if record {
        samples.push(to_sample(0.0, &y0));
    }
    let (_, y) = integrate(
        |_, y, dy| complex_rhs(model, kind, y, dy),
        0.0,
        y0,
        t,
        ode,
        |step| {
            let s = to_sample(step.t1, step.y1);
            if let Err(e) = tracker.push(s.dv) {
                failure = Some(e);
                return Control::Stop;
            }
            let h = model.eval(kind, c(step.y1, 0), c(step.y1, 1)).h;
            energy_error = energy_error.max((h - energy).norm() / escale);
            if record {
                samples.push(s);
            }
            Control::Continue
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let end = to_sample(t, &y);
    Ok(Shot {
        u1: end.u,
        v1: end.v,
        dv1: end.dv,
        arg_dv: tracker.arg(),
        action_integral: c(&y, 4),
        i_term: c(&y, 5),
        energy,
        energy_error,
        samples,
    })
}

fn finish(kind: SymbolKind, t: f64, u0: Complex64, v0: Complex64, shot: Shot, residuals: Vec<f64>, hbar: f64) -> ComplexTrajectory {
    let boundary = -0.5 * I * hbar * (shot.u1 * shot.v1 + u0 * v0);
    ComplexTrajectory {
        kind,
        t,
        u_start: u0,
        v_start: v0,
        u_end: shot.u1,
        v_end: shot.v1,
        action: shot.action_integral + boundary,
        i_term: shot.i_term,
        m_vv: shot.dv1,
        m_vv_arg: shot.arg_dv,
        energy: shot.energy,
        energy_error: shot.energy_error,
        samples: shot.samples,
        residuals,
    }
}

fn newton(
    model: &HamiltonianModel,
    kind: SymbolKind,
    u0: Complex64,
    target: Complex64,
    t: f64,
    seed: Complex64,
    opts: &SolveOptions,
) -> Result<ComplexTrajectory> {
    let tol = opts.tol * target.norm().max(1.0);
    let mut v0 = seed;
    let mut shot = shoot(model, kind, u0, v0, t, &opts.ode, false)?;
    let mut r = (shot.v1 - target).norm();
    let mut residuals = vec![r];
    let mut iters = 0;
    while r > tol {
        if iters >= opts.max_newton || !(shot.dv1.norm() > 0.0) {
            return Err(Error::NoConvergence { iterations: iters, residual: r });
        }
        iters += 1;
        let step = -(shot.v1 - target) / shot.dv1;
        let mut lam = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand = v0 + lam * step;
            if let Ok(s) = shoot(model, kind, u0, cand, t, &opts.ode, false) {
                let rc = (s.v1 - target).norm();
                if rc < r {
                    accepted = Some((cand, s, rc));
                    break;
                }
            }
            lam *= 0.5;
        }
        match accepted {
            Some((cand, s, rc)) => {
                v0 = cand;
                shot = s;
                r = rc;
                residuals.push(r);
            }
            None => return Err(Error::NoConvergence { iterations: iters, residual: r }),
        }
    }
    if opts.record_samples {
        shot = shoot(model, kind, u0, v0, t, &opts.ode, true)?;
    }
    Ok(finish(kind, t, u0, v0, shot, residuals, model.params.hbar))
}

fn homotopy(
    model: &HamiltonianModel,
    kind: SymbolKind,
    u0: Complex64,
    target: Complex64,
    t: f64,
    opts: &SolveOptions,
) -> Result<ComplexTrajectory> {
    let mut last_err = Error::NoConvergence { iterations: 0, residual: f64::NAN };
    'outer: for pieces in [8usize, 32, 128] {
        // near t = 0 the trajectory barely moves, so v(0) ≈ v″
        let mut seed = target;
        let mut sol = None;
        for k in 1..=pieces {
            let tk = t * k as f64 / pieces as f64;
            match newton(model, kind, u0, target, tk, seed, opts) {
                Ok(s) => {
                    seed = s.v_start;
                    sol = Some(s);
                }
                Err(e) => {
                    last_err = e;
                    continue 'outer;
                }
            }
        }
        if let Some(s) = sol {
            return Ok(s);
        }
    }
    Err(last_err)
}

fn same_root(a: &ComplexTrajectory, b: &ComplexTrajectory) -> bool {
    (a.action - b.action).norm() <= 1e-8 * (1.0 + a.action.norm())
}

/// Solves for the trajectory with u(0) = `u_start` and v(t) = `v_end`, seeding
/// the unknown v(0) at `seed`.
pub fn solve_uv(
    model: &HamiltonianModel,
    kind: SymbolKind,
    u_start: Complex64,
    v_end: Complex64,
    t: f64,
    seed: Complex64,
    opts: &SolveOptions,
) -> Result<ComplexTrajectory> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("time must be non-negative, got {t}")));
    }
    let direct = newton(model, kind, u_start, v_end, t, seed, opts);
    if t == 0.0 {
        return direct;
    }
    match direct {
        Ok(sol) if opts.check_ambiguity => match homotopy(model, kind, u_start, v_end, t, opts) {
            Ok(other) if !same_root(&sol, &other) => Err(Error::BranchAmbiguity {
                roots: vec![
                    RootSummary { v_start: sol.v_start, action: sol.action },
                    RootSummary { v_start: other.v_start, action: other.action },
                ],
            }),
            _ => Ok(sol),
        },
        Ok(sol) => Ok(sol),
        Err(_) => homotopy(model, kind, u_start, v_end, t, opts),
    }
}

/// Trajectory with u(0) = z′ and v(t) = conj(z″), seeded at v(0) = conj(z′).
pub fn solve_boundary(
    model: &HamiltonianModel,
    kind: SymbolKind,
    zprime: ComplexLabel,
    zdoubleprime: ComplexLabel,
    t: f64,
    opts: &SolveOptions,
) -> Result<ComplexTrajectory> {
    solve_uv(model, kind, zprime.z, zdoubleprime.z.conj(), t, zprime.z.conj(), opts)
}

/// All distinct roots reached from the given seeds for v(0).
pub fn solve_boundary_roots(
    model: &HamiltonianModel,
    kind: SymbolKind,
    zprime: ComplexLabel,
    zdoubleprime: ComplexLabel,
    t: f64,
    seeds: &[Complex64],
    opts: &SolveOptions,
) -> Vec<ComplexTrajectory> {
    let mut roots: Vec<ComplexTrajectory> = Vec::new();
    for &seed in seeds {
        if let Ok(s) = newton(model, kind, zprime.z, zdoubleprime.z.conj(), t, seed, opts) {
            if !roots.iter().any(|r| same_root(r, &s)) {
                roots.push(s);
            }
        }
    }
    roots
}

/// Propagator contribution of one solved trajectory.
pub fn propagator_from(traj: &ComplexTrajectory, zprime: ComplexLabel, zdoubleprime: ComplexLabel, hbar: f64) -> Complex64 {
    let sigma = traj.kind.sigma();
    let expo = I * (traj.action + sigma * traj.i_term) / hbar - 0.5 * (zprime.z.norm_sqr() + zdoubleprime.z.norm_sqr());
    expo.exp() / traj.sqrt_m_vv()
}

/// Semiclassical ⟨z″|e^{−iĤt/ħ}|z′⟩ from the principal root.
pub fn propagator(
    model: &HamiltonianModel,
    kind: SymbolKind,
    zprime: ComplexLabel,
    zdoubleprime: ComplexLabel,
    t: f64,
    opts: &SolveOptions,
) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(overlap(zdoubleprime, zprime));
    }
    let traj = solve_boundary(model, kind, zprime, zdoubleprime, t, opts)?;
    Ok(propagator_from(&traj, zprime, zdoubleprime, model.params.hbar))
}

/// Sum of the propagator over all roots reached from `seeds`.
pub fn propagator_sum(
    model: &HamiltonianModel,
    kind: SymbolKind,
    zprime: ComplexLabel,
    zdoubleprime: ComplexLabel,
    t: f64,
    seeds: &[Complex64],
    opts: &SolveOptions,
) -> Result<(Complex64, Vec<ComplexTrajectory>)> {
    let roots = solve_boundary_roots(model, kind, zprime, zdoubleprime, t, seeds, opts);
    if roots.is_empty() {
        return Err(Error::NoConvergence { iterations: opts.max_newton, residual: f64::NAN });
    }
    let k = roots.iter().map(|r| propagator_from(r, zprime, zdoubleprime, model.params.hbar)).sum();
    Ok((k, roots))
}

/// One entry of the action-cancellation scaling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationSample {
    pub hbar: f64,
    pub action_smoothed: Complex64,
    pub i_smoothed: Complex64,
    pub action_weyl: Complex64,
    /// |S + 𝓘 − S_W|
    pub delta: f64,
}

/// Compares S + 𝓘 (smoothed symbol) with S_W (Weyl symbol) for the same
/// boundary data u′ = z′, v″ = conj(z″), where z″ is the endpoint of the real
/// Weyl trajectory from z′.
pub fn action_cancellation(model: &HamiltonianModel, start: PhasePoint, t: f64, opts: &SolveOptions) -> Result<CancellationSample> {
    let params = model.params;
    let real = integrate_real(model, SymbolKind::Weyl, start, t, &opts.ode)?;
    let end = real.last().point;
    let zp = ComplexLabel::new(params.label(start.q, start.p));
    let zpp = ComplexLabel::new(params.label(end.q, end.p));
    let weyl = solve_boundary(model, SymbolKind::Weyl, zp, zpp, t, opts)?;
    let smooth = solve_uv(model, SymbolKind::Smoothed, zp.z, zpp.z.conj(), t, weyl.v_start, opts)?;
    let delta = (smooth.action + smooth.i_term - weyl.action).norm();
    Ok(CancellationSample {
        hbar: params.hbar,
        action_smoothed: smooth.action,
        i_smoothed: smooth.i_term,
        action_weyl: weyl.action,
        delta,
    })
}
