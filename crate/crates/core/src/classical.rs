//! Real classical trajectories with scaled tangent matrices, the actions S_H
//! and 𝓘, periodic orbits and their monodromy.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentParams, PhasePoint};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SymbolKind};
use crate::ode::{integrate, locate_event, Control, OdeOptions};
use crate::phase::PhaseTracker;
use crate::quad::chebyshev_nodes;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tangent matrix in the scaled variables (δq/b, δp/c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentMatrix {
    pub m_qq: f64,
    pub m_qp: f64,
    pub m_pq: f64,
    pub m_pp: f64,
}

/// The same matrix acting on (δu, δv).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvBlock {
    pub uu: Complex64,
    pub uv: Complex64,
    pub vu: Complex64,
    pub vv: Complex64,
}

impl TangentMatrix {
    pub const IDENTITY: TangentMatrix = TangentMatrix { m_qq: 1.0, m_qp: 0.0, m_pq: 0.0, m_pp: 1.0 };

    pub fn det(&self) -> f64 {
        self.m_qq * self.m_pp - self.m_qp * self.m_pq
    }

    /// m_qq + i m_qp, whose continued square root enters the mixed propagator.
    pub fn w(&self) -> Complex64 {
        Complex64::new(self.m_qq, self.m_qp)
    }

    /// m_pp + m_qq − i m_qp + i m_pq, the Herman–Kluk prefactor argument (times 2).
    pub fn w_hk(&self) -> Complex64 {
        Complex64::new(self.m_pp + self.m_qq, self.m_pq - self.m_qp)
    }

    pub fn uv_block(&self) -> UvBlock {
        let (a, b, c, d) = (self.m_qq, self.m_qp, self.m_pq, self.m_pp);
        UvBlock {
            uu: 0.5 * Complex64::new(a + d, c - b),
            uv: 0.5 * Complex64::new(a - d, c + b),
            vu: 0.5 * Complex64::new(a - d, -c - b),
            vv: 0.5 * Complex64::new(a + d, b - c),
        }
    }

    pub fn mul(&self, o: &TangentMatrix) -> TangentMatrix {
        TangentMatrix {
            m_qq: self.m_qq * o.m_qq + self.m_qp * o.m_pq,
            m_qp: self.m_qq * o.m_qp + self.m_qp * o.m_pp,
            m_pq: self.m_pq * o.m_qq + self.m_pp * o.m_pq,
            m_pp: self.m_pq * o.m_qp + self.m_pp * o.m_pp,
        }
    }
}

/// γ = M_uv / M_vv.
pub fn gamma_of(m: &TangentMatrix) -> Result<Complex64> {
    let blk = m.uv_block();
    if blk.vv.norm() < 1e-14 {
        return Err(Error::Degenerate(format!("M_vv vanishes for {m:?}")));
    }
    Ok(blk.uv / blk.vv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSample {
    pub t: f64,
    pub point: PhasePoint,
    pub m: TangentMatrix,
    pub s_h: f64,
    pub i_term: f64,
}

/// A real trajectory sampled at every accepted integrator step.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTrajectory {
    pub kind: SymbolKind,
    pub params: CoherentParams,
    pub samples: Vec<TrajSample>,
    /// Continuous argument of m_qq + i m_qp per sample.
    pub arg_w: Vec<f64>,
    /// Continuous argument of m_pp + m_qq − i m_qp + i m_pq per sample.
    pub arg_hk: Vec<f64>,
    /// Indices of the samples at the requested output times.
    pub stops: Vec<usize>,
}

impl RealTrajectory {
    pub fn start(&self) -> &TrajSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajSample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    /// Sample at the k-th requested output time.
    pub fn at_stop(&self, k: usize) -> &TrajSample {
        &self.samples[self.stops[k]]
    }

    /// (m_qq + i m_qp)^{1/2} on the branch continued from 1 at t = 0.
    pub fn sqrt_w(&self, idx: usize) -> Complex64 {
        Complex64::from_polar(self.samples[idx].m.w().norm().sqrt(), 0.5 * self.arg_w[idx])
    }

    /// (½(m_pp + m_qq − i m_qp + i m_pq))^{1/2} on the continued branch.
    pub fn sqrt_hk(&self, idx: usize) -> Complex64 {
        Complex64::from_polar((0.5 * self.samples[idx].m.w_hk().norm()).sqrt(), 0.5 * self.arg_hk[idx])
    }

    /// Largest |det m − 1| over all samples.
    pub fn max_det_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.m.det() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest relative energy drift over all samples.
    pub fn max_energy_drift(&self, model: &HamiltonianModel) -> f64 {
        let e0 = model.energy(self.kind, self.samples[0].point);
        let scale = e0.abs().max(1e-300);
        self.samples
            .iter()
            .map(|s| (model.energy(self.kind, s.point) - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// CSV dump with columns t,q,p,m_qq,m_qp,m_pq,m_pp,S_H,I.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,q,p,m_qq,m_qp,m_pq,m_pp,S_H,I")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.point.q, s.point.p, s.m.m_qq, s.m.m_qp, s.m.m_pq, s.m.m_pp, s.s_h, s.i_term
            )?;
        }
        Ok(())
    }
}

#[inline]
fn real_rhs(model: &HamiltonianModel, kind: SymbolKind, y: &[f64; 8], dy: &mut [f64; 8]) {
    let CoherentParams { b, c, .. } = model.params;
    let d = model.eval(kind, y[0], y[1]);
    let (cb, bc) = (c / b, b / c);
    dy[0] = d.h_p;
    dy[1] = -d.h_q;
    dy[2] = d.h_qp * y[2] + cb * d.h_pp * y[4];
    dy[3] = d.h_qp * y[3] + cb * d.h_pp * y[5];
    dy[4] = -bc * d.h_qq * y[2] - d.h_qp * y[4];
    dy[5] = -bc * d.h_qq * y[3] - d.h_qp * y[5];
    dy[6] = y[1] * d.h_p - d.h;
    dy[7] = 0.25 * (b * b * d.h_qq + c * c * d.h_pp);
}

fn sample_of(t: f64, y: &[f64; 8]) -> TrajSample {
    TrajSample {
        t,
        point: PhasePoint::new(y[0], y[1]),
        m: TangentMatrix { m_qq: y[2], m_qp: y[3], m_pq: y[4], m_pp: y[5] },
        s_h: y[6],
        i_term: y[7],
    }
}

fn initial_state(start: PhasePoint) -> [f64; 8] {
    [start.q, start.p, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]
}

/// Integrates from `start` through the sorted output times `times` (all ≥ 0).
pub fn integrate_real_stops(
    model: &HamiltonianModel,
    kind: SymbolKind,
    start: PhasePoint,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<RealTrajectory> {
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("output times must be non-negative and sorted".into()));
    }
    let mut y = initial_state(start);
    let mut t = 0.0;
    let mut samples = vec![sample_of(0.0, &y)];
    let (mut tw, mut th) = (PhaseTracker::new(), PhaseTracker::new());
    let mut arg_w = vec![tw.push(samples[0].m.w())?];
    let mut arg_hk = vec![th.push(samples[0].m.w_hk())?];
    let mut stops = Vec::with_capacity(times.len());
    let mut failure = None;
    for &t_stop in times {
        if t_stop > t {
            let (t1, y1) = integrate(
                |_, y, dy| real_rhs(model, kind, y, dy),
                t,
                y,
                t_stop,
                opts,
                |step| {
                    let s = sample_of(step.t1, step.y1);
                    match (tw.push(s.m.w()), th.push(s.m.w_hk())) {
                        (Ok(a), Ok(b)) => {
                            arg_w.push(a);
                            arg_hk.push(b);
                            samples.push(s);
                            Control::Continue
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            failure = Some(e);
                            Control::Stop
                        }
                    }
                },
            )?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            t = t1;
            y = y1;
        }
        stops.push(samples.len() - 1);
    }
    Ok(RealTrajectory { kind, params: model.params, samples, arg_w, arg_hk, stops })
}

pub fn integrate_real(
    model: &HamiltonianModel,
    kind: SymbolKind,
    start: PhasePoint,
    t: f64,
    opts: &OdeOptions,
) -> Result<RealTrajectory> {
    integrate_real_stops(model, kind, start, &[t], opts)
}

/// Action ∮p dq and period from Gauss–Chebyshev quadrature between the
/// turning points (p-quadratic symbols).
pub fn quadrature_action_period(model: &HamiltonianModel, kind: SymbolKind, energy: f64, n: usize) -> Result<(f64, f64)> {
    let (a, b) = model.turning_points(kind, energy)?;
    let e = energy - model.kinetic_shift(kind);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let m = model.mass;
    let (mut s, mut t) = (0.0, 0.0);
    for x in chebyshev_nodes(n) {
        let q = mid + half * x;
        let r = (1.0 - x * x).max(0.0);
        let de = (e - model.potential(kind, q)).max(0.0);
        s += (de * r).sqrt() * half;
        if de > 0.0 {
            t += (half * half * r / de).sqrt();
        }
    }
    let w = PI / n as f64;
    Ok((2.0 * (2.0 * m).sqrt() * s * w, 2.0 * (0.5 * m).sqrt() * t * w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub kind: SymbolKind,
    pub energy: f64,
    pub period: f64,
    /// Reduced action ∮p dq.
    pub action: f64,
    /// 𝓘 accumulated over one period.
    pub i_term: f64,
    pub dt_de: f64,
    pub di_de: f64,
    pub turning: (f64, f64),
    /// One full period starting at the right turning point.
    pub samples: Vec<TrajSample>,
    /// |z(T) − z(0)| in scaled units.
    pub closure: f64,
}

impl PeriodicOrbit {
    /// ε(z) along the stored samples.
    pub fn epsilon_samples(&self, model: &HamiltonianModel) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, model.epsilon(self.kind, s.point))).collect()
    }
}

struct OrbitCore {
    period: f64,
    action: f64,
    i_term: f64,
    turning: (f64, f64),
    samples: Vec<TrajSample>,
    closure: f64,
}

fn orbit_core(model: &HamiltonianModel, kind: SymbolKind, energy: f64, opts: &OdeOptions, keep: bool) -> Result<OrbitCore> {
    let turning = model.turning_points(kind, energy)?;
    let (_, t_est) = quadrature_action_period(model, kind, energy, 64)?;
    let start = PhasePoint::new(turning.1, 0.0);
    let e0 = model.energy(kind, start);

    let mut half = None;
    integrate(
        |_, y, dy| real_rhs(model, kind, y, dy),
        0.0,
        initial_state(start),
        4.0 * t_est,
        opts,
        |step| match locate_event(step, |y| y[1]) {
            Some((t, _)) if step.y0[1] < 0.0 => {
                half = Some(t);
                Control::Stop
            }
            _ => Control::Continue,
        },
    )?;
    let t_half = half.ok_or_else(|| Error::Degenerate(format!("no return to the left turning point at E = {energy}")))?;
    let period = 2.0 * t_half;

    let mut samples = Vec::new();
    if keep {
        samples.push(sample_of(0.0, &initial_state(start)));
    }
    let (_, y) = integrate(
        |_, y, dy| real_rhs(model, kind, y, dy),
        0.0,
        initial_state(start),
        period,
        opts,
        |step| {
            if keep {
                samples.push(sample_of(step.t1, step.y1));
            }
            Control::Continue
        },
    )?;
    let CoherentParams { b, c, .. } = model.params;
    let closure = (0.5 * (((y[0] - start.q) / b).powi(2) + ((y[1] - start.p) / c).powi(2))).sqrt();
    Ok(OrbitCore { period, action: y[6] + e0 * period, i_term: y[7], turning, samples, closure })
}

/// Small-oscillation limit at the bottom of the well: (T, 𝓘 over one period).
pub fn bottom_limit(model: &HamiltonianModel, kind: SymbolKind) -> Result<(f64, f64)> {
    let (q0, _) = model
        .potential_minimum(kind)
        .ok_or(Error::Unbound { energy: f64::NAN, q_max: model.q_max() })?;
    let (_, _, v2) = model.potential_derivatives(kind, q0);
    if !(v2 > 0.0) {
        return Err(Error::Degenerate(format!("flat potential minimum at q = {q0}")));
    }
    let omega = (v2 / model.mass).sqrt();
    let period = 2.0 * PI / omega;
    Ok((period, model.epsilon(kind, PhasePoint::new(q0, 0.0)) * period))
}

/// Options for periodic-orbit construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitOptions {
    pub ode: OdeOptions,
    /// Energy step for the derivatives, relative to the depth E − E_min.
    pub de_rel: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::with_tol(1e-12), de_rel: 1e-4 }
    }
}

fn central_with_fallback(f: impl Fn(f64) -> Result<(f64, f64)>, e: f64, de: f64, center: (f64, f64), floor: (f64, f64)) -> Result<(f64, f64)> {
    let (tp, ip) = f(e + de)?;
    let (tm, im) = f(e - de)?;
    let one_sided_disagree = |plus: f64, minus: f64, mid: f64, floor: f64| {
        let fw = (plus - mid) / de;
        let bw = (mid - minus) / de;
        (fw - bw).abs() > 1e-3 * fw.abs().max(bw.abs()) && (fw - bw).abs() > floor
    };
    let mut dt = (tp - tm) / (2.0 * de);
    let mut di = (ip - im) / (2.0 * de);
    let need_t = one_sided_disagree(tp, tm, center.0, floor.0);
    let need_i = one_sided_disagree(ip, im, center.1, floor.1);
    if need_t || need_i {
        let h = 0.5 * de;
        let (tp2, ip2) = f(e + h)?;
        let (tm2, im2) = f(e - h)?;
        if need_t {
            dt = (4.0 * (tp2 - tm2) / (2.0 * h) - dt) / 3.0;
        }
        if need_i {
            di = (4.0 * (ip2 - im2) / (2.0 * h) - di) / 3.0;
        }
    }
    Ok((dt, di))
}

pub fn find_periodic_orbit(model: &HamiltonianModel, kind: SymbolKind, energy: f64) -> Result<PeriodicOrbit> {
    find_periodic_orbit_with(model, kind, energy, &OrbitOptions::default())
}

pub fn find_periodic_orbit_with(
    model: &HamiltonianModel,
    kind: SymbolKind,
    energy: f64,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    let (_, vmin) = model
        .potential_minimum(kind)
        .ok_or(Error::Unbound { energy, q_max: model.q_max() })?;
    let emin = vmin + model.kinetic_shift(kind);
    if !(energy > emin) {
        return Err(Error::BelowMinimum { energy, minimum: emin });
    }
    let core = orbit_core(model, kind, energy, &opts.ode, true)?;
    let de = opts.de_rel * (energy - emin);
    let eval = |e: f64| orbit_core(model, kind, e, &opts.ode, false).map(|c| (c.period, c.i_term));
    let noise = |x: f64| 1e-6 * x.abs() / (energy - emin);
    let (dt_de, di_de) = central_with_fallback(
        eval,
        energy,
        de,
        (core.period, core.i_term),
        (noise(core.period), noise(core.i_term)),
    )?;
    Ok(PeriodicOrbit {
        kind,
        energy,
        period: core.period,
        action: core.action,
        i_term: core.i_term,
        dt_de,
        di_de,
        turning: core.turning,
        samples: core.samples,
        closure: core.closure,
    })
}

/// Phase-space velocities (u̇, v̇) at a real point.
pub fn uv_velocity(model: &HamiltonianModel, kind: SymbolKind, point: PhasePoint) -> (Complex64, Complex64) {
    let d = model.eval_real(kind, point);
    let (qd, pd) = (d.h_p, -d.h_q);
    let CoherentParams { b, c, .. } = model.params;
    let u = Complex64::new(qd / b, pd / c) / 2f64.sqrt();
    (u, u.conj())
}

/// (Mⁿ)_vv = 1 − n iħ (dT/d𝓔) u̇ v̇ at a point on the orbit.
pub fn monodromy_vv(model: &HamiltonianModel, orbit: &PeriodicOrbit, n: u32, point: PhasePoint) -> Complex64 {
    let (ud, vd) = uv_velocity(model, orbit.kind, point);
    1.0 - n as f64 * I * model.params.hbar * orbit.dt_de * ud * vd
}
