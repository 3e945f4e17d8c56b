//! Cross-checks against references that share no code with the library:
//! FFT split-operator evolution, FFT momentum moments and a phase-space
//! resolution of the identity.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use scprop::coherent::{bargmann_transform, wavefunction};
use scprop::ivr::{mixed_heller, mixed_smoothed_ivr};
use scprop::quad::UniformGrid;
use scprop::quantum::{build_basis, diagonalize, evolve_exact, BasisSpec};
use scprop::{CoherentParams, Complex64, HamiltonianModel, PhasePoint, SymbolKind};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Angular wavenumbers in FFT order.
fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let j = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * j / (n as f64 * dx)
        })
        .collect()
}

/// Strang-split evolution under p²/2 + V(x) with periodic boundaries.
fn split_operator(psi: &mut [Complex64], v: &[f64], dx: f64, hbar: f64, t: f64, steps: usize) {
    let n = psi.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dt = t / steps as f64;
    let half_v: Vec<Complex64> = v.iter().map(|v| (-I * v * dt / (2.0 * hbar)).exp()).collect();
    let kin: Vec<Complex64> = wavenumbers(n, dx).iter().map(|k| (-I * hbar * k * k * dt / 2.0).exp()).collect();
    for _ in 0..steps {
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
        fwd.process(psi);
        psi.iter_mut().zip(&kin).for_each(|(a, b)| *a *= b / n as f64);
        inv.process(psi);
        psi.iter_mut().zip(&half_v).for_each(|(a, b)| *a *= b);
    }
}

fn momentum_variance(psi: &[Complex64], dx: f64, hbar: f64) -> f64 {
    let n = psi.len();
    let mut phi = psi.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut phi);
    let ks = wavenumbers(n, dx);
    let w: Vec<f64> = phi.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    let mean: f64 = ks.iter().zip(&w).map(|(k, w)| k * w).sum::<f64>() / total;
    let var: f64 = ks.iter().zip(&w).map(|(k, w)| (k - mean).powi(2) * w).sum::<f64>() / total;
    hbar * hbar * var
}

#[test]
fn free_packets_match_fft_evolution() {
    let params = CoherentParams::new(0.3, 0.05).unwrap();
    let model = HamiltonianModel::free_particle(1.0, params).unwrap();
    let start = PhasePoint::new(-1.0, 1.0);
    let grid = UniformGrid { start: -8.0, step: 24.0 / 4096.0, n: 4096 };
    for t in [0.5, 3.0] {
        let mut psi: Vec<Complex64> = grid.points().iter().map(|&x| wavefunction(start, &params, x)).collect();
        // one step is exact for the free particle
        split_operator(&mut psi, &vec![0.0; grid.n], grid.step, params.hbar, t, 1);
        let ours = mixed_smoothed_ivr(&model, start, t, &grid).unwrap();
        let heller = mixed_heller(&model, start, t, &grid).unwrap();
        for i in 0..grid.n {
            assert!((ours.amplitudes[i] - psi[i]).norm() < 1e-9, "t = {t} x = {}", grid.x(i));
            assert!((heller.amplitudes[i] - psi[i]).norm() < 1e-9);
        }
    }
}

#[test]
fn sine_basis_evolution_matches_split_operator_on_the_barrier() {
    let params = CoherentParams::new(0.3, 0.05).unwrap();
    let model = HamiltonianModel::barrier(1.0, 1.0, 5.0, 1.0, params).unwrap();
    let start = PhasePoint::new(0.0, 1.0);
    let grid = UniformGrid { start: -10.0, step: 20.0 / 2048.0, n: 2048 };
    let psi0: Vec<Complex64> = grid.points().iter().map(|&x| wavefunction(start, &params, x)).collect();

    let basis = build_basis(&model, BasisSpec::Size(400), None).unwrap();
    let sol = diagonalize(&model, &basis).unwrap();
    let t = 4.0;
    let exact = evolve_exact(&sol, &psi0, &grid, &[t]).unwrap();

    let v: Vec<f64> = grid.points().iter().map(|&x| model.potential(SymbolKind::Weyl, x)).collect();
    let mut psi = psi0.clone();
    split_operator(&mut psi, &v, grid.step, params.hbar, t, 8000);

    let l2: f64 = psi.iter().zip(&exact.psi[0]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * grid.step;
    assert!(l2.sqrt() < 1e-4, "L2 difference {}", l2.sqrt());
}

#[test]
fn smoothed_packet_momentum_width_matches_fft() {
    let params = CoherentParams::new(0.3, 0.05).unwrap();
    let model = HamiltonianModel::barrier(1.0, 1.0, 5.0, 1.0, params).unwrap();
    let grid = UniformGrid { start: -10.0, step: 20.0 / 4096.0, n: 4096 };
    for t in [2.0, 6.0, 9.0] {
        let pk = mixed_smoothed_ivr(&model, PhasePoint::new(0.0, 1.0), t, &grid).unwrap();
        let measured = momentum_variance(&pk.amplitudes, grid.step, params.hbar);
        let predicted = pk.predicted_momentum_variance();
        assert!((measured - predicted).abs() < 1e-6 * predicted, "t = {t}: {measured} vs {predicted}");
    }
}

#[test]
fn coherent_states_resolve_the_identity() {
    // ∫ dq dp/(2πħ) |q,p⟩⟨q,p|ψ⟩ = ψ for ψ the first excited state of a wider oscillator
    let params = CoherentParams::new(0.4, 0.1).unwrap();
    let s = 0.6;
    let target = |x: f64| Complex64::from(2f64.sqrt() * (x / s) * (-0.5 * (x / s).powi(2)).exp() * PI.powf(-0.25) / s.sqrt());
    let x = UniformGrid::spanning(-6.0, 6.0, 1201);
    let psi: Vec<Complex64> = x.points().iter().map(|&v| target(v)).collect();
    let q = UniformGrid::spanning(-5.0, 5.0, 141);
    let p = UniformGrid::spanning(-2.0, 2.0, 141);
    let probes = [-0.9, -0.2, 0.35, 1.1];
    let mut rebuilt = [Complex64::new(0.0, 0.0); 4];
    for i in 0..q.n {
        for j in 0..p.n {
            let z = PhasePoint::new(q.x(i), p.x(j));
            let c = bargmann_transform(&psi, &x, z, &params).unwrap();
            for (r, &xp) in rebuilt.iter_mut().zip(&probes) {
                *r += wavefunction(z, &params, xp) * c;
            }
        }
    }
    let w = q.step * p.step / (2.0 * PI * params.hbar);
    for (r, &xp) in rebuilt.iter().zip(&probes) {
        assert!((r * w - target(xp)).norm() < 1e-6, "x = {xp}: {} vs {}", r * w, target(xp));
    }
}
