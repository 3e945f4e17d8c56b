//! Semiclassical propagation in one dimension built on coherent states.
//!
//! The crate covers the coherent-state propagator from complex classical
//! trajectories, mixed position/coherent-state propagators (including
//! Herman–Kluk and thawed Gaussians), semiclassical quantization and Husimi
//! densities, and an exact sine-basis reference solver.

pub mod asymptotics;
pub mod classical;
pub mod cli;
pub mod coherent;
pub mod complextraj;
pub mod error;
pub mod hamiltonian;
pub mod ivr;
pub mod ode;
pub mod phase;
pub mod quad;
pub mod quantum;
pub mod spectral;

pub use num_complex::Complex64;

pub use classical::{PeriodicOrbit, RealTrajectory, TangentMatrix};
pub use coherent::{CoherentParams, ComplexLabel, ComplexPhase, PhasePoint};
pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianModel, SymbolKind};
