//! Fully implicit (backward-Euler) simulation of convected linearized
//! thermo-visco-elastodynamics in the Eulerian frame.
//!
//! The model couples mass transport, momentum with Kelvin-Voigt plus
//! second-grade (multipolar) viscosity, a corotationally convected small
//! strain with Maxwellian creep in the deviatoric part (Jeffreys rheology),
//! and a heat equation driven by viscous dissipation and adiabatic
//! compression. Every time step solves the coupled nonlinear system
//! monolithically with Newton's method on a cell-centered structured grid,
//! and a diagnostics layer checks the discrete conservation, dissipation,
//! and entropy structure of the scheme at run time.

pub mod config;
pub mod convergence;
pub mod diagnostics;
pub mod grid;
pub mod linsolve;
pub mod material;
pub mod ops;
pub mod output;
pub mod par;
pub mod scenario;
pub mod state;
pub mod stepper;
pub mod tensor;
pub mod util;

pub mod cli;

pub use config::RunConfig;
pub use grid::{Field, Grid};
pub use material::{DissipationModel, HeatModel, MaterialModel};
pub use state::State;
pub use stepper::{StepConfig, Trajectory};
