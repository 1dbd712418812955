//! Solver library for the dynamical evolution of two interacting narrowband
//! photon pulses in Rydberg-EIT atomic media.
//!
//! Two pulses propagate in parallel waveguides threading pencil-shaped atomic
//! ensembles. Each pulse drives a three-level ladder (ground, decaying
//! intermediate, Rydberg) and is described by three complex field profiles on
//! a 1-D grid: the light field, the polarization on the decaying level, and
//! the Rydberg spinwave. The van der Waals interaction between the two
//! Rydberg spinwaves enters as a self-consistently computed nonlocal
//! potential, i.e. a space- and time-dependent two-photon detuning, built
//! from a freely evolving reference copy of the partner pulse.
//!
//! The crate is organized along the moving parts of the solver:
//!
//! - [`model`] — domain types, unit conventions, control schedules and
//!   boundary envelopes, configuration validation.
//! - [`potential`] — transverse-reduced vdW interaction kernels and the four
//!   potential models (nonlocal effective, mean-field, constant, blockade).
//! - [`propagation`] — the quasistatic slow-light time stepper, a
//!   method-of-lines reference backend, and the model variants
//!   (full, constant-potential, mean-field, adiabatic-elimination, blockade).
//! - [`analysis`] — susceptibility/dispersion/group-velocity analytics and
//!   run post-processing (trajectories, transmission, stored-spinwave
//!   metrics, pair correlations).
//! - [`config`], [`io`], [`cli`] — JSON configuration ingestion, shipped
//!   scenario presets, binary/CSV result persistence, sweep orchestration,
//!   and the command-line surface.
//!
//! Unit conventions: every rate is an angular rate in rad/µs, every length is
//! in µm, every time in µs. Light fields are stored Rabi-scaled (the product
//! of the single-atom coupling with the field envelope), so only the
//! collective coupling `G` ever enters the dynamics.
//!
//! See the `examples/` directory for one runnable example per major
//! capability; the `rydpulse` binary exposes the same machinery as
//! subcommands (`run`, `chi`, `sweep`, `compare`, `presets`).

// Numeric kernels iterate parallel arrays by index.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod io;
pub mod model;
pub mod potential;
pub mod propagation;

/// Speed of light in vacuum, µm/µs. The single place this constant lives.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// 2π, for converting ordinary frequencies (MHz) to angular rates (rad/µs).
pub const TWO_PI: f64 = std::f64::consts::TAU;

pub use model::{ControlSchedule, EntrySide, FieldState, Geometry, Grid, MediumSpec, PulseSpec};
pub use propagation::{run, ModelVariant, SimulationResult};
