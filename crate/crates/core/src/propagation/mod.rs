//! Propagation of eigenbasis states under piecewise-constant controls.

pub mod control;
pub mod diagnostics;
pub mod discretize;
pub mod propagator;

pub use control::{load_control, Piece, PiecewiseConstantControl};
pub use diagnostics::{
    energy, energy_rate, energy_rate_check, galerkin_compare, sobolev_norm, time_reversal_check,
};
pub use discretize::discretize_pulse;
pub use propagator::{propagate, uniform_times, Checkpoints, Propagator, StateVector, Trajectory};
