//! Rotating-wave pulse synthesis for non-degenerate transitions.

pub mod schedule;
pub mod shape;

pub use schedule::{
    check_resonance_vanishing, critical_time, find_optimal_time, fourier_coefficient, resonant_period,
    PulseSchedule, ScanPoint, DEFAULT_STEPS_PER_PERIOD,
};
pub use shape::{Constant, Cosine, Duty, PeriodicPulse, PulseShape, ShapeParams, ShapeRegistry};
