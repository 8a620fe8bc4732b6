//! Simulation and control-cost analysis for bilinear quantum systems
//! `dψ/dt = (A + u(t) B) ψ` in a truncated eigenbasis.
//!
//! * [`system`]: the `(A, B)` pair, the planar-molecule model, system files.
//! * [`propagation`]: exact propagation under piecewise-constant controls.
//! * [`transitions`]: non-degenerate transitions and resonance sets.
//! * [`pulse`]: rotating-wave pulses and optimal transfer times.
//! * [`cost`]: `L^p` norms and the bounds on minimal transfer cost.
//! * [`cli`]: the `bilqctrl` command line and its output files.

// Range guards are written `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cost;
pub mod error;
pub mod format;
pub mod linalg;
pub mod propagation;
pub mod pulse;
pub mod system;
pub mod transitions;

pub use error::{Error, Result};
pub use propagation::{PiecewiseConstantControl, StateVector};
pub use pulse::PeriodicPulse;
pub use system::{build_molecule, GalerkinSystem};
