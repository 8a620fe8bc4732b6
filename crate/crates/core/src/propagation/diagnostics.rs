//! Energy, Sobolev-type norms and consistency checks on propagations.

use num_complex::Complex64;

use super::control::PiecewiseConstantControl;
use super::propagator::{Propagator, StateVector};
use crate::error::{Error, Result};
use crate::linalg::expm::EigenExp;
use crate::system::GalerkinSystem;

/// Finite-difference step for [`energy_rate_check`], relative to the piece length.
pub const ENERGY_FD_RELATIVE_STEP: f64 = 1e-4;

fn check_dim(sys: &GalerkinSystem, psi: &StateVector) -> Result<()> {
    if sys.n_levels() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.n_levels(),
            found: psi.dim(),
        });
    }
    Ok(())
}

/// `E(ψ) = Σ λ_k |ψ_k|²`.
pub fn energy(sys: &GalerkinSystem, psi: &StateVector) -> Result<f64> {
    check_dim(sys, psi)?;
    Ok(sys
        .spectrum()
        .iter()
        .zip(psi.amplitudes().as_slice())
        .map(|(l, z)| l * z.norm_sqr())
        .sum())
}

/// `dE/dt = 2 u Re⟨iAψ, Bψ⟩` evaluated at the state `psi`.
pub fn energy_rate(sys: &GalerkinSystem, psi: &StateVector, u: f64) -> Result<f64> {
    check_dim(sys, psi)?;
    let amps = psi.amplitudes().as_slice();
    let b_psi = sys.coupling().inner() * psi.raw();
    let re: f64 = sys
        .spectrum()
        .iter()
        .zip(amps)
        .zip(b_psi.iter())
        .map(|((l, z), bz)| (Complex64::new(*l, 0.0) * z).conj() * bz)
        .map(|w| w.re)
        .sum();
    Ok(2.0 * u * re)
}

/// Centered finite difference of the energy (`lhs`) against the analytic rate (`rhs`) at `t`.
///
/// `dt` defaults to [`ENERGY_FD_RELATIVE_STEP`] times the length of the piece
/// containing `t`; `[t - dt, t + dt]` must lie strictly inside that piece.
pub fn energy_rate_check(
    sys: &GalerkinSystem,
    u: &PiecewiseConstantControl,
    psi0: &StateVector,
    t: f64,
    dt: Option<f64>,
) -> Result<(f64, f64)> {
    let piece = u
        .pieces()
        .find(|p| p.start < t && t < p.end)
        .ok_or_else(|| {
            Error::validation(format!(
                "energy rate undefined at t = {t}: not interior to a constant piece"
            ))
        })?;
    let dt = dt.unwrap_or(ENERGY_FD_RELATIVE_STEP * piece.len());
    if !(dt > 0.0) || t - dt <= piece.start || t + dt >= piece.end {
        return Err(Error::validation(format!(
            "finite-difference stencil [{}, {}] leaves the piece ({}, {})",
            t - dt,
            t + dt,
            piece.start,
            piece.end
        )));
    }
    let states = Propagator::new(sys).sample(u, psi0, &[t - dt, t, t + dt])?;
    let lhs = (energy(sys, &states[2])? - energy(sys, &states[0])?) / (2.0 * dt);
    let rhs = energy_rate(sys, &states[1], piece.value)?;
    Ok((lhs, rhs))
}

/// `(Σ λ_k^s |ψ_k|²)^{1/2}`, the `|A|^{s/2}` norm.
pub fn sobolev_norm(sys: &GalerkinSystem, psi: &StateVector, s: f64) -> Result<f64> {
    check_dim(sys, psi)?;
    if !(s >= 0.0) {
        return Err(Error::validation(format!("sobolev exponent must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(psi.norm());
    }
    if sys.has_zero_eigenvalue() {
        return Err(Error::validation(
            "sobolev norm with s > 0 needs a strictly positive spectrum",
        ));
    }
    Ok(sys
        .spectrum()
        .iter()
        .zip(psi.amplitudes().as_slice())
        .map(|(l, z)| l.powf(s) * z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Largest distance over `sample_times` between the propagation in
/// `sys_small` (zero-extended) and in `sys_large`. The distance includes
/// the mass the large system puts on levels the small one lacks.
pub fn galerkin_compare(
    sys_small: &GalerkinSystem,
    sys_large: &GalerkinSystem,
    u: &PiecewiseConstantControl,
    psi0: &StateVector,
    sample_times: &[f64],
) -> Result<f64> {
    if !sys_small.is_truncation_of(sys_large) {
        return Err(Error::validation(format!(
            "`{}` is not a leading truncation of `{}`",
            sys_small.label(),
            sys_large.label()
        )));
    }
    let large_dim = sys_large.n_levels();
    let small = Propagator::new(sys_small).sample(u, psi0, sample_times)?;
    let large = Propagator::new(sys_large).sample(u, &psi0.embedded(large_dim), sample_times)?;
    Ok(small
        .iter()
        .zip(&large)
        .map(|(s, l)| s.embedded(large_dim).amplitudes().distance(l.amplitudes()))
        .fold(0.0, f64::max))
}

/// Frobenius distance between `X_(A,B)^u(T,0)†` and `X_(-A,-B)^ũ(T,0)` with `ũ(t) = u(T - t)`.
pub fn time_reversal_check(sys: &GalerkinSystem, u: &PiecewiseConstantControl) -> Result<f64> {
    let forward = Propagator::new(sys).propagator_matrix(u)?;
    let mut backward = Propagator::from_matrices(-&sys.a_matrix(), -sys.coupling(), &EigenExp)?;
    let reversed = backward.propagator_matrix(&u.reversed())?;
    let diff = &forward.adjoint() - &reversed;
    Ok(diff.inner().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}
