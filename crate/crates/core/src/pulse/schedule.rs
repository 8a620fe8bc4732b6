//! Critical times and optimal-time search for averaged (RWA) transfers.
//!
//! Driving `(j, k)` with `u*/n` for a `T`-periodic `u*` behaves, for large
//! `n`, like a two-level rotation that completes a full transfer near
//! `n T*` with `T* = πT / (2 |b_jk| |∫_0^T u* e^{i(λ_j-λ_k)t} dt|)`. The
//! actual best time `T*_n` is located inside `(nT* - T, nT* + T)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::cost::lp_norm;
use crate::error::{Error, Result};
use crate::propagation::{discretize_pulse, Propagator, StateVector};
use crate::pulse::shape::{PeriodicPulse, ShapeParams};
use crate::system::GalerkinSystem;
use crate::transitions::{is_nondegenerate, resonance_set, ResonanceSet, DEFAULT_GAP_TOL};

/// Midpoint samples per period for families that are not piecewise constant.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 64;
/// Grid points across the search window.
pub const SCAN_POINTS: usize = 400;
/// Coefficients below this modulus count as vanishing.
pub const VANISHING_TOL: f64 = 1e-12;

const GOLDEN_ITERATIONS: usize = 80;

pub fn fourier_coefficient(pulse: &PeriodicPulse, omega: f64) -> Complex64 {
    pulse.fourier_coefficient(omega)
}

/// `T = 2π / |λ_j - λ_k|`.
pub fn resonant_period(sys: &GalerkinSystem, j: usize, k: usize) -> Result<f64> {
    let gap = (sys.eigenvalue(j) - sys.eigenvalue(k)).abs();
    if gap == 0.0 {
        return Err(Error::validation(format!("levels {j} and {k} have equal energy")));
    }
    Ok(2.0 * PI / gap)
}

/// True iff `u*` has vanishing coefficient at every resonant frequency `λ_l - λ_m`.
pub fn check_resonance_vanishing(pulse: &PeriodicPulse, set: &ResonanceSet, sys: &GalerkinSystem) -> bool {
    set.members.iter().all(|m| {
        let omega = sys.eigenvalue(m.pair.0) - sys.eigenvalue(m.pair.1);
        pulse.fourier_coefficient(omega).norm() <= VANISHING_TOL
    })
}

pub fn critical_time(sys: &GalerkinSystem, j: usize, k: usize, pulse: &PeriodicPulse) -> Result<f64> {
    let record = is_nondegenerate(sys, j, k, DEFAULT_GAP_TOL)?;
    if !record.nondegenerate {
        return Err(Error::validation(format!("transition ({j}, {k}) is degenerate")));
    }
    let coeff = pulse.fourier_coefficient(sys.eigenvalue(j) - sys.eigenvalue(k));
    if coeff.norm() <= VANISHING_TOL {
        return Err(Error::validation(format!(
            "pulse does not drive transition ({j}, {k}): resonant coefficient vanishes"
        )));
    }
    Ok(PI * pulse.period() / (2.0 * record.coupling_modulus * coeff.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub t: f64,
    pub fidelity: f64,
}

/// Result of an optimal-time search for `u*/n`.
#[derive(Debug, Clone, Serialize)]
pub struct PulseSchedule {
    /// `(source, target)` levels.
    pub transition: (usize, usize),
    pub shape: String,
    pub shape_params: ShapeParams,
    pub period: f64,
    pub fourier_coeff: (f64, f64),
    pub t_star: f64,
    pub n: u32,
    pub window: (f64, f64),
    pub t_star_n: f64,
    pub fidelity: f64,
    pub l1_cost: f64,
    /// `None` for piecewise-constant families, which are represented exactly.
    pub steps_per_period: Option<usize>,
    pub levels: usize,
    #[serde(skip)]
    pub scan: Vec<ScanPoint>,
}

fn golden_max(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b)?;
        }
        if hi - lo < 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(if fa >= fb { (a, fa) } else { (b, fb) })
}

/// Propagates `φ_j` under `u*/n` over `[0, nT* + T]` and returns the time in
/// `(nT* - T, nT* + T)` maximizing `|⟨φ_k, Υ_t φ_j⟩|`.
pub fn find_optimal_time(
    sys: &GalerkinSystem,
    j: usize,
    k: usize,
    pulse: &PeriodicPulse,
    n: u32,
    steps_per_period: usize,
) -> Result<PulseSchedule> {
    if n == 0 {
        return Err(Error::validation("scaling n must be >= 1"));
    }
    let period = resonant_period(sys, j, k)?;
    if (pulse.period() - period).abs() > 1e-9 * period {
        return Err(Error::validation(format!(
            "pulse period {} does not match 2π/|λ_{j} - λ_{k}| = {period}",
            pulse.period()
        )));
    }
    let set = resonance_set(sys, j, k, DEFAULT_GAP_TOL)?;
    if !check_resonance_vanishing(pulse, &set, sys) {
        return Err(Error::validation(format!(
            "pulse has non-vanishing coefficients on resonant pairs {:?}",
            set.pairs()
        )));
    }
    let t_star = critical_time(sys, j, k, pulse)?;
    let centre = n as f64 * t_star;
    let (lo, hi) = ((centre - period).max(0.0), centre + period);
    if !(hi > lo && hi.is_finite()) {
        return Err(Error::validation(format!("degenerate search window ({lo}, {hi})")));
    }

    let scaled = pulse.scaled(1.0 / n as f64);
    let control = discretize_pulse(&scaled, hi, steps_per_period)?;
    let psi0 = StateVector::eigenstate(sys.n_levels(), j)?;
    let mut prop = Propagator::new(sys);
    let checkpoints = prop.checkpoints(&control, &psi0, lo)?;
    let mut fidelity_at = |t: f64| -> Result<f64> {
        Ok(checkpoints.state_at(&mut prop, t)?.amplitude(k).norm())
    };

    let h = (hi - lo) / SCAN_POINTS as f64;
    let mut scan = Vec::with_capacity(SCAN_POINTS);
    for i in 0..SCAN_POINTS {
        let t = lo + (i as f64 + 0.5) * h;
        scan.push(ScanPoint {
            t,
            fidelity: fidelity_at(t)?,
        });
    }
    let best = scan
        .iter()
        .copied()
        .fold(scan[0], |a, b| if b.fidelity > a.fidelity { b } else { a });
    let (t_refined, f_refined) = golden_max(
        (best.t - h).max(lo + 1e-12 * hi),
        (best.t + h).min(hi * (1.0 - 1e-15)),
        &mut fidelity_at,
    )?;
    let (t_star_n, fidelity) = if f_refined >= best.fidelity {
        (t_refined, f_refined)
    } else {
        (best.t, best.fidelity)
    };
    let l1_cost = lp_norm(&control.truncated(t_star_n)?, 1.0)?;
    let coeff = pulse.fourier_coefficient(sys.eigenvalue(j) - sys.eigenvalue(k));
    Ok(PulseSchedule {
        transition: (j, k),
        shape: pulse.name().to_string(),
        shape_params: pulse.params(),
        period,
        fourier_coeff: (coeff.re, coeff.im),
        t_star,
        n,
        window: (lo, hi),
        t_star_n,
        fidelity,
        l1_cost,
        steps_per_period: pulse.exact_period().is_none().then_some(steps_per_period),
        levels: sys.n_levels(),
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::build_molecule;

    const T12: f64 = 2.0 * PI / 3.0;

    #[test]
    fn duty_critical_time() {
        let sys = build_molecule(6).unwrap();
        for eta in [0.05, 0.1, 0.4] {
            let p = PeriodicPulse::duty(T12, eta, 1.0).unwrap();
            let t = critical_time(&sys, 1, 2, &p).unwrap();
            let expected = PI * PI / (1.5 * eta).sin();
            assert!((t - expected).abs() < 1e-12 * expected, "{t} vs {expected}");
        }
    }

    #[test]
    fn cosine_critical_time() {
        let sys = build_molecule(6).unwrap();
        let p = PeriodicPulse::cosine(T12, 1.0).unwrap();
        assert!((critical_time(&sys, 1, 2, &p).unwrap() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn stronger_coupling_halves_critical_time() {
        use crate::system::coupling_from_entries;
        let p = PeriodicPulse::cosine(T12, 1.0).unwrap();
        let weak = GalerkinSystem::new(
            "w",
            vec![1.0, 4.0],
            coupling_from_entries(2, &[(1, 2, Complex64::new(0.0, -0.5))]).unwrap(),
        )
        .unwrap();
        let strong = GalerkinSystem::new(
            "s",
            vec![1.0, 4.0],
            coupling_from_entries(2, &[(1, 2, Complex64::new(0.0, -1.0))]).unwrap(),
        )
        .unwrap();
        let ratio = critical_time(&weak, 1, 2, &p).unwrap() / critical_time(&strong, 1, 2, &p).unwrap();
        assert!((ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_coefficient_is_rejected() {
        let sys = build_molecule(4).unwrap();
        let p = PeriodicPulse::constant(T12, 1.0).unwrap();
        let err = critical_time(&sys, 1, 2, &p).unwrap_err();
        assert!(err.to_string().contains("does not drive"), "{err}");
    }

    #[test]
    fn resonance_vanishing_checks() {
        use crate::transitions::{ResonantPair, ResonanceSet};
        let sys = build_molecule(8).unwrap();
        let empty = resonance_set(&sys, 1, 2, DEFAULT_GAP_TOL).unwrap();
        let duty = PeriodicPulse::duty(T12, 0.1, 1.0).unwrap();
        assert!(check_resonance_vanishing(&duty, &empty, &sys));
        // pretend (1,3) (gap 8) and (2,4) (gap 12 = 2·6) were resonant for a drive at 6
        let fake = ResonanceSet {
            transition: (1, 2),
            members: vec![ResonantPair { pair: (2, 4), gap: 12.0, multiple: 2 }],
            truncation: 8,
        };
        let cosine6 = PeriodicPulse::cosine(2.0 * PI / 6.0, 1.0).unwrap();
        assert!(check_resonance_vanishing(&cosine6, &fake, &sys));
        let duty6 = PeriodicPulse::duty(2.0 * PI / 6.0, 0.1, 1.0).unwrap();
        assert!(!check_resonance_vanishing(&duty6, &fake, &sys));
    }

    #[test]
    fn schedule_window_and_bounds() {
        let sys = build_molecule(8).unwrap();
        let p = PeriodicPulse::duty(T12, 0.4, 1.0).unwrap();
        let s = find_optimal_time(&sys, 1, 2, &p, 4, DEFAULT_STEPS_PER_PERIOD).unwrap();
        let centre = 4.0 * s.t_star;
        assert!(s.t_star_n > centre - T12 && s.t_star_n < centre + T12);
        assert!(s.fidelity <= 1.0 + 1e-9);
        assert!(s.fidelity > 0.9);
        assert_eq!(s.scan.len(), SCAN_POINTS);
        assert!(s.scan.iter().all(|p| p.fidelity <= s.fidelity + 1e-12));
        assert_eq!(s.steps_per_period, None);
    }

    #[test]
    fn mismatched_period_is_rejected() {
        let sys = build_molecule(4).unwrap();
        let p = PeriodicPulse::cosine(1.0, 1.0).unwrap();
        assert!(find_optimal_time(&sys, 1, 2, &p, 2, 64).is_err());
        let p = PeriodicPulse::cosine(T12, 1.0).unwrap();
        assert!(find_optimal_time(&sys, 1, 2, &p, 0, 64).is_err());
        assert!(find_optimal_time(&sys, 1, 3, &p, 1, 64).is_err());
    }
}
