//! `L^p` control costs and the bounds that bracket `C_1` and `C_r`.
//!
//! Lower bounds hold for every control; upper bounds come from the RWA
//! pulses of [`crate::pulse`]. For the molecule ground transition the two
//! meet at `π`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagation::{PiecewiseConstantControl, Propagator, StateVector};
use crate::pulse::{find_optimal_time, resonant_period, PeriodicPulse, DEFAULT_STEPS_PER_PERIOD};
use crate::system::GalerkinSystem;

/// `‖u‖_{L^p(0,T)}`, exact for piecewise-constant `u`.
pub fn lp_norm(u: &PiecewiseConstantControl, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::OutOfScope(format!(
            "L^p costs are only defined here for p >= 1, got p = {p}"
        )));
    }
    let sum: f64 = u.pieces().map(|piece| piece.value.abs().powf(p) * piece.len()).sum();
    Ok(if p == 1.0 { sum } else { sum.powf(1.0 / p) })
}

/// `| |⟨φ_j, φ_k⟩| - |⟨φ_j, Υ φ_k⟩| | / ‖B φ_j‖`, where `final_state = Υ φ_k`.
///
/// Every control producing `final_state` from `φ_k` has at least this `L^1` norm.
pub fn generic_l1_lower_bound(sys: &GalerkinSystem, j: usize, k: usize, final_state: &StateVector) -> Result<f64> {
    let n = sys.n_levels();
    if j == 0 || k == 0 || j > n || k > n {
        return Err(Error::validation(format!("pair ({j}, {k}) outside levels 1..={n}")));
    }
    if final_state.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: final_state.dim(),
        });
    }
    let column = sys.coupling_column_norm(j);
    if column == 0.0 {
        return Err(Error::validation(format!("B φ_{j} = 0: bound undefined")));
    }
    let start = if j == k { 1.0 } else { 0.0 };
    Ok((start - final_state.amplitude(j).norm()).abs() / column)
}

/// `‖u‖_1` minus the generic lower bound for `φ_k → ·` measured on level `j`.
pub fn generic_bound_slack(sys: &GalerkinSystem, u: &PiecewiseConstantControl, j: usize, k: usize) -> Result<f64> {
    let psi = Propagator::new(sys).evolve(u, &StateVector::eigenstate(sys.n_levels(), k)?)?;
    Ok(lp_norm(u, 1.0)? - generic_l1_lower_bound(sys, j, k, &psi)?)
}

/// `2 arctan(√(1/|y₁|² - 1))`: the least `L^1` norm that can bring `|⟨φ₁, Υ φ₁⟩|` down to `y1_abs`.
pub fn min_l1_for_overlap(y1_abs: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&y1_abs) {
        return Err(Error::validation(format!("|y1| must lie in [0, 1], got {y1_abs}")));
    }
    if y1_abs == 0.0 {
        return Ok(PI);
    }
    let ratio = (1.0 / (y1_abs * y1_abs) - 1.0).max(0.0);
    Ok(2.0 * ratio.sqrt().atan())
}

/// `sin(l1/2)` for `l1 < π`, else `1`: the largest reachable `|⟨φ₂, Υ φ₁⟩|`.
pub fn fidelity_cap(l1: f64) -> Result<f64> {
    if !(l1 >= 0.0) {
        return Err(Error::validation(format!("L^1 norm must be >= 0, got {l1}")));
    }
    Ok(if l1 >= PI { 1.0 } else { (l1 / 2.0).sin() })
}

/// `cos(l1/2)` for `l1 < π`, else `0`: the smallest reachable `|⟨φ₁, Υ φ₁⟩|`.
pub fn overlap_floor(l1: f64) -> Result<f64> {
    if !(l1 >= 0.0) {
        return Err(Error::validation(format!("L^1 norm must be >= 0, got {l1}")));
    }
    Ok(if l1 >= PI { 0.0 } else { (l1 / 2.0).cos() })
}

/// Shape of the random controls used in bound verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomControlSpec {
    pub max_pieces: usize,
    pub min_duration: f64,
    pub max_duration: f64,
}

impl Default for RandomControlSpec {
    fn default() -> Self {
        RandomControlSpec {
            max_pieces: 20,
            min_duration: 0.1,
            max_duration: 50.0,
        }
    }
}

impl RandomControlSpec {
    /// 1..=max_pieces pieces, values uniform in [-1, 1] rescaled to `‖u‖_1 = l1_budget`,
    /// total duration log-uniform in `[min_duration, max_duration]`.
    pub fn sample(&self, rng: &mut impl Rng, l1_budget: f64) -> PiecewiseConstantControl {
        let pieces = rng.random_range(1..=self.max_pieces);
        let log_span = (self.max_duration / self.min_duration).ln();
        let duration = self.min_duration * (rng.random::<f64>() * log_span).exp();
        let weights: Vec<f64> = (0..pieces).map(|_| 0.05 + rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let lengths: Vec<f64> = weights.iter().map(|w| duration * w / total).collect();
        let raw: Vec<f64> = (0..pieces).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let raw_l1: f64 = raw.iter().zip(&lengths).map(|(v, l)| v.abs() * l).sum();
        let scale = if raw_l1 > 0.0 { l1_budget / raw_l1 } else { 0.0 };
        let spec: Vec<(f64, f64)> = lengths.iter().zip(&raw).map(|(&l, &v)| (l, v * scale)).collect();
        PiecewiseConstantControl::from_pieces(&spec).expect("positive lengths and finite values")
    }
}

/// Deterministic generator for trial `index` of a seeded batch.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapTrial {
    pub index: usize,
    pub l1: f64,
    pub duration: f64,
    pub transfer: f64,
    pub survival: f64,
    /// `sin(l1/2) - |⟨φ₂, Υ φ₁⟩|`
    pub cap_margin: f64,
    /// `|⟨φ₁, Υ φ₁⟩| - cos(l1/2)`
    pub floor_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapReport {
    pub seed: u64,
    pub trials: usize,
    pub l1_budget: f64,
    pub min_cap_margin: f64,
    pub min_floor_margin: f64,
    pub results: Vec<CapTrial>,
}

fn check_molecule_family(sys: &GalerkinSystem) -> Result<()> {
    let n = sys.n_levels();
    let only_neighbour = (1..=n).all(|l| l == 2 || sys.coupling_entry(l, 1).norm() == 0.0);
    let strength = if n >= 2 { sys.coupling_entry(2, 1).norm() } else { 0.0 };
    if !only_neighbour || (strength - 0.5).abs() > 1e-12 {
        return Err(Error::validation(
            "fidelity cap needs φ₁ coupled only to φ₂ with |b_12| = 1/2",
        ));
    }
    Ok(())
}

/// Checks `|⟨φ₂, Υ φ₁⟩| <= sin(‖u‖₁/2)` and `|⟨φ₁, Υ φ₁⟩| >= cos(‖u‖₁/2)`
/// over `trials` seeded random controls of `L^1` norm `l1_budget`.
pub fn verify_fidelity_cap(
    sys: &GalerkinSystem,
    trials: usize,
    l1_budget: f64,
    seed: u64,
    spec: &RandomControlSpec,
) -> Result<CapReport> {
    check_molecule_family(sys)?;
    if !(0.0..PI).contains(&l1_budget) {
        return Err(Error::validation(format!(
            "L^1 budget must lie in [0, π), got {l1_budget}"
        )));
    }
    let psi0 = StateVector::eigenstate(sys.n_levels(), 1)?;
    let results = (0..trials)
        .into_par_iter()
        .map(|index| {
            let u = spec.sample(&mut trial_rng(seed, index as u64), l1_budget);
            let psi = Propagator::new(sys).evolve(&u, &psi0)?;
            let l1 = lp_norm(&u, 1.0)?;
            let transfer = psi.amplitude(2).norm();
            let survival = psi.amplitude(1).norm();
            Ok(CapTrial {
                index,
                l1,
                duration: u.duration(),
                transfer,
                survival,
                cap_margin: fidelity_cap(l1)? - transfer,
                floor_margin: survival - overlap_floor(l1)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_cap_margin = results.iter().map(|r| r.cap_margin).fold(f64::INFINITY, f64::min);
    let min_floor_margin = results.iter().map(|r| r.floor_margin).fold(f64::INFINITY, f64::min);
    Ok(CapReport {
        seed,
        trials,
        l1_budget,
        min_cap_margin,
        min_floor_margin,
        results,
    })
}

/// `(3π/2) η / |sin(3η/2)|`: the molecule duty-pulse cost bound.
pub fn duty_cost_bound(eta: f64) -> f64 {
    1.5 * PI * eta / (1.5 * eta).sin().abs()
}

/// Default smallest scaling in a cost sweep. Below it the cost resolution of
/// one duty pulse, `η/n`, exceeds the spacing between the bounds of nearby `η`.
pub const DEFAULT_MIN_N: u32 = 16;
pub const DEFAULT_MAX_N: u32 = 256;

/// Scaling factors tried by [`c1_upper_sweep`]: `min_n` doubled up to `max_n`, then `max_n`.
pub fn sweep_schedule(min_n: u32, max_n: u32) -> Vec<u32> {
    if min_n == 0 || max_n < min_n {
        return Vec::new();
    }
    let mut ns: Vec<u32> = std::iter::successors(Some(min_n), |&n| n.checked_mul(2))
        .take_while(|&n| n <= max_n)
        .collect();
    if ns.last() != Some(&max_n) {
        ns.push(max_n);
    }
    ns
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub n: u32,
    pub t_star: f64,
    pub t_star_n: f64,
    pub fidelity: f64,
    pub l1_cost: f64,
    /// Closed-form bound on the cost at this `η` (molecule `(1,2)` only).
    pub cost_bound: Option<f64>,
    pub reached: bool,
}

fn is_molecule_ground_pair(sys: &GalerkinSystem, pair: (usize, usize)) -> bool {
    pair == (1, 2)
        && sys.eigenvalue(1) == 1.0
        && sys.eigenvalue(2) == 4.0
        && (sys.coupling_entry(1, 2).norm() - 0.5).abs() < 1e-15
}

/// For each `η`, drives `pair` with the duty pulse `u^η/n` along the
/// schedule until `fidelity_target` is reached. Returns every attempted
/// `(η, n)` cell, ordered by `η` index then `n`.
pub fn c1_upper_sweep(
    sys: &GalerkinSystem,
    pair: (usize, usize),
    etas: &[f64],
    fidelity_target: f64,
    min_n: u32,
    max_n: u32,
) -> Result<Vec<SweepRow>> {
    let period = resonant_period(sys, pair.0, pair.1)?;
    let schedule = sweep_schedule(min_n, max_n);
    if schedule.is_empty() {
        return Err(Error::validation(format!(
            "need 1 <= min_n <= max_n, got min_n = {min_n}, max_n = {max_n}"
        )));
    }
    let cost_bound = is_molecule_ground_pair(sys, pair);
    let per_eta = etas
        .par_iter()
        .map(|&eta| {
            let pulse = PeriodicPulse::duty(period, eta, 1.0)?;
            let mut rows = Vec::new();
            for &n in &schedule {
                let s = find_optimal_time(sys, pair.0, pair.1, &pulse, n, DEFAULT_STEPS_PER_PERIOD)?;
                let reached = s.fidelity >= fidelity_target;
                rows.push(SweepRow {
                    eta,
                    n,
                    t_star: s.t_star,
                    t_star_n: s.t_star_n,
                    fidelity: s.fidelity,
                    l1_cost: s.l1_cost,
                    cost_bound: cost_bound.then(|| duty_cost_bound(eta)),
                    reached,
                });
                if reached {
                    break;
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_eta.into_iter().flatten().collect())
}

/// The last attempted row for each `η`, in sweep order.
pub fn final_rows(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut out: Vec<SweepRow> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some(last) if last.eta == row.eta => *last = row.clone(),
            _ => out.push(row.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrRow {
    pub r: f64,
    pub n: u32,
    pub t_star_n: f64,
    pub norm: f64,
    /// `n^{(1-r)/r} ((T*/T + 2) ∫_0^T |u*|^r)^{1/r}`
    pub bound: f64,
}

/// `‖u*/n‖_{L^r(0, T*_n)}` along `n_list`, with its analytic upper bound.
pub fn lr_scaling_report(
    sys: &GalerkinSystem,
    j: usize,
    k: usize,
    pulse: &PeriodicPulse,
    r: f64,
    n_list: &[u32],
    steps_per_period: usize,
) -> Result<Vec<LrRow>> {
    if !(r > 1.0) {
        return Err(Error::validation(format!("L^r scaling needs r > 1, got {r}")));
    }
    n_list
        .par_iter()
        .map(|&n| {
            let s = find_optimal_time(sys, j, k, pulse, n, steps_per_period)?;
            let control = crate::propagation::discretize_pulse(&pulse.scaled(1.0 / n as f64), s.t_star_n, steps_per_period)?;
            let norm = lp_norm(&control, r)?;
            let nf = n as f64;
            let bound = nf.powf((1.0 - r) / r)
                * ((s.t_star / s.period + 2.0) * pulse.power_integral(r)).powf(1.0 / r);
            Ok(LrRow {
                r,
                n,
                t_star_n: s.t_star_n,
                norm,
                bound,
            })
        })
        .collect()
}

/// Interval evidence for `C_1(φ_j, φ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C1Bracket {
    /// Least `L^1` norm compatible with the best fidelity observed.
    pub lower: f64,
    /// Cheapest observed control reaching the target fidelity.
    pub upper: f64,
    pub width: f64,
}

/// Brackets `C_1(φ₁, φ₂)` from sweep rows: the lower end is
/// `2 arcsin(max fidelity)`, which by the two-level bound no control beats.
pub fn c1_bracket(rows: &[SweepRow]) -> Option<C1Bracket> {
    let upper = rows
        .iter()
        .filter(|r| r.reached)
        .map(|r| r.l1_cost)
        .fold(f64::INFINITY, f64::min);
    if !upper.is_finite() {
        return None;
    }
    let best = rows.iter().map(|r| r.fidelity).fold(0.0, f64::max).min(1.0);
    let lower = min_l1_for_overlap((1.0 - best * best).max(0.0).sqrt()).ok()?;
    Some(C1Bracket {
        lower,
        upper,
        width: upper - lower,
    })
}
