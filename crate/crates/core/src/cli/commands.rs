use std::fs;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    ConvergenceArgs, CostSweepArgs, ModelArgs, PropagateArgs, RunConfig, SynthesizeArgs,
};
use super::output::OutputDir;
use crate::cost::{
    c1_bracket, final_rows, generic_bound_slack, lp_norm, lr_scaling_report, trial_rng, verify_fidelity_cap,
    C1Bracket, CapReport, LrRow, RandomControlSpec, SweepRow,
};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::linalg::{ComplexMatrix, ExpmRegistry};
use crate::propagation::{
    discretize_pulse, energy, galerkin_compare, load_control, uniform_times, PiecewiseConstantControl, Propagator,
    StateVector, Trajectory,
};
use crate::pulse::{find_optimal_time, resonant_period, PeriodicPulse, ShapeParams, ShapeRegistry};
use crate::system::{system_to_json, GalerkinSystem};
use crate::transitions::{chain_of_connectedness, is_nondegenerate, resonance_set, ResonantPair, TransitionRecord};

fn opt_cell(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

fn complex_cell(z: Complex64) -> String {
    match (z.re == 0.0, z.im == 0.0) {
        (true, true) => "0".into(),
        (false, true) => sig12(z.re),
        (true, false) => format!("{}i", sig12(z.im)),
        (false, false) => {
            let sign = if z.im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", sig12(z.re), sig12(z.im.abs()))
        }
    }
}

/// Bracketed rows with aligned columns.
pub fn render_matrix(name: &str, m: &ComplexMatrix) -> String {
    let n = m.dim();
    let cells: Vec<Vec<String>> = (0..n).map(|j| (0..n).map(|k| complex_cell(m.get(j, k))).collect()).collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    let mut out = format!("{name}^({n}) =\n");
    for row in &cells {
        let padded: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        out.push_str(&format!("[ {} ]\n", padded.join("  ")));
    }
    out
}

fn shape_pulse(shape: &str, period: f64, amplitude: f64, eta: Option<f64>) -> Result<PeriodicPulse> {
    let mut params = ShapeParams::new(period, amplitude);
    params.eta = eta;
    if shape == "duty" && eta.is_none() {
        return Err(Error::validation("shape `duty` needs --eta"));
    }
    ShapeRegistry::default().build(shape, &params)
}

fn check_pair(sys: &GalerkinSystem, j: usize, k: usize) -> Result<()> {
    let n = sys.n_levels();
    if j == 0 || k == 0 || j > n || k > n {
        return Err(Error::validation(format!("pair ({j}, {k}) outside levels 1..={n}")));
    }
    Ok(())
}

pub fn model(args: &ModelArgs, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    fs::write(out.path("system.json"), system_to_json(sys))?;
    out.record("system.json");
    if args.print {
        print!("{}", render_matrix("A", &sys.a_matrix()));
        print!("{}", render_matrix("B", sys.coupling()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PropagationSummary {
    duration: f64,
    pieces: usize,
    l1_norm: f64,
    initial_level: usize,
    method: String,
    final_populations: Vec<f64>,
    max_norm_defect: f64,
    initial_energy: f64,
    final_energy: f64,
    /// `‖u‖_1` minus the generic lower bound, per target level; `None` where `Bφ_j = 0`.
    l1_bound_slack: Vec<Option<f64>>,
}

pub fn propagate(args: &PropagateArgs, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    let control = match &args.control {
        Some(path) => load_control(path)?,
        None => {
            let duration = args
                .duration
                .ok_or_else(|| Error::validation("propagate needs --duration or --control"))?;
            let period = match args.period {
                Some(p) => p,
                None => {
                    check_pair(sys, args.pair.0, args.pair.1)?;
                    resonant_period(sys, args.pair.0, args.pair.1)?
                }
            };
            let pulse = shape_pulse(&args.shape, period, args.amplitude, args.eta)?;
            discretize_pulse(&pulse, duration, args.steps_per_period)?
        }
    };
    check_pair(sys, args.initial, args.initial)?;
    let registry = ExpmRegistry::default();
    let method = registry.get(&args.method)?;
    let psi0 = StateVector::eigenstate(sys.n_levels(), args.initial)?;
    let times = uniform_times(control.duration(), args.samples.max(2));
    let states = Propagator::with_method(sys, method).sample(&control, &psi0, &times)?;
    let traj = Trajectory {
        times,
        states,
        control: control.clone(),
    };
    let last = traj.final_state().expect("at least two samples");
    let l1_bound_slack = (1..=sys.n_levels())
        .map(|j| {
            if sys.coupling_column_norm(j) == 0.0 {
                Ok(None)
            } else {
                generic_bound_slack(sys, &control, j, args.initial).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = PropagationSummary {
        duration: control.duration(),
        pieces: control.n_pieces(),
        l1_norm: lp_norm(&control, 1.0)?,
        initial_level: args.initial,
        method: args.method.clone(),
        final_populations: last.amplitudes().as_slice().iter().map(|z| z.norm_sqr()).collect(),
        max_norm_defect: traj.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max),
        initial_energy: energy(sys, &psi0)?,
        final_energy: energy(sys, last)?,
        l1_bound_slack,
    };

    let file = fs::File::create(out.path("trajectory.csv"))?;
    traj.write_csv(sys, std::io::BufWriter::new(file))?;
    out.record("trajectory.csv");
    out.write_json("control.json", &control)?;
    out.write_json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct TransitionEntry {
    #[serde(flatten)]
    record: TransitionRecord,
    /// Present for non-degenerate transitions only.
    resonance_set: Option<Vec<ResonantPair>>,
}

#[derive(Serialize)]
struct TransitionsReport {
    truncation: usize,
    gap_tol: f64,
    transitions: Vec<TransitionEntry>,
    connectivity: crate::transitions::ChainReport,
}

pub fn transitions(cfg: &RunConfig, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    let n = sys.n_levels();
    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|j| (j + 1..=n).map(move |k| (j, k)))
        .filter(|&(j, k)| sys.coupling_entry(j, k).norm() > 0.0)
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(j, k)| {
            let record = is_nondegenerate(sys, j, k, cfg.gap_tol)?;
            let resonance_set = if record.nondegenerate {
                Some(resonance_set(sys, j, k, cfg.gap_tol)?.members)
            } else {
                None
            };
            Ok(TransitionEntry { record, resonance_set })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = TransitionsReport {
        truncation: n,
        gap_tol: cfg.gap_tol,
        transitions: entries,
        connectivity: chain_of_connectedness(sys, cfg.gap_tol),
    };
    out.write_json("transitions.json", &report)
}

pub fn synthesize(args: &SynthesizeArgs, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    let sys = match args.levels {
        Some(levels) => sys.truncate(levels)?,
        None => sys.clone(),
    };
    let (j, k) = (args.pair.0, args.pair.1);
    check_pair(&sys, j, k)?;
    let period = resonant_period(&sys, j, k)?;
    let pulse = shape_pulse(&args.shape, period, args.amplitude, args.eta)?;
    let schedule = find_optimal_time(&sys, j, k, &pulse, args.n, args.steps_per_period)?;
    out.write_json("schedule.json", &schedule)?;
    if args.scan {
        let rows: Vec<Vec<String>> = schedule
            .scan
            .iter()
            .map(|p| vec![sig12(p.t), sig12(p.fidelity)])
            .collect();
        out.write_csv("scan.csv", "scan", &["t", "fidelity"], &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LowerBoundBatch {
    l1_budget: f64,
    seed: u64,
    trials: usize,
    min_cap_margin: f64,
    min_floor_margin: f64,
}

#[derive(Serialize)]
struct CostSweepSummary {
    pair: (usize, usize),
    target_fidelity: f64,
    best_per_eta: Vec<SweepRow>,
    c1_bracket: Option<C1Bracket>,
    lower_bound_batches: Vec<LowerBoundBatch>,
    lr_min_ratio_per_doubling: Vec<(f64, f64)>,
}

/// Seed of batch `batch` in a multi-budget run.
pub fn batch_seed(seed: u64, batch: usize) -> u64 {
    seed.wrapping_add(batch as u64)
}

pub fn cost_sweep(cfg: &RunConfig, args: &CostSweepArgs, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    let (j, k) = (args.pair.0, args.pair.1);
    check_pair(sys, j, k)?;
    let rows = crate::cost::c1_upper_sweep(sys, (j, k), &args.etas, args.target_fidelity, args.min_n, args.max_n)?;
    let sweep_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sig12(r.eta),
                r.n.to_string(),
                sig12(r.t_star),
                sig12(r.t_star_n),
                sig12(r.fidelity),
                sig12(r.l1_cost),
                opt_cell(r.cost_bound),
                r.reached.to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "sweep.csv",
        "sweep",
        &["eta", "n", "t_star", "t_star_n", "fidelity", "l1_cost", "cost_bound", "reached"],
        &sweep_rows,
    )?;

    let period = resonant_period(sys, j, k)?;
    let lr_pulse = PeriodicPulse::duty(period, args.lr_eta, 1.0)?;
    let mut lr: Vec<LrRow> = Vec::new();
    for &r in &args.r_values {
        lr.extend(lr_scaling_report(sys, j, k, &lr_pulse, r, &args.lr_n, crate::pulse::DEFAULT_STEPS_PER_PERIOD)?);
    }
    let lr_rows: Vec<Vec<String>> = lr
        .iter()
        .map(|r| vec![sig12(r.r), r.n.to_string(), sig12(r.t_star_n), sig12(r.norm), sig12(r.bound)])
        .collect();
    out.write_csv("lr.csv", "lr", &["r", "n", "t_star_n", "norm", "bound"], &lr_rows)?;
    let lr_min_ratio_per_doubling = args
        .r_values
        .iter()
        .map(|&r| {
            let of_r: Vec<&LrRow> = lr.iter().filter(|row| row.r == r).collect();
            let min = of_r
                .windows(2)
                .map(|w| w[1].norm / w[0].norm)
                .fold(f64::INFINITY, f64::min);
            (r, min)
        })
        .collect();

    let spec = RandomControlSpec::default();
    let mut batches = Vec::new();
    let mut cap_rows = Vec::new();
    if args.trials > 0 {
        for (b, &budget) in args.budgets.iter().enumerate() {
            let seed = batch_seed(cfg.seed, b);
            let report: CapReport = verify_fidelity_cap(sys, args.trials, budget, seed, &spec)?;
            for t in &report.results {
                cap_rows.push(vec![
                    sig12(budget),
                    t.index.to_string(),
                    sig12(t.l1),
                    sig12(t.duration),
                    sig12(t.transfer),
                    sig12(t.survival),
                    sig12(t.cap_margin),
                    sig12(t.floor_margin),
                ]);
            }
            batches.push(LowerBoundBatch {
                l1_budget: budget,
                seed,
                trials: report.trials,
                min_cap_margin: report.min_cap_margin,
                min_floor_margin: report.min_floor_margin,
            });
        }
        out.write_csv(
            "lower_bound.csv",
            "lower-bound",
            &["budget", "index", "l1", "duration", "transfer", "survival", "cap_margin", "floor_margin"],
            &cap_rows,
        )?;
    }

    let summary = CostSweepSummary {
        pair: (j, k),
        target_fidelity: args.target_fidelity,
        best_per_eta: final_rows(&rows),
        c1_bracket: c1_bracket(&rows),
        lower_bound_batches: batches,
        lr_min_ratio_per_doubling,
    };
    out.write_json("summary.json", &summary)
}

#[derive(Serialize)]
struct DiscretizationRow {
    steps_per_period: usize,
    endpoint_error: f64,
}

#[derive(Serialize)]
struct ConvergenceSummary {
    small_levels: usize,
    large_levels: usize,
    max_deviation: f64,
    max_padded_deviation: f64,
    discretization: Vec<DiscretizationRow>,
    oracle_steps: usize,
    strictly_decreasing: bool,
}

/// Max deviation between truncations over the control, and over the control
/// zero-padded to `pad_factor` times its duration. The padded run samples
/// the original times plus the same density across the padding, so the two
/// maxima differ only by what happens after the control ends.
pub fn galerkin_deviation(
    small: &GalerkinSystem,
    large: &GalerkinSystem,
    u: &PiecewiseConstantControl,
    level: usize,
    samples: usize,
    pad_factor: f64,
) -> Result<(f64, f64)> {
    let psi0 = StateVector::eigenstate(small.n_levels(), level)?;
    let times = uniform_times(u.duration(), samples);
    let base = galerkin_compare(small, large, u, &psi0, &times)?;
    let padded_u = u.zero_padded(pad_factor * u.duration())?;
    let tail_samples = ((pad_factor - 1.0) * samples as f64).ceil() as usize;
    let tail_len = padded_u.duration() - u.duration();
    let padded_times: Vec<f64> = times
        .iter()
        .copied()
        .chain((1..=tail_samples).map(|i| {
            if i == tail_samples {
                padded_u.duration()
            } else {
                u.duration() + tail_len * i as f64 / tail_samples as f64
            }
        }))
        .collect();
    let padded = galerkin_compare(small, large, &padded_u, &psi0, &padded_times)?;
    Ok((base, padded))
}

/// Endpoint distance to the `oracle_steps` discretization, per entry of `steps`.
pub fn discretization_errors(
    sys: &GalerkinSystem,
    pulse: &PeriodicPulse,
    duration: f64,
    level: usize,
    steps: &[usize],
    oracle_steps: usize,
) -> Result<Vec<f64>> {
    let psi0 = StateVector::eigenstate(sys.n_levels(), level)?;
    let endpoint = |s: usize| -> Result<StateVector> {
        Propagator::new(sys).evolve(&discretize_pulse(pulse, duration, s)?, &psi0)
    };
    let oracle = endpoint(oracle_steps)?;
    steps
        .par_iter()
        .map(|&s| Ok(endpoint(s)?.amplitudes().distance(oracle.amplitudes())))
        .collect()
}

pub fn convergence(cfg: &RunConfig, args: &ConvergenceArgs, sys: &GalerkinSystem, out: &mut OutputDir) -> Result<()> {
    if args.small_levels >= sys.n_levels() {
        return Err(Error::validation(format!(
            "--small-levels {} must be below the system size {}",
            args.small_levels,
            sys.n_levels()
        )));
    }
    if !(args.pad_factor >= 1.0) {
        return Err(Error::validation(format!("--pad-factor must be >= 1, got {}", args.pad_factor)));
    }
    let (j, k) = (args.pair.0, args.pair.1);
    check_pair(sys, j, k)?;
    let small = sys.truncate(args.small_levels)?;
    let spec = RandomControlSpec::default();
    let cells: Vec<(usize, f64, usize)> = args
        .budgets
        .iter()
        .enumerate()
        .flat_map(|(b, &budget)| (0..args.trials).map(move |i| (b, budget, i)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(b, budget, i)| {
            let u = spec.sample(&mut trial_rng(batch_seed(cfg.seed, b), i as u64), budget);
            let (dev, padded) = galerkin_deviation(&small, sys, &u, j, args.samples, args.pad_factor)?;
            let row = vec![
                sig12(budget),
                i.to_string(),
                sig12(lp_norm(&u, 1.0)?),
                sig12(u.duration()),
                sig12(dev),
                sig12(padded),
            ];
            Ok((row, dev, padded))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_padded_deviation = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let rows: Vec<Vec<String>> = results.into_iter().map(|r| r.0).collect();
    out.write_csv(
        "galerkin.csv",
        "galerkin",
        &["budget", "index", "l1", "duration", "deviation", "padded_deviation"],
        &rows,
    )?;

    let period = resonant_period(sys, j, k)?;
    let pulse = PeriodicPulse::cosine(period, args.amplitude)?;
    let errors = discretization_errors(sys, &pulse, args.periods * period, j, &args.steps, args.oracle_steps)?;
    let discretization: Vec<DiscretizationRow> = args
        .steps
        .iter()
        .zip(&errors)
        .map(|(&s, &e)| DiscretizationRow {
            steps_per_period: s,
            endpoint_error: e,
        })
        .collect();
    out.write_csv(
        "discretization.csv",
        "discretization",
        &["steps_per_period", "endpoint_error"],
        &discretization
            .iter()
            .map(|d| vec![d.steps_per_period.to_string(), sig12(d.endpoint_error)])
            .collect::<Vec<_>>(),
    )?;
    let summary = ConvergenceSummary {
        small_levels: args.small_levels,
        large_levels: sys.n_levels(),
        max_deviation,
        max_padded_deviation,
        strictly_decreasing: errors.windows(2).all(|w| w[1] < w[0]),
        discretization,
        oracle_steps: args.oracle_steps,
    };
    out.write_json("summary.json", &summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::build_molecule;

    #[test]
    fn molecule_matrices_render() {
        let sys = build_molecule(2).unwrap();
        assert_eq!(render_matrix("A", &sys.a_matrix()), "A^(2) =\n[ -1i    0 ]\n[   0  -4i ]\n");
        assert_eq!(
            render_matrix("B", sys.coupling()),
            "B^(2) =\n[     0  -0.5i ]\n[ -0.5i      0 ]\n"
        );
    }

    #[test]
    fn complex_cells() {
        assert_eq!(complex_cell(Complex64::new(1.5, -2.0)), "1.5-2i");
        assert_eq!(complex_cell(Complex64::new(-1.0, 0.0)), "-1");
        assert_eq!(complex_cell(Complex64::new(0.0, 0.25)), "0.25i");
    }

    #[test]
    fn duty_requires_eta() {
        assert!(shape_pulse("duty", 1.0, 1.0, None).is_err());
        assert!(shape_pulse("duty", 1.0, 1.0, Some(0.1)).is_ok());
        assert!(shape_pulse("square", 1.0, 1.0, None).is_err());
    }
}
