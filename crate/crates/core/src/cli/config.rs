use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cost::{DEFAULT_MAX_N, DEFAULT_MIN_N};
use crate::error::Result;
use crate::pulse::DEFAULT_STEPS_PER_PERIOD;
use crate::system::{build_molecule, load_system, GalerkinSystem};
use crate::transitions::DEFAULT_GAP_TOL;

/// Where the `(A, B)` pair comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemSource {
    Molecule(usize),
    File(PathBuf),
}

impl SystemSource {
    pub fn load(&self) -> Result<GalerkinSystem> {
        match self {
            SystemSource::Molecule(n) => build_molecule(*n),
            SystemSource::File(path) => load_system(path),
        }
    }
}

impl FromStr for SystemSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.strip_prefix("molecule:") {
            Some(n) => n
                .parse()
                .map(SystemSource::Molecule)
                .map_err(|_| format!("expected `molecule:N` with integer N, got `{s}`")),
            None if s.is_empty() => Err("empty system source".into()),
            None => Ok(SystemSource::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for SystemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSource::Molecule(n) => write!(f, "molecule:{n}"),
            SystemSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl Serialize for SystemSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A `j,k` level pair (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pair(pub usize, pub usize);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (j, k) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `j,k`, got `{s}`"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("expected `j,k` with integer levels, got `{s}`"))
        };
        Ok(Pair(parse(j)?, parse(k)?))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0, self.1)
    }
}

/// Parsed command line. [`RunConfig::canonical_args`] renders it back to
/// an argument list that parses to an equal value.
#[derive(Debug, Clone, PartialEq, Parser, Serialize)]
#[command(name = "bilqctrl", version, about = "Bilinear quantum control: propagation, RWA pulses, L^p cost bounds")]
pub struct RunConfig {
    /// `molecule:N` or a path to a system file.
    #[arg(long, global = true, default_value = "molecule:10")]
    pub system: SystemSource,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Relative tolerance for equal spectral gaps.
    #[arg(long, global = true, default_value_t = DEFAULT_GAP_TOL)]
    pub gap_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Write the system file and optionally print `A` and `B`.
    Model(ModelArgs),
    /// Propagate an eigenstate and export the trajectory.
    Propagate(PropagateArgs),
    /// Non-degenerate transitions, resonance sets and connectivity.
    Transitions(TransitionsArgs),
    /// Optimal transfer time for a rotating-wave pulse `u*/n`.
    Synthesize(SynthesizeArgs),
    /// Duty-pulse L^1 sweep, L^r scaling and random-control bound checks.
    CostSweep(CostSweepArgs),
    /// Galerkin truncation and discretization convergence.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct ModelArgs {
    /// Print the matrices to stdout.
    #[arg(long)]
    pub print: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct PropagateArgs {
    /// Control file; overrides the pulse flags.
    #[arg(long)]
    pub control: Option<PathBuf>,
    #[arg(long, default_value = "constant")]
    pub shape: String,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Pulse period; defaults to the resonant period of `--pair`.
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, default_value = "1,2")]
    pub pair: Pair,
    /// Required unless `--control` is given.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_PERIOD)]
    pub steps_per_period: usize,
    /// Initial eigenstate (1-based).
    #[arg(long, default_value_t = 1)]
    pub initial: usize,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Matrix exponential: `eigen` or `pade`.
    #[arg(long, default_value = "eigen")]
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct TransitionsArgs {}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct SynthesizeArgs {
    #[arg(long, default_value = "1,2")]
    pub pair: Pair,
    #[arg(long, default_value = "cosine")]
    pub shape: String,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 24)]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Truncate the system to this many levels first.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_PERIOD)]
    pub steps_per_period: usize,
    /// Also write the fidelity scan over the search window.
    #[arg(long)]
    pub scan: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct CostSweepArgs {
    #[arg(long, default_value = "1,2")]
    pub pair: Pair,
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05])]
    pub etas: Vec<f64>,
    #[arg(long, default_value_t = 0.99)]
    pub target_fidelity: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_N)]
    pub min_n: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    pub max_n: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.0, 4.0])]
    pub r_values: Vec<f64>,
    /// Duty width for the L^r scaling table.
    #[arg(long, default_value_t = 0.1)]
    pub lr_eta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
    pub lr_n: Vec<u32>,
    /// Random controls per budget; 0 skips the lower-bound check.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0])]
    pub budgets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize)]
pub struct ConvergenceArgs {
    /// Levels of the smaller truncation; the larger one is `--system`.
    #[arg(long, default_value_t = 8)]
    pub small_levels: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 3.0])]
    pub budgets: Vec<f64>,
    #[arg(long, default_value_t = 5.0)]
    pub pad_factor: f64,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    #[arg(long, default_value = "1,2")]
    pub pair: Pair,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Pulse periods covered by the discretization study.
    #[arg(long, default_value_t = 4.0)]
    pub periods: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 64])]
    pub steps: Vec<usize>,
    #[arg(long, default_value_t = 1024)]
    pub oracle_steps: usize,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

struct ArgList(Vec<String>);

impl ArgList {
    fn flag(&mut self, name: &str, value: impl ToString) {
        self.0.push(format!("--{name}"));
        self.0.push(value.to_string());
    }

    fn opt(&mut self, name: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.flag(name, v);
        }
    }

    fn switch(&mut self, name: &str, on: bool) {
        if on {
            self.0.push(format!("--{name}"));
        }
    }
}

impl RunConfig {
    pub fn subcommand_name(&self) -> &'static str {
        match self.command {
            Command::Model(_) => "model",
            Command::Propagate(_) => "propagate",
            Command::Transitions(_) => "transitions",
            Command::Synthesize(_) => "synthesize",
            Command::CostSweep(_) => "cost-sweep",
            Command::Convergence(_) => "convergence",
        }
    }

    /// Every setting spelled out, defaults included, program name excluded.
    pub fn canonical_args(&self) -> Vec<String> {
        let mut a = ArgList(Vec::new());
        a.flag("system", &self.system);
        a.flag("out", self.out.display());
        a.flag("seed", self.seed);
        a.flag("gap-tol", self.gap_tol);
        a.0.push(self.subcommand_name().to_string());
        match &self.command {
            Command::Model(m) => a.switch("print", m.print),
            Command::Propagate(p) => {
                a.opt("control", p.control.as_ref().map(|c| c.display()));
                a.flag("shape", &p.shape);
                a.flag("amplitude", p.amplitude);
                a.opt("eta", p.eta);
                a.opt("period", p.period);
                a.flag("pair", p.pair);
                a.opt("duration", p.duration);
                a.flag("steps-per-period", p.steps_per_period);
                a.flag("initial", p.initial);
                a.flag("samples", p.samples);
                a.flag("method", &p.method);
            }
            Command::Transitions(_) => {}
            Command::Synthesize(s) => {
                a.flag("pair", s.pair);
                a.flag("shape", &s.shape);
                a.opt("eta", s.eta);
                a.flag("n", s.n);
                a.flag("amplitude", s.amplitude);
                a.opt("levels", s.levels);
                a.flag("steps-per-period", s.steps_per_period);
                a.switch("scan", s.scan);
            }
            Command::CostSweep(c) => {
                a.flag("pair", c.pair);
                a.flag("etas", join(&c.etas));
                a.flag("target-fidelity", c.target_fidelity);
                a.flag("min-n", c.min_n);
                a.flag("max-n", c.max_n);
                a.flag("r-values", join(&c.r_values));
                a.flag("lr-eta", c.lr_eta);
                a.flag("lr-n", join(&c.lr_n));
                a.flag("trials", c.trials);
                a.flag("budgets", join(&c.budgets));
            }
            Command::Convergence(c) => {
                a.flag("small-levels", c.small_levels);
                a.flag("trials", c.trials);
                a.flag("budgets", join(&c.budgets));
                a.flag("pad-factor", c.pad_factor);
                a.flag("samples", c.samples);
                a.flag("pair", c.pair);
                a.flag("amplitude", c.amplitude);
                a.flag("periods", c.periods);
                a.flag("steps", join(&c.steps));
                a.flag("oracle-steps", c.oracle_steps);
            }
        }
        a.0
    }

    /// The canonical arguments joined into one shell-style line.
    pub fn canonical_line(&self) -> String {
        std::iter::once("bilqctrl".to_string())
            .chain(self.canonical_args())
            .collect::<Vec<_>>()
            .join(" ")
    }
}
