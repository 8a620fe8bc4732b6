//! Command-line front end. Every run writes its outputs and a
//! `manifest.json` holding the canonical arguments and the resolved system.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use config::{Command, Pair, RunConfig, SystemSource};
pub use output::{OutputDir, MANIFEST_NAME};

use crate::error::{Error, Result};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "BILQCTRL_THREADS";

/// Parses `argv` (program name first) and runs it; returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::validation(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs a parsed configuration, honouring `BILQCTRL_THREADS`.
pub fn execute(cfg: &RunConfig) -> Result<()> {
    match thread_count()? {
        None => dispatch(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?
            .install(|| dispatch(cfg)),
    }
}

fn dispatch(cfg: &RunConfig) -> Result<()> {
    let sys = cfg.system.load()?;
    let mut out = OutputDir::create(&cfg.out)?;
    match &cfg.command {
        Command::Model(a) => commands::model(a, &sys, &mut out)?,
        Command::Propagate(a) => commands::propagate(a, &sys, &mut out)?,
        Command::Transitions(_) => commands::transitions(cfg, &sys, &mut out)?,
        Command::Synthesize(a) => commands::synthesize(a, &sys, &mut out)?,
        Command::CostSweep(a) => commands::cost_sweep(cfg, a, &sys, &mut out)?,
        Command::Convergence(a) => commands::convergence(cfg, a, &sys, &mut out)?,
    }
    out.finish(cfg, &sys)
}
