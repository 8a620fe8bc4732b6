use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::format::{csv_preamble, round_json, CSV_FORMAT_VERSION};
use crate::propagation::propagator::csv_err;
use crate::system::{GalerkinSystem, SystemFile};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Output directory that remembers what was written to it.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

fn to_json_text(value: &impl Serialize) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::validation(format!("json: {e}")))?;
    round_json(&mut v);
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::validation(format!("json: {e}")))?;
    text.push('\n');
    Ok(text)
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Pretty JSON with every float rounded to 12 significant digits.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        fs::write(self.path(name), to_json_text(value)?)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// A versioned CSV table; cells are expected to be pre-formatted.
    pub fn write_csv(&mut self, name: &str, table: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut file = fs::File::create(self.path(name))?;
        file.write_all(csv_preamble(table).as_bytes())?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Records a file written by other code under this directory.
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    /// Writes the manifest last so that it lists every output.
    pub fn finish(self, cfg: &RunConfig, sys: &GalerkinSystem) -> Result<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            manifest_format: MANIFEST_FORMAT_VERSION,
            csv_format: CSV_FORMAT_VERSION,
            command: cfg.subcommand_name(),
            args: cfg.canonical_args(),
            command_line: cfg.canonical_line(),
            seed: cfg.seed,
            config: cfg,
            system: SystemFile::from_system(sys),
            outputs: &self.written,
        };
        // Unrounded, so that file-based systems are restored exactly.
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::validation(format!("json: {e}")))?;
        text.push('\n');
        fs::write(self.path(MANIFEST_NAME), text)?;
        Ok(())
    }
}

/// Everything needed to repeat a run: the canonical arguments plus a copy of
/// the resolved system, so file-based systems can be restored.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    manifest_format: u32,
    csv_format: u32,
    command: &'static str,
    args: Vec<String>,
    command_line: String,
    seed: u64,
    config: &'a RunConfig,
    system: SystemFile,
    outputs: &'a [String],
}
