use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reads a control file: `{"breakpoints": [...], "values": [...]}`.
pub fn load_control(path: impl AsRef<Path>) -> Result<PiecewiseConstantControl> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Scalar control `u(t) = Σ u_i χ_(t_i, t_{i+1})(t)` on `[0, t_M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ControlFile", into = "ControlFile")]
pub struct PiecewiseConstantControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlFile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<ControlFile> for PiecewiseConstantControl {
    type Error = Error;
    fn try_from(f: ControlFile) -> Result<Self> {
        PiecewiseConstantControl::new(f.breakpoints, f.values)
    }
}

impl From<PiecewiseConstantControl> for ControlFile {
    fn from(c: PiecewiseConstantControl) -> Self {
        ControlFile {
            breakpoints: c.breakpoints,
            values: c.values,
        }
    }
}

/// One constant stretch of a control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Piece {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

impl PiecewiseConstantControl {
    /// `breakpoints` must start at 0 and increase strictly; one value per interval.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("control needs at least one piece"));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::validation(format!(
                "control has {} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::validation("control must start at t = 0"));
        }
        if breakpoints.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("control breakpoints and values must be finite"));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!(
                "breakpoints must increase strictly: t_{} = {} >= t_{} = {}",
                i,
                breakpoints[i],
                i + 1,
                breakpoints[i + 1]
            )));
        }
        Ok(PiecewiseConstantControl { breakpoints, values })
    }

    /// Builds a control from consecutive `(length, value)` pieces.
    pub fn from_pieces(pieces: &[(f64, f64)]) -> Result<Self> {
        let mut breakpoints = Vec::with_capacity(pieces.len() + 1);
        let mut t = 0.0;
        breakpoints.push(t);
        for &(len, _) in pieces {
            t += len;
            breakpoints.push(t);
        }
        Self::new(breakpoints, pieces.iter().map(|p| p.1).collect())
    }

    pub fn constant(value: f64, duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn duration(&self) -> f64 {
        *self.breakpoints.last().expect("at least two breakpoints")
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.values.iter())
            .map(|(w, &value)| Piece {
                start: w[0],
                end: w[1],
                value,
            })
    }

    /// Index of the piece containing `t`; a breakpoint belongs to the piece it ends.
    pub fn piece_index(&self, t: f64) -> Option<usize> {
        if !(0.0..=self.duration()).contains(&t) {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&b| b < t);
        Some(idx.saturating_sub(1).min(self.values.len() - 1))
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.piece_index(t).map(|i| self.values[i])
    }

    /// Restriction to `[0, end]`.
    pub fn truncated(&self, end: f64) -> Result<Self> {
        if !(end > 0.0 && end <= self.duration()) {
            return Err(Error::validation(format!(
                "truncation time {end} outside (0, {}]",
                self.duration()
            )));
        }
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        for p in self.pieces() {
            if p.start >= end {
                break;
            }
            breakpoints.push(p.end.min(end));
            values.push(p.value);
        }
        Self::new(breakpoints, values)
    }

    /// Extends the control with `u = 0` up to `duration`.
    pub fn zero_padded(&self, duration: f64) -> Result<Self> {
        if duration < self.duration() {
            return Err(Error::validation("padding cannot shorten a control"));
        }
        if duration == self.duration() {
            return Ok(self.clone());
        }
        let mut c = self.clone();
        c.breakpoints.push(duration);
        c.values.push(0.0);
        Ok(c)
    }

    /// `t ↦ u(T - t)`.
    pub fn reversed(&self) -> Self {
        let total = self.duration();
        let mut breakpoints: Vec<f64> = self.breakpoints.iter().rev().map(|&b| total - b).collect();
        breakpoints[0] = 0.0;
        *breakpoints.last_mut().unwrap() = total;
        let values = self.values.iter().rev().copied().collect();
        PiecewiseConstantControl { breakpoints, values }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseConstantControl {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        let offset = self.duration();
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(other.breakpoints[1..].iter().map(|b| b + offset));
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        PiecewiseConstantControl { breakpoints, values }
    }

    /// Merges neighbouring pieces that carry the same value.
    pub fn merged(&self) -> Self {
        let mut breakpoints = vec![0.0];
        let mut values: Vec<f64> = Vec::new();
        for p in self.pieces() {
            if values.last() == Some(&p.value) {
                *breakpoints.last_mut().unwrap() = p.end;
            } else {
                values.push(p.value);
                breakpoints.push(p.end);
            }
        }
        PiecewiseConstantControl { breakpoints, values }
    }

    /// `∫_0^t u(τ) dτ`.
    pub fn primitive(&self, t: f64) -> f64 {
        self.pieces()
            .take_while(|p| p.start < t)
            .map(|p| p.value * (p.end.min(t) - p.start))
            .sum()
    }
}
