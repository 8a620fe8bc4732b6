use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::control::{Piece, PiecewiseConstantControl};
use super::diagnostics::energy;
use crate::error::{Error, Result};
use crate::format::{csv_preamble, sig12};
use crate::linalg::{expm::EigenExp, ComplexMatrix, ComplexVector, ExpmMethod, PreparedExp};
use crate::system::GalerkinSystem;

/// Allowed deviation from unit norm for initial states.
pub const NORM_TOL: f64 = 1e-9;

/// A wave function in eigenbasis coordinates: `amplitudes[k-1] = ⟨φ_k, ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: ComplexVector,
}

impl StateVector {
    pub fn new(amplitudes: ComplexVector) -> Self {
        StateVector { amplitudes }
    }

    /// Eigenstate `φ_level`, one-based.
    pub fn eigenstate(dim: usize, level: usize) -> Result<Self> {
        if level == 0 || level > dim {
            return Err(Error::validation(format!("level {level} outside 1..={dim}")));
        }
        Ok(StateVector::new(ComplexVector::basis(dim, level - 1)))
    }

    pub fn from_amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        Ok(StateVector::new(ComplexVector::from_slice(amplitudes)?))
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.dim()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `⟨φ_level, ψ⟩`.
    pub fn amplitude(&self, level: usize) -> Complex64 {
        self.amplitudes.get(level - 1)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub(crate) fn raw(&self) -> &DVector<Complex64> {
        self.amplitudes.inner()
    }

    pub(crate) fn from_raw(v: DVector<Complex64>) -> Self {
        StateVector::new(ComplexVector::from_inner_unchecked(v))
    }

    /// Zero-extends to `dim` levels.
    pub fn embedded(&self, dim: usize) -> StateVector {
        let mut v = DVector::zeros(dim);
        v.rows_mut(0, self.dim()).copy_from(self.raw());
        StateVector::from_raw(v)
    }
}

/// States sampled along a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub control: PiecewiseConstantControl,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// CSV export: a version comment line, then `t, re_1, im_1, …, re_N, im_N, norm, energy`.
    pub fn write_csv(&self, sys: &GalerkinSystem, mut out: impl Write) -> Result<()> {
        out.write_all(csv_preamble("trajectory").as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        let n = sys.n_levels();
        let mut header = vec!["t".to_string()];
        for k in 1..=n {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        header.push("norm".into());
        header.push("energy".into());
        w.write_record(&header).map_err(csv_err)?;
        for (t, psi) in self.times.iter().zip(&self.states) {
            let mut row = vec![sig12(*t)];
            for z in psi.amplitudes().as_slice() {
                row.push(sig12(z.re));
                row.push(sig12(z.im));
            }
            row.push(sig12(psi.norm()));
            row.push(sig12(energy(sys, psi)?));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::validation(format!("csv: {other:?}")),
    }
}

/// Evolution under `d/dt ψ = (D + u C) ψ` for piecewise-constant `u`.
///
/// Exponential factors are prepared once per distinct control value and
/// re-evaluated for every interval length, so partial intervals at sample
/// times cost one extra evaluation and never interpolate states.
pub struct Propagator<'m> {
    drift: ComplexMatrix,
    coupling: ComplexMatrix,
    method: &'m dyn ExpmMethod,
    cache: HashMap<u64, Box<dyn PreparedExp>>,
}

impl Propagator<'static> {
    pub fn new(sys: &GalerkinSystem) -> Self {
        Propagator::with_method(sys, &EigenExp)
    }
}

impl<'m> Propagator<'m> {
    pub fn with_method(sys: &GalerkinSystem, method: &'m dyn ExpmMethod) -> Self {
        Propagator {
            drift: sys.a_matrix(),
            coupling: sys.coupling().clone(),
            method,
            cache: HashMap::new(),
        }
    }

    /// Propagator for an arbitrary skew-Hermitian pair, e.g. `(-A, -B)`.
    pub fn from_matrices(drift: ComplexMatrix, coupling: ComplexMatrix, method: &'m dyn ExpmMethod) -> Result<Self> {
        if drift.dim() != coupling.dim() {
            return Err(Error::DimensionMismatch {
                expected: drift.dim(),
                found: coupling.dim(),
            });
        }
        Ok(Propagator {
            drift,
            coupling,
            method,
            cache: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    fn factor(&mut self, u: f64) -> Result<&dyn PreparedExp> {
        let key = u.to_bits();
        if !self.cache.contains_key(&key) {
            let generator = &self.drift + &self.coupling.scale(u);
            let prepared = self.method.prepare(&generator)?;
            self.cache.insert(key, prepared);
        }
        Ok(self.cache[&key].as_ref())
    }

    /// `exp(dt (D + u C)) v`.
    pub fn advance(&mut self, u: f64, dt: f64, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if dt == 0.0 {
            return Ok(v.clone());
        }
        Ok(self.factor(u)?.apply(dt, v))
    }

    pub fn step_matrix(&mut self, u: f64, dt: f64) -> Result<ComplexMatrix> {
        Ok(self.factor(u)?.matrix(dt))
    }

    fn check_state(&self, psi0: &StateVector) -> Result<()> {
        if psi0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi0.dim(),
            });
        }
        if (psi0.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "initial state must have unit norm within {NORM_TOL:e} (norm {})",
                psi0.norm()
            )));
        }
        Ok(())
    }

    /// State at `T = u.duration()`.
    pub fn evolve(&mut self, u: &PiecewiseConstantControl, psi0: &StateVector) -> Result<StateVector> {
        self.check_state(psi0)?;
        let mut v = psi0.raw().clone();
        for p in u.pieces() {
            v = self.advance(p.value, p.len(), &v)?;
        }
        Ok(StateVector::from_raw(v))
    }

    /// States at the non-decreasing `times ⊆ [0, T]`.
    pub fn sample(
        &mut self,
        u: &PiecewiseConstantControl,
        psi0: &StateVector,
        times: &[f64],
    ) -> Result<Vec<StateVector>> {
        self.check_state(psi0)?;
        check_sample_times(u, times)?;
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        let mut v = psi0.raw().clone();
        for p in u.pieces() {
            if next == times.len() {
                break;
            }
            while next < times.len() && times[next] <= p.end {
                out.push(StateVector::from_raw(self.advance(p.value, times[next] - p.start, &v)?));
                next += 1;
            }
            v = self.advance(p.value, p.len(), &v)?;
        }
        Ok(out)
    }

    /// Full matrix `X^u(T, 0)`.
    pub fn propagator_matrix(&mut self, u: &PiecewiseConstantControl) -> Result<ComplexMatrix> {
        let mut x = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        for p in u.pieces() {
            let step = self.step_matrix(p.value, p.len())?;
            x = step.inner() * x;
        }
        Ok(ComplexMatrix::from_inner_unchecked(x))
    }

    /// Records the state at the start of every piece that ends at or after
    /// `from`, for cheap evaluation at arbitrary later times.
    pub fn checkpoints(
        &mut self,
        u: &PiecewiseConstantControl,
        psi0: &StateVector,
        from: f64,
    ) -> Result<Checkpoints> {
        self.check_state(psi0)?;
        let mut pieces = Vec::new();
        let mut starts = Vec::new();
        let mut v = psi0.raw().clone();
        for p in u.pieces() {
            if p.end >= from {
                pieces.push(p);
                starts.push(v.clone());
            }
            v = self.advance(p.value, p.len(), &v)?;
        }
        Ok(Checkpoints { pieces, starts })
    }
}

pub(crate) fn check_sample_times(u: &PiecewiseConstantControl, times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("sample times must be non-decreasing"));
    }
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=u.duration()).contains(&t)) {
        return Err(Error::validation(format!(
            "sample time {t} outside [0, {}]",
            u.duration()
        )));
    }
    Ok(())
}

/// Piece-start states produced by [`Propagator::checkpoints`].
pub struct Checkpoints {
    pieces: Vec<Piece>,
    starts: Vec<DVector<Complex64>>,
}

impl Checkpoints {
    pub fn first_time(&self) -> Option<f64> {
        self.pieces.first().map(|p| p.start)
    }

    pub fn state_at(&self, prop: &mut Propagator<'_>, t: f64) -> Result<StateVector> {
        let idx = self.pieces.partition_point(|p| p.end < t);
        let piece = self
            .pieces
            .get(idx)
            .filter(|p| p.start <= t)
            .ok_or_else(|| Error::validation(format!("time {t} not covered by checkpoints")))?;
        let v = prop.advance(piece.value, t - piece.start, &self.starts[idx])?;
        Ok(StateVector::from_raw(v))
    }
}

/// Propagates `psi0` under `u` and records the states at `sample_times`.
pub fn propagate(
    sys: &GalerkinSystem,
    u: &PiecewiseConstantControl,
    psi0: &StateVector,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let states = Propagator::new(sys).sample(u, psi0, sample_times)?;
    Ok(Trajectory {
        times: sample_times.to_vec(),
        states,
        control: u.clone(),
    })
}

/// `count` evenly spaced times covering `[0, duration]`.
pub fn uniform_times(duration: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![duration],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    duration
                } else {
                    duration * (i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}
