//! Exponentials of skew-Hermitian generators.
//!
//! Two interchangeable methods are registered by name:
//!
//! * `eigen`: spectral decomposition of the Hermitian matrix `iM`, so that
//!   `exp(tM) = V diag(exp(-i t w)) V†`. Exact up to rounding for normal
//!   matrices and cheap to re-evaluate at any `t` once factored.
//! * `pade`: scaling and squaring with a Padé approximant (nalgebra's
//!   `exp`). Slower, independent of any eigensolver, and used to
//!   cross-check `eigen`.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{ComplexMatrix, I, SKEW_TOL};
use crate::error::{Error, Result};

/// `exp(tM)` for a generator `M` that has already been factored or stored.
pub trait PreparedExp: Send + Sync {
    fn dim(&self) -> usize;

    fn matrix(&self, t: f64) -> ComplexMatrix;

    fn apply(&self, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.matrix(t).inner() * v
    }
}

/// A strategy for exponentiating skew-Hermitian matrices.
pub trait ExpmMethod: Send + Sync {
    fn name(&self) -> &'static str;

    /// Validates `m` and readies it for repeated evaluation at different times.
    fn prepare(&self, m: &ComplexMatrix) -> Result<Box<dyn PreparedExp>>;
}

pub(crate) fn validate_skew(m: &ComplexMatrix) -> Result<()> {
    let defect = m.skew_hermitian_defect();
    if defect > SKEW_TOL * m.max_abs().max(1.0) {
        return Err(Error::validation(format!(
            "generator is not skew-Hermitian: defect {defect:.3e} exceeds tolerance {SKEW_TOL:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EigenExp;

struct SpectralFactor {
    vectors: DMatrix<Complex64>,
    vectors_adj: DMatrix<Complex64>,
    /// Eigenvalues of the Hermitian matrix `iM`.
    frequencies: Vec<f64>,
}

impl SpectralFactor {
    fn phases(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.frequencies
            .iter()
            .map(move |&w| Complex64::from_polar(1.0, -w * t))
    }
}

impl PreparedExp for SpectralFactor {
    fn dim(&self) -> usize {
        self.frequencies.len()
    }

    fn matrix(&self, t: f64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, phase) in scaled.column_iter_mut().zip(self.phases(t)) {
            col *= phase;
        }
        ComplexMatrix::from_inner_unchecked(scaled * &self.vectors_adj)
    }

    fn apply(&self, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut coeffs = &self.vectors_adj * v;
        for (c, phase) in coeffs.iter_mut().zip(self.phases(t)) {
            *c *= phase;
        }
        &self.vectors * coeffs
    }
}

impl ExpmMethod for EigenExp {
    fn name(&self) -> &'static str {
        "eigen"
    }

    fn prepare(&self, m: &ComplexMatrix) -> Result<Box<dyn PreparedExp>> {
        validate_skew(m)?;
        let hermitian = m.inner().map(|z| z * I);
        let eig = SymmetricEigen::new(hermitian);
        let vectors_adj = eig.eigenvectors.adjoint();
        Ok(Box::new(SpectralFactor {
            vectors: eig.eigenvectors,
            vectors_adj,
            frequencies: eig.eigenvalues.iter().copied().collect(),
        }))
    }
}

/// nalgebra's Padé scaling and squaring, evaluated afresh for each `t`.
#[derive(Debug, Default, Clone, Copy)]
pub struct PadeSquaring;

struct StoredGenerator {
    generator: DMatrix<Complex64>,
    memo: Mutex<HashMap<u64, ComplexMatrix>>,
}

impl PreparedExp for StoredGenerator {
    fn dim(&self) -> usize {
        self.generator.nrows()
    }

    fn matrix(&self, t: f64) -> ComplexMatrix {
        let mut memo = self.memo.lock().expect("expm memo poisoned");
        memo.entry(t.to_bits())
            .or_insert_with(|| {
                let a = &self.generator * Complex64::new(t, 0.0);
                ComplexMatrix::from_inner_unchecked(a.exp())
            })
            .clone()
    }
}

impl ExpmMethod for PadeSquaring {
    fn name(&self) -> &'static str {
        "pade"
    }

    fn prepare(&self, m: &ComplexMatrix) -> Result<Box<dyn PreparedExp>> {
        validate_skew(m)?;
        Ok(Box::new(StoredGenerator {
            generator: m.inner().clone(),
            memo: Mutex::new(HashMap::new()),
        }))
    }
}

/// Name-indexed collection of exponential methods.
pub struct ExpmRegistry {
    methods: Vec<Box<dyn ExpmMethod>>,
}

impl ExpmRegistry {
    pub fn empty() -> Self {
        ExpmRegistry { methods: Vec::new() }
    }

    /// Registers `method`, replacing any method with the same name.
    pub fn register(&mut self, method: Box<dyn ExpmMethod>) {
        self.methods.retain(|m| m.name() != method.name());
        self.methods.push(method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ExpmMethod> {
        self.methods
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown exponential method `{name}` (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.iter().map(|m| m.name()).collect()
    }
}

impl Default for ExpmRegistry {
    fn default() -> Self {
        let mut reg = ExpmRegistry::empty();
        reg.register(Box::new(EigenExp));
        reg.register(Box::new(PadeSquaring));
        reg
    }
}

/// `exp(tM)` for skew-Hermitian `M` using an explicit method.
pub fn expm_skew_with(method: &dyn ExpmMethod, m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::validation("exponential time must be finite"));
    }
    Ok(method.prepare(m)?.matrix(t))
}

/// `exp(tM)` for skew-Hermitian `M` via the spectral method.
pub fn expm_skew(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    expm_skew_with(&EigenExp, m, t)
}
