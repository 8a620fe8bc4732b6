//! Truncated eigenbasis representation of a bilinear system `(A, B)`.
//!
//! `A = diag(-i λ_1, …, -i λ_N)` is stored through its spectrum and `B`
//! through its matrix `b_jk = ⟨φ_j, B φ_k⟩` in the eigenbasis. Levels are
//! numbered from 1 in every public function that takes a `level`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, SKEW_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSystem {
    label: String,
    spectrum: Vec<f64>,
    coupling: ComplexMatrix,
    allow_zero_ground: bool,
}

impl GalerkinSystem {
    /// Builds a system with a strictly positive, non-decreasing spectrum.
    pub fn new(label: impl Into<String>, spectrum: Vec<f64>, coupling: ComplexMatrix) -> Result<Self> {
        Self::build(label.into(), spectrum, coupling, false)
    }

    /// Like [`GalerkinSystem::new`] but accepts leading zero eigenvalues.
    pub fn with_zero_ground(
        label: impl Into<String>,
        spectrum: Vec<f64>,
        coupling: ComplexMatrix,
    ) -> Result<Self> {
        Self::build(label.into(), spectrum, coupling, true)
    }

    fn build(
        label: String,
        spectrum: Vec<f64>,
        coupling: ComplexMatrix,
        allow_zero_ground: bool,
    ) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(Error::validation("n_levels must be positive"));
        }
        if coupling.dim() != spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                found: coupling.dim(),
            });
        }
        if let Some(bad) = spectrum.iter().position(|l| !l.is_finite()) {
            return Err(Error::validation(format!(
                "spectrum must be finite: λ_{} = {}",
                bad + 1,
                spectrum[bad]
            )));
        }
        if let Some(k) = spectrum.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::validation(format!(
                "spectrum must be non-decreasing: λ_{} = {} > λ_{} = {}",
                k + 1,
                spectrum[k],
                k + 2,
                spectrum[k + 1]
            )));
        }
        if spectrum[0] < 0.0 || (!allow_zero_ground && spectrum[0] <= 0.0) {
            let rule = if allow_zero_ground { "non-negative" } else { "positive" };
            return Err(Error::validation(format!(
                "spectrum must be {rule}: λ_1 = {}",
                spectrum[0]
            )));
        }
        if !coupling.is_skew_hermitian(SKEW_TOL) {
            return Err(Error::validation(format!(
                "coupling must be skew-Hermitian within {SKEW_TOL:e} (defect {:.3e})",
                coupling.skew_hermitian_defect()
            )));
        }
        Ok(GalerkinSystem {
            label,
            spectrum,
            coupling,
            allow_zero_ground,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_levels(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Eigenvalue `λ_level`, one-based.
    pub fn eigenvalue(&self, level: usize) -> f64 {
        self.spectrum[level - 1]
    }

    pub fn coupling(&self) -> &ComplexMatrix {
        &self.coupling
    }

    /// `b_jk = ⟨φ_j, B φ_k⟩`, one-based.
    pub fn coupling_entry(&self, j: usize, k: usize) -> Complex64 {
        self.coupling.get(j - 1, k - 1)
    }

    /// `‖B φ_level‖`, the norm of column `level` of the coupling matrix.
    pub fn coupling_column_norm(&self, level: usize) -> f64 {
        self.coupling.column(level - 1).norm()
    }

    pub fn allows_zero_ground(&self) -> bool {
        self.allow_zero_ground
    }

    pub fn has_zero_eigenvalue(&self) -> bool {
        self.spectrum[0] == 0.0
    }

    pub fn a_matrix(&self) -> ComplexMatrix {
        a_matrix(self)
    }

    /// `A + u B`.
    pub fn generator(&self, u: f64) -> ComplexMatrix {
        let n = self.n_levels();
        ComplexMatrix::from_fn(n, |i, j| {
            let drift = if i == j {
                Complex64::new(0.0, -self.spectrum[i])
            } else {
                Complex64::new(0.0, 0.0)
            };
            drift + self.coupling.get(i, j) * u
        })
    }

    /// Leading `n_levels` compression of this system.
    pub fn truncate(&self, n_levels: usize) -> Result<GalerkinSystem> {
        if n_levels == 0 || n_levels > self.n_levels() {
            return Err(Error::validation(format!(
                "cannot truncate {} levels to {n_levels}",
                self.n_levels()
            )));
        }
        Ok(GalerkinSystem {
            label: format!("{}[..{n_levels}]", self.label),
            spectrum: self.spectrum[..n_levels].to_vec(),
            coupling: self.coupling.leading_block(n_levels),
            allow_zero_ground: self.allow_zero_ground,
        })
    }

    /// Whether `self` equals the leading compression of `other`.
    pub fn is_truncation_of(&self, other: &GalerkinSystem) -> bool {
        let n = self.n_levels();
        n <= other.n_levels()
            && self.spectrum[..] == other.spectrum[..n]
            && self.coupling == other.coupling.leading_block(n)
    }
}

/// Completes a coupling matrix from one-based `(j, k, value)` entries,
/// filling each unspecified mirror entry with `-conj(value)`.
pub fn coupling_from_entries(n_levels: usize, entries: &[(usize, usize, Complex64)]) -> Result<ComplexMatrix> {
    let mut given = HashSet::new();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n_levels, n_levels);
    for &(j, k, z) in entries {
        if j == 0 || k == 0 || j > n_levels || k > n_levels {
            return Err(Error::validation(format!(
                "coupling entry ({j}, {k}) outside levels 1..={n_levels}"
            )));
        }
        if !given.insert((j, k)) {
            return Err(Error::validation(format!("duplicate coupling entry ({j}, {k})")));
        }
        m[(j - 1, k - 1)] = z;
    }
    for &(j, k, z) in entries {
        if j != k && !given.contains(&(k, j)) {
            m[(k - 1, j - 1)] = -z.conj();
        }
    }
    ComplexMatrix::new(m)
}

/// Planar-molecule model on the odd subspace: `λ_k = k²`, `b_{k,k±1} = -i/2`.
pub fn build_molecule(n_levels: usize) -> Result<GalerkinSystem> {
    if n_levels < 2 {
        return Err(Error::validation(format!(
            "molecule needs at least 2 levels, got {n_levels}"
        )));
    }
    let spectrum = (1..=n_levels).map(|k| (k * k) as f64).collect();
    let entries: Vec<_> = (1..n_levels)
        .map(|k| (k, k + 1, Complex64::new(0.0, -0.5)))
        .collect();
    let coupling = coupling_from_entries(n_levels, &entries)?;
    GalerkinSystem::new(format!("molecule:{n_levels}"), spectrum, coupling)
}

/// `A = diag(-i λ_1, …, -i λ_N)`.
pub fn a_matrix(sys: &GalerkinSystem) -> ComplexMatrix {
    let diag: Vec<_> = sys
        .spectrum
        .iter()
        .map(|&l| Complex64::new(0.0, -l))
        .collect();
    ComplexMatrix::from_diagonal(&diag)
}

/// On-disk JSON layout of a system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default)]
    pub label: String,
    pub n_levels: usize,
    pub spectrum: Vec<f64>,
    /// One-based `[j, k, re, im]` entries, conventionally with `j <= k`.
    pub coupling_entries: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_zero_ground: bool,
}

impl SystemFile {
    pub fn from_system(sys: &GalerkinSystem) -> Self {
        let n = sys.n_levels();
        let mut coupling_entries = Vec::new();
        for j in 0..n {
            for k in j..n {
                let z = sys.coupling.get(j, k);
                if z != Complex64::new(0.0, 0.0) {
                    coupling_entries.push((j + 1, k + 1, z.re, z.im));
                }
            }
        }
        SystemFile {
            label: sys.label.clone(),
            n_levels: n,
            spectrum: sys.spectrum.clone(),
            coupling_entries,
            allow_zero_ground: sys.allow_zero_ground,
        }
    }

    pub fn into_system(self) -> Result<GalerkinSystem> {
        if self.spectrum.len() != self.n_levels {
            return Err(Error::validation(format!(
                "n_levels = {} but spectrum has {} entries",
                self.n_levels,
                self.spectrum.len()
            )));
        }
        if self.n_levels == 0 {
            return Err(Error::validation("n_levels must be positive"));
        }
        let entries: Vec<_> = self
            .coupling_entries
            .iter()
            .map(|&(j, k, re, im)| (j, k, Complex64::new(re, im)))
            .collect();
        let coupling = coupling_from_entries(self.n_levels, &entries)?;
        GalerkinSystem::build(self.label, self.spectrum, coupling, self.allow_zero_ground)
    }
}

pub fn parse_system(text: &str, origin: &Path) -> Result<GalerkinSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_system()
}

pub fn load_system(path: impl AsRef<Path>) -> Result<GalerkinSystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_system(&text, path)
}

pub fn system_to_json(sys: &GalerkinSystem) -> String {
    let mut text = serde_json::to_string_pretty(&SystemFile::from_system(sys))
        .expect("system file serialization cannot fail");
    text.push('\n');
    text
}

pub fn save_system(sys: &GalerkinSystem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, system_to_json(sys))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn molecule_two_levels() {
        let sys = build_molecule(2).unwrap();
        assert_eq!(sys.spectrum(), &[1.0, 4.0]);
        assert_eq!(sys.coupling_entry(1, 2), c(0.0, -0.5));
        assert_eq!(sys.coupling_entry(2, 1), c(0.0, -0.5));
        assert_eq!(sys.coupling_entry(1, 1), c(0.0, 0.0));
        let a = sys.a_matrix();
        assert_eq!(a, ComplexMatrix::from_diagonal(&[c(0.0, -1.0), c(0.0, -4.0)]));
    }

    #[test]
    fn molecule_spectrum_and_a_matrix() {
        let sys = build_molecule(4).unwrap();
        assert_eq!(sys.spectrum(), &[1.0, 4.0, 9.0, 16.0]);
        let a3 = build_molecule(3).unwrap().a_matrix();
        assert_eq!(
            a3,
            ComplexMatrix::from_diagonal(&[c(0.0, -1.0), c(0.0, -4.0), c(0.0, -9.0)])
        );
    }

    #[test]
    fn molecule_coupling_is_exactly_skew_hermitian() {
        for n in 2..12 {
            let b = build_molecule(n).unwrap().coupling().clone();
            assert_eq!(b.adjoint(), -&b);
        }
    }

    #[test]
    fn molecule_rejects_single_level() {
        assert!(build_molecule(1).is_err());
        assert!(build_molecule(0).is_err());
    }

    #[test]
    fn smaller_molecule_truncates_larger() {
        let big = build_molecule(9).unwrap();
        for n in 2..9 {
            let small = build_molecule(n).unwrap();
            assert!(small.is_truncation_of(&big));
            assert_eq!(big.truncate(n).unwrap().coupling(), small.coupling());
        }
        assert!(!big.is_truncation_of(&build_molecule(3).unwrap()));
    }

    #[test]
    fn generator_is_skew_hermitian_for_any_control() {
        let sys = build_molecule(6).unwrap();
        for &u in &[-3.0, -0.1, 0.0, 0.7, 12.0] {
            assert!(sys.generator(u).is_skew_hermitian(SKEW_TOL));
        }
    }

    #[test]
    fn decreasing_spectrum_is_rejected() {
        let text = r#"{"n_levels": 2, "spectrum": [4.0, 1.0], "coupling_entries": []}"#;
        let err = parse_system(text, Path::new("x.json")).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("non-decreasing")), "{err}");
    }

    #[test]
    fn non_skew_hermitian_coupling_is_rejected() {
        let text = r#"{"n_levels": 2, "spectrum": [1.0, 4.0],
            "coupling_entries": [[1, 1, 0.5, 0.0]]}"#;
        let err = parse_system(text, Path::new("x.json")).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("skew-Hermitian")), "{err}");

        let text = r#"{"n_levels": 2, "spectrum": [1.0, 4.0],
            "coupling_entries": [[1, 2, 0.0, -0.5], [2, 1, 0.0, 0.5]]}"#;
        let err = parse_system(text, Path::new("x.json")).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("skew-Hermitian")), "{err}");
    }

    #[test]
    fn malformed_file_reports_line() {
        let text = "{\n  \"n_levels\": 2,\n  \"spectrum\": [1.0, oops]\n}";
        match parse_system(text, Path::new("bad.json")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn zero_ground_needs_the_flag() {
        let b = ComplexMatrix::zeros(2);
        assert!(GalerkinSystem::new("z", vec![0.0, 0.0], b.clone()).is_err());
        let sys = GalerkinSystem::with_zero_ground("z", vec![0.0, 0.0], b.clone()).unwrap();
        assert!(sys.has_zero_eigenvalue());
        assert!(GalerkinSystem::with_zero_ground("z", vec![-1.0, 0.0], b).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m5.json");
        let sys = build_molecule(5).unwrap();
        save_system(&sys, &path).unwrap();
        assert_eq!(load_system(&path).unwrap(), sys);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_system("/nonexistent/system.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
