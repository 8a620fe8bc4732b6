//! Dense complex linear algebra for eigenbasis computations.
//!
//! [`ComplexMatrix`] and [`ComplexVector`] are thin newtypes over nalgebra's
//! dynamic storage that enforce finite entries and expose the handful of
//! operations the propagators need. Matrix exponentials of skew-Hermitian
//! generators live in [`expm`].

pub mod expm;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use expm::{expm_skew, expm_skew_with, ExpmMethod, ExpmRegistry, PreparedExp};

/// Tolerance for accepting a matrix as skew-Hermitian.
pub const SKEW_TOL: f64 = 1e-12;
/// Tolerance for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(DVector<Complex64>);

fn all_finite<'a>(mut it: impl Iterator<Item = &'a Complex64>) -> bool {
    it.all(|z| z.re.is_finite() && z.im.is_finite())
}

impl ComplexMatrix {
    /// Wraps a square nalgebra matrix, rejecting empty or non-finite input.
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 {
            return Err(Error::validation("matrix dimension must be positive"));
        }
        if inner.nrows() != inner.ncols() {
            return Err(Error::DimensionMismatch {
                expected: inner.nrows(),
                found: inner.ncols(),
            });
        }
        if !all_finite(inner.iter()) {
            return Err(Error::validation("matrix has non-finite entries"));
        }
        Ok(ComplexMatrix(inner))
    }

    pub(crate) fn from_inner_unchecked(inner: DMatrix<Complex64>) -> Self {
        ComplexMatrix(inner)
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        ComplexMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Builds a matrix from a row-major closure `f(row, col)` (zero-based).
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Entry at zero-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    pub fn column(&self, col: usize) -> ComplexVector {
        ComplexVector(self.0.column(col).into_owned())
    }

    /// Leading principal `dim × dim` block.
    pub fn leading_block(&self, dim: usize) -> ComplexMatrix {
        ComplexMatrix(self.0.view((0, 0), (dim, dim)).into_owned())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Operator-norm-free check: `|m_ij + conj(m_ji)| <= tol * max(1, max|m|)`.
    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        self.skew_hermitian_defect() <= tol * self.max_abs().max(1.0)
    }

    pub(crate) fn skew_hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] + self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.0.adjoint() * &self.0;
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        gram.iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn try_matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(self.dim(), other.dim())?;
        Ok(ComplexMatrix(&self.0 * &other.0))
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl ComplexVector {
    pub fn new(inner: DVector<Complex64>) -> Result<Self> {
        if inner.is_empty() {
            return Err(Error::validation("vector dimension must be positive"));
        }
        if !all_finite(inner.iter()) {
            return Err(Error::validation("vector has non-finite entries"));
        }
        Ok(ComplexVector(inner))
    }

    pub fn from_slice(entries: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(entries))
    }

    pub(crate) fn from_inner_unchecked(inner: DVector<Complex64>) -> Self {
        ComplexVector(inner)
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexVector(DVector::zeros(dim))
    }

    /// Canonical basis vector with a one at zero-based `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        ComplexVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn inner(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<ComplexVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::validation("cannot normalize the zero vector"));
        }
        Ok(ComplexVector(self.0.map(|z| z / n)))
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &ComplexVector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn adjoint(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn matvec(m: &ComplexMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    check_dim(m.dim(), v.dim())?;
    Ok(ComplexVector(&m.0 * &v.0))
}

/// Hermitian inner product, conjugate-linear in `u`.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<Complex64> {
    check_dim(u.dim(), v.dim())?;
    Ok(u.0.iter().zip(v.0.iter()).map(|(a, b)| a.conj() * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_of_basis_vectors() {
        let e1 = ComplexVector::basis(3, 0);
        let e2 = ComplexVector::basis(3, 1);
        assert_eq!(inner(&e1, &e1).unwrap(), c(1.0, 0.0));
        assert_eq!(inner(&e1, &e2).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let u = ComplexVector::from_slice(&[c(0.0, 1.0)]).unwrap();
        let v = ComplexVector::from_slice(&[c(1.0, 0.0)]).unwrap();
        assert_eq!(inner(&u, &v).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = ComplexMatrix::identity(2);
        let v = ComplexVector::basis(3, 0);
        assert!(matches!(
            matvec(&m, &v),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(inner(&v, &ComplexVector::basis(2, 0)).is_err());
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ComplexMatrix::new(DMatrix::zeros(0, 0)).is_err());
        assert!(ComplexVector::from_slice(&[c(f64::NAN, 0.0)]).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(f64::INFINITY, 0.0);
        assert!(ComplexMatrix::new(m).is_err());
    }

    #[test]
    fn skew_hermitian_predicate() {
        let m = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c(1.0, 2.0),
            (1, 0) => c(-1.0, 2.0),
            (0, 0) => c(0.0, 3.0),
            _ => c(0.0, 0.0),
        });
        assert!(m.is_skew_hermitian(SKEW_TOL));
        let h = ComplexMatrix::from_fn(2, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(!h.is_skew_hermitian(SKEW_TOL));
        assert!(h.is_unitary(UNITARY_TOL));
    }
}
