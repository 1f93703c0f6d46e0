//! Dense real vectors and square matrices, PSD factorization and the
//! spectral norm.
//!
//! Everything here is small and allocation-happy on purpose: the matrices
//! this crate certifies are desk-scale (d up to a few hundred), and every
//! routine is a pure function of its inputs.

mod factor;
mod spectral;

use std::fmt;
use std::ops::Index;

use serde::Serialize;

use crate::error::{Error, Result};

pub use factor::{is_psd, psd_factor, psd_factor_with, PsdFactor};
pub use spectral::{spectral_norm, top_singular, PowerIteration, SingularTriple};

/// A dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("vector must have dimension >= 1".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "vector" });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector of length `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Vector(v)
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    /// Euclidean norm, computed with scaling so that large or tiny entries
    /// do not overflow or underflow the sum of squares.
    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| c * a).collect())
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "vector dimension mismatch");
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(1.0 / n))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = a.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

/// A dense real d×d matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(Error::NotSquare {
                detail: format!("{} entries for a {dim}x{dim} matrix", data.len()),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "matrix" });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    detail: format!("row {} has {} entries, expected {dim}", i + 1, row.len()),
                });
            }
        }
        Self::from_row_major(dim, rows.concat())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = x;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn transpose(&self) -> SquareMatrix {
        let d = self.dim;
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                t.data[j * d + i] = self.data[i * d + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    /// `Aᵀ A`
    pub fn gram(&self) -> SquareMatrix {
        self.transpose().matmul(self)
    }

    pub fn scaled(&self, c: f64) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// `A x`. Panics on a dimension mismatch.
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.dim, x.dim(), "matrix/vector dimension mismatch");
        Vector::from_vec_unchecked(self.apply(x.as_slice()))
    }

    /// `Aᵀ x`. Panics on a dimension mismatch.
    pub fn tr_mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.dim, x.dim(), "matrix/vector dimension mismatch");
        Vector::from_vec_unchecked(self.apply_transpose(x.as_slice()))
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    pub(crate) fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.dim).fold(0.0, |m, i| m.max(self[(i, i)].abs()))
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Returns `(M + Mᵀ)/2` together with `max |M_ij - M_ji|`.
    pub fn symmetrized(&self) -> (SquareMatrix, f64) {
        let d = self.dim;
        let mut s = self.clone();
        let mut asym = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                let a = self.data[i * d + j];
                let b = self.data[j * d + i];
                asym = asym.max((a - b).abs());
                let mean = 0.5 * (a + b);
                s.data[i * d + j] = mean;
                s.data[j * d + i] = mean;
            }
        }
        (s, asym)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.dim && j < self.dim, "matrix index out of range");
        &self.data[i * self.dim + j]
    }
}

impl fmt::Display for SquareMatrix {
    /// One comma-separated row per line, shortest round-trip float repr.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            SquareMatrix::from_row_major(1, vec![f64::INFINITY]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn from_rows_rejects_ragged_input() {
        let err = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
        let err = SquareMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
        assert!(matches!(SquareMatrix::from_rows(&[]), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn transpose_products() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = Vector::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(a.mul_vec(&x).as_slice(), &[-1.0, -1.0]);
        assert_eq!(a.tr_mul_vec(&x).as_slice(), &[-2.0, -2.0]);
        assert_eq!(a.transpose().mul_vec(&x), a.tr_mul_vec(&x));
        let g = a.gram();
        assert_eq!(g.as_slice(), &[10.0, 14.0, 14.0, 20.0]);
    }

    #[test]
    fn symmetrize_records_asymmetry() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 4.0]]).unwrap();
        let (s, asym) = a.symmetrized();
        assert_eq!(asym, 0.5);
        assert_eq!(s[(0, 1)], 2.25);
        assert_eq!(s[(1, 0)], 2.25);
    }

    #[test]
    fn norm_survives_extreme_scales() {
        let v = Vector::new(vec![3e200, 4e200]).unwrap();
        assert!((v.norm() / 5e200 - 1.0).abs() < 1e-15);
        let w = Vector::new(vec![3e-200, 4e-200]).unwrap();
        assert!((w.norm() / 5e-200 - 1.0).abs() < 1e-15);
    }
}
