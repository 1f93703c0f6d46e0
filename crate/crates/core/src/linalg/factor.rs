use serde::Serialize;

use super::SquareMatrix;
use crate::error::{Error, Result};

/// Default allowed reconstruction error, relative to `1 + max|M|`.
pub const DEFAULT_FACTOR_TOL: f64 = 1e-9;

/// A lower-triangular `L` with `LᵀL = M` for a PSD matrix `M`.
///
/// Rows of `L` whose pivot fell inside the zero band are identically zero,
/// so `rank` counts the nonzero rows.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    factor: SquareMatrix,
    rank: usize,
    reconstruction_error: f64,
    max_asymmetry: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FactorSummary {
    pub rank: usize,
    pub reconstruction_error: f64,
    pub max_asymmetry: f64,
}

impl PsdFactor {
    pub fn factor(&self) -> &SquareMatrix {
        &self.factor
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    /// `max |LᵀL - sym(M)|` entrywise.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction_error
    }

    /// `max |M_ij - M_ji|` of the matrix before symmetrization.
    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    pub fn summary(&self) -> FactorSummary {
        FactorSummary {
            rank: self.rank,
            reconstruction_error: self.reconstruction_error,
            max_asymmetry: self.max_asymmetry,
        }
    }
}

/// True iff `psd_factor(m, tol)` succeeds.
pub fn is_psd(m: &SquareMatrix, tol: f64) -> Result<bool> {
    match psd_factor(m, tol) {
        Ok(_) => Ok(true),
        Err(Error::NotPsd { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

pub fn psd_factor(m: &SquareMatrix, tol: f64) -> Result<PsdFactor> {
    psd_factor_with(m, tol, DEFAULT_FACTOR_TOL)
}

/// Cholesky factorization `M = LᵀL` with `L` lower triangular, skipping
/// pivots in the band `[-tol·scale, tol·scale]` (`scale = 1 + max|M_ii|`).
///
/// The input is symmetrized first. Rows are eliminated from the last index
/// down, which is what makes `L` lower rather than upper triangular for the
/// `LᵀL` convention. A skipped pivot is only legitimate when the rest of its
/// Schur-complement row is also negligible; that is enforced by requiring
/// `max|LᵀL - M| <= tol_factor·(1 + max|M|)` on the result.
pub fn psd_factor_with(m: &SquareMatrix, tol: f64, tol_factor: f64) -> Result<PsdFactor> {
    if tol.is_nan() || tol < 0.0 || tol_factor.is_nan() || tol_factor < 0.0 {
        return Err(Error::InvalidArgument("tolerances must be nonnegative".into()));
    }
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "matrix" });
    }
    let (sym, max_asymmetry) = m.symmetrized();
    let d = sym.dim();
    let threshold = tol * (1.0 + sym.max_abs_diag());

    let mut l = SquareMatrix::zeros(d);
    let mut rank = d;
    let mut first_skip: Option<(usize, f64)> = None;

    for i in (0..d).rev() {
        // Column i of L below the diagonal lives in rows k > i.
        let col_sq: f64 = ((i + 1)..d).map(|k| l[(k, i)] * l[(k, i)]).sum();
        let pivot = sym[(i, i)] - col_sq;
        if pivot < -threshold {
            return Err(Error::NotPsd {
                index: i,
                pivot,
                threshold: -threshold,
            });
        }
        if pivot <= threshold {
            rank -= 1;
            first_skip.get_or_insert((i, pivot));
            continue;
        }
        let diag = pivot.sqrt();
        l.set(i, i, diag);
        for j in 0..i {
            let s: f64 = ((i + 1)..d).map(|k| l[(k, i)] * l[(k, j)]).sum();
            l.set(i, j, (sym[(i, j)] - s) / diag);
        }
    }

    let reconstruction_error = l.gram().max_abs_diff(&sym);
    let allowed = tol_factor * (1.0 + sym.max_abs());
    if reconstruction_error > allowed {
        // Only reachable through a skipped pivot whose row was not negligible,
        // i.e. a zero diagonal with nonzero coupling: indefinite.
        let (index, pivot) = first_skip.unwrap_or((0, f64::NAN));
        return Err(Error::NotPsd {
            index,
            pivot,
            threshold: -threshold,
        });
    }

    Ok(PsdFactor {
        factor: l,
        rank,
        reconstruction_error,
        max_asymmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_lower_triangular(m: &SquareMatrix) -> bool {
        let d = m.dim();
        (0..d).all(|i| ((i + 1)..d).all(|j| m[(i, j)] == 0.0))
    }

    #[test]
    fn identity_is_psd() {
        assert!(is_psd(&SquareMatrix::identity(2), 1e-10).unwrap());
    }

    #[test]
    fn indefinite_is_rejected() {
        // eigenvalues 3 and -1
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(!is_psd(&m, 1e-10).unwrap());
        assert!(matches!(psd_factor(&m, 1e-10), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn zero_matrix_is_psd_with_rank_zero() {
        let m = SquareMatrix::zeros(3);
        assert!(is_psd(&m, 1e-10).unwrap());
        let f = psd_factor(&m, 1e-10).unwrap();
        assert_eq!(f.rank(), 0);
        assert!(f.factor().is_zero());
    }

    #[test]
    fn zero_diagonal_with_coupling_is_not_psd() {
        // [[0,1],[1,0]] has eigenvalues ±1 but both pivots are zero
        let m = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(!is_psd(&m, 1e-10).unwrap());
    }

    #[test]
    fn diagonal_factor() {
        let f = psd_factor(&SquareMatrix::diag(&[4.0, 1.0]), 1e-10).unwrap();
        assert_eq!(f.factor(), &SquareMatrix::diag(&[2.0, 1.0]));
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn identity_factor() {
        for d in 1..6 {
            let f = psd_factor(&SquareMatrix::identity(d), 1e-10).unwrap();
            assert_eq!(f.factor(), &SquareMatrix::identity(d));
            assert_eq!(f.rank(), d);
        }
    }

    #[test]
    fn dense_two_by_two_reconstructs() {
        let m = SquareMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let f = psd_factor(&m, 1e-10).unwrap();
        assert!(is_lower_triangular(f.factor()));
        assert!(f.factor().gram().max_abs_diff(&m) <= 1e-12);
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn rank_deficient_factor() {
        // v vᵀ with v = (1, 2, 3): rank one
        let v = [1.0, 2.0, 3.0];
        let rows: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let m = SquareMatrix::from_rows(&rows).unwrap();
        let f = psd_factor(&m, 1e-10).unwrap();
        assert_eq!(f.rank(), 1);
        assert!(is_lower_triangular(f.factor()));
        assert!(f.factor().gram().max_abs_diff(&m) <= 1e-12);
    }

    #[test]
    fn asymmetric_noise_is_symmetrized() {
        let m = SquareMatrix::from_rows(&[vec![2.0, 1.0 + 1e-13], vec![1.0, 2.0]]).unwrap();
        let f = psd_factor(&m, 1e-10).unwrap();
        assert!((f.max_asymmetry() - 1e-13).abs() < 1e-15);
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn non_finite_input() {
        // from_row_major already rejects, so go through a matrix built by hand
        let mut m = SquareMatrix::identity(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(is_psd(&m, 1e-10), Err(Error::NonFinite { .. })));
    }
}
