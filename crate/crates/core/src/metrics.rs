//! Mahalanobis distance and bilinear similarity on pairs of points, with
//! their analytic gradients in the product space ℝᵈ × ℝᵈ.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{PsdFactor, SquareMatrix, Vector};

/// Relative threshold below which the Mahalanobis gradient is reported
/// as undefined: `d <= ZERO_DIST_REL · (1 + ‖x1‖ + ‖x2‖)`.
pub const ZERO_DIST_REL: f64 = 1e-12;

/// An ordered pair `(x1, x2)`, viewed as one point of the 2d-dimensional
/// product space.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPoint {
    pub x1: Vector,
    pub x2: Vector,
}

impl PairPoint {
    pub fn new(x1: Vector, x2: Vector) -> Result<Self> {
        if x1.dim() != x2.dim() {
            return Err(Error::DimensionMismatch {
                expected: x1.dim(),
                found: x2.dim(),
            });
        }
        Ok(PairPoint { x1, x2 })
    }

    pub fn from_slices(x1: &[f64], x2: &[f64]) -> Result<Self> {
        Self::new(Vector::new(x1.to_vec())?, Vector::new(x2.to_vec())?)
    }

    pub fn dim(&self) -> usize {
        self.x1.dim()
    }

    pub fn swapped(&self) -> PairPoint {
        PairPoint {
            x1: self.x2.clone(),
            x2: self.x1.clone(),
        }
    }

    /// The concatenation `(x1, x2)` as a single 2d-vector.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.x1.as_slice().to_vec();
        v.extend_from_slice(self.x2.as_slice());
        v
    }

    pub fn from_concat(v: &[f64]) -> PairPoint {
        assert!(v.len().is_multiple_of(2) && !v.is_empty(), "odd-length product vector");
        let (a, b) = v.split_at(v.len() / 2);
        PairPoint {
            x1: Vector::from_vec_unchecked(a.to_vec()),
            x2: Vector::from_vec_unchecked(b.to_vec()),
        }
    }

    /// `self + t · g`, stepping both halves along a product-space direction.
    pub fn step(&self, t: f64, g: &PairGradient) -> PairPoint {
        PairPoint {
            x1: self.x1.axpy(t, &g.g1),
            x2: self.x2.axpy(t, &g.g2),
        }
    }

    /// Euclidean norm of `(self - other)` in the product space.
    pub fn distance_to(&self, other: &PairPoint) -> f64 {
        let diff: Vec<f64> = self
            .concat()
            .iter()
            .zip(other.concat())
            .map(|(a, b)| a - b)
            .collect();
        crate::linalg::norm2(&diff)
    }
}

/// `(∂f/∂x1, ∂f/∂x2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGradient {
    pub g1: Vector,
    pub g2: Vector,
}

impl PairGradient {
    /// `√(‖g1‖² + ‖g2‖²)`
    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.concat())
    }

    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.g1.as_slice().to_vec();
        v.extend_from_slice(self.g2.as_slice());
        v
    }

    pub fn normalized(&self) -> Option<PairGradient> {
        let n = self.norm();
        (n > 0.0).then(|| PairGradient {
            g1: self.g1.scaled(1.0 / n),
            g2: self.g2.scaled(1.0 / n),
        })
    }

    /// Largest entrywise `|a - b| / (1 + |b|)`.
    pub fn max_rel_diff(&self, reference: &PairGradient) -> f64 {
        self.concat()
            .iter()
            .zip(reference.concat())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs() / (1.0 + b.abs())))
    }
}

/// The Euclidean ball `{x : ‖x‖₂ <= radius}` in ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallDomain {
    pub radius: f64,
    pub dim: usize,
}

impl BallDomain {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "radius must be finite and nonnegative, got {radius}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("domain dimension must be >= 1".into()));
        }
        Ok(BallDomain { radius, dim })
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.dim() == self.dim && x.norm() <= self.radius
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `d_M(x1, x2) = ‖L(x1 - x2)‖₂` for `M = LᵀL`.
///
/// Going through the factor keeps the square root away from negative
/// round-off in the quadratic form.
pub fn mahalanobis(factor: &PsdFactor, p: &PairPoint) -> Result<f64> {
    check_dim(factor.dim(), p.dim())?;
    check_dim(p.x1.dim(), p.x2.dim())?;
    let diff = p.x1.sub(&p.x2);
    Ok(factor.factor().mul_vec(&diff).norm())
}

/// `∂d/∂x1 = M(x1 - x2)/d`, `∂d/∂x2 = -∂d/∂x1`.
///
/// Undefined where `d` vanishes, which includes every pair whose difference
/// lies in the null space of `M`.
pub fn mahalanobis_grad(m: &SquareMatrix, factor: &PsdFactor, p: &PairPoint) -> Result<PairGradient> {
    check_dim(m.dim(), factor.dim())?;
    let d = mahalanobis(factor, p)?;
    let threshold = ZERO_DIST_REL * (1.0 + p.x1.norm() + p.x2.norm());
    if d <= threshold {
        return Err(Error::UndefinedGradient { distance: d });
    }
    let diff = p.x1.sub(&p.x2);
    let (sym, _) = m.symmetrized();
    let g1 = sym.mul_vec(&diff).scaled(1.0 / d);
    let g2 = g1.scaled(-1.0);
    Ok(PairGradient { g1, g2 })
}

/// `x1ᵀ M x2` for an arbitrary square `M`.
pub fn bilinear(m: &SquareMatrix, p: &PairPoint) -> Result<f64> {
    check_dim(m.dim(), p.dim())?;
    check_dim(p.x1.dim(), p.x2.dim())?;
    Ok(p.x1.dot(&m.mul_vec(&p.x2)))
}

/// `∂/∂x1 = M x2`, `∂/∂x2 = Mᵀ x1`.
pub fn bilinear_grad(m: &SquareMatrix, p: &PairPoint) -> Result<PairGradient> {
    check_dim(m.dim(), p.dim())?;
    check_dim(p.x1.dim(), p.x2.dim())?;
    Ok(PairGradient {
        g1: m.mul_vec(&p.x2),
        g2: m.tr_mul_vec(&p.x1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_factor;

    fn pair(a: &[f64], b: &[f64]) -> PairPoint {
        PairPoint::from_slices(a, b).unwrap()
    }

    fn factor(m: &SquareMatrix) -> PsdFactor {
        psd_factor(m, 1e-10).unwrap()
    }

    #[test]
    fn euclidean_case() {
        let l = factor(&SquareMatrix::identity(2));
        assert_eq!(mahalanobis(&l, &pair(&[0.0, 0.0], &[3.0, 4.0])).unwrap(), 5.0);
    }

    #[test]
    fn coincident_points_have_zero_distance() {
        let m = SquareMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let l = factor(&m);
        assert_eq!(mahalanobis(&l, &pair(&[1.5, -2.0], &[1.5, -2.0])).unwrap(), 0.0);
    }

    #[test]
    fn weighted_axis() {
        let l = factor(&SquareMatrix::diag(&[4.0, 1.0]));
        assert_eq!(mahalanobis(&l, &pair(&[1.0, 0.0], &[0.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch() {
        let l = factor(&SquareMatrix::identity(3));
        let err = mahalanobis(&l, &pair(&[1.0, 0.0], &[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
        assert!(PairPoint::from_slices(&[1.0], &[1.0, 2.0]).is_err());
        let m = SquareMatrix::identity(3);
        assert!(bilinear(&m, &pair(&[1.0], &[2.0])).is_err());
        assert!(bilinear_grad(&m, &pair(&[1.0], &[2.0])).is_err());
    }

    #[test]
    fn euclidean_gradient_is_unit_direction() {
        let m = SquareMatrix::identity(2);
        let g = mahalanobis_grad(&m, &factor(&m), &pair(&[3.0, 4.0], &[0.0, 0.0])).unwrap();
        assert!(g.g1.sub(&Vector::new(vec![0.6, 0.8]).unwrap()).max_abs() < 1e-15);
        assert!(g.g2.sub(&Vector::new(vec![-0.6, -0.8]).unwrap()).max_abs() < 1e-15);
    }

    #[test]
    fn weighted_gradient() {
        // M(x1 - x2) = (4, 0), d = 2
        let m = SquareMatrix::diag(&[4.0, 1.0]);
        let g = mahalanobis_grad(&m, &factor(&m), &pair(&[1.0, 0.0], &[0.0, 0.0])).unwrap();
        assert_eq!(g.g1.as_slice(), &[2.0, 0.0]);
        assert_eq!(g.g2.as_slice(), &[-2.0, 0.0]);
        assert!((g.norm() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_undefined_on_diagonal() {
        let m = SquareMatrix::identity(2);
        let err = mahalanobis_grad(&m, &factor(&m), &pair(&[1.0, 2.0], &[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::UndefinedGradient { .. }));
    }

    #[test]
    fn gradient_undefined_in_null_space() {
        let m = SquareMatrix::diag(&[1.0, 0.0]);
        let err = mahalanobis_grad(&m, &factor(&m), &pair(&[0.0, 5.0], &[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::UndefinedGradient { .. }));
    }

    #[test]
    fn bilinear_values() {
        let p = pair(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(bilinear(&SquareMatrix::identity(2), &p).unwrap(), 11.0);
        assert_eq!(bilinear(&SquareMatrix::zeros(2), &p).unwrap(), 0.0);
        let n = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(bilinear(&n, &pair(&[1.0, 0.0], &[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn bilinear_gradients() {
        let p = pair(&[1.0, 2.0], &[3.0, 4.0]);
        let g = bilinear_grad(&SquareMatrix::identity(2), &p).unwrap();
        assert_eq!(g.g1.as_slice(), &[3.0, 4.0]);
        assert_eq!(g.g2.as_slice(), &[1.0, 2.0]);

        let g = bilinear_grad(&SquareMatrix::zeros(2), &p).unwrap();
        assert_eq!(g.norm(), 0.0);

        let n = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let g = bilinear_grad(&n, &pair(&[1.0, 0.0], &[0.0, 1.0])).unwrap();
        assert_eq!(g.g1.as_slice(), &[2.0, 0.0]);
        assert_eq!(g.g2.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn ball_domain() {
        let b = BallDomain::new(1.0, 2).unwrap();
        assert!(b.contains(&Vector::new(vec![0.6, 0.8]).unwrap()));
        assert!(!b.contains(&Vector::new(vec![0.8, 0.8]).unwrap()));
        assert!(BallDomain::new(-1.0, 2).is_err());
        assert!(BallDomain::new(1.0, 0).is_err());
    }
}
