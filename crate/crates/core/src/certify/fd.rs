use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::metrics::{PairGradient, PairPoint};

/// Central-difference gradient over all 2d product-space coordinates.
///
/// The divisor is the representable step `x⁺ - x⁻` rather than `2h`, which
/// removes the error from rounding `x ± h`.
pub fn finite_diff_gradient<F>(f: F, p: &PairPoint, h: f64) -> Result<PairGradient>
where
    F: Fn(&PairPoint) -> Result<f64>,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let base = p.concat();
    let mut grad = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    for i in 0..base.len() {
        let plus = base[i] + h;
        let minus = base[i] - h;
        probe[i] = plus;
        let fp = f(&PairPoint::from_concat(&probe))?;
        probe[i] = minus;
        let fm = f(&PairPoint::from_concat(&probe))?;
        probe[i] = base[i];
        grad.push((fp - fm) / (plus - minus));
    }
    let d = p.dim();
    Ok(PairGradient {
        g1: Vector::from_vec_unchecked(grad[..d].to_vec()),
        g2: Vector::from_vec_unchecked(grad[d..].to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{psd_factor, SquareMatrix};
    use crate::metrics::{bilinear, mahalanobis};

    #[test]
    fn bilinear_identity_is_nearly_exact() {
        let m = SquareMatrix::identity(2);
        let p = PairPoint::from_slices(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        let g = finite_diff_gradient(|q| bilinear(&m, q), &p, 1e-6).unwrap();
        let expected = [3.0, 4.0, 1.0, 2.0];
        for (a, b) in g.concat().iter().zip(expected) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let p = PairPoint::from_slices(&[0.5, -1.0, 2.0], &[3.0, 0.0, 1.0]).unwrap();
        let g = finite_diff_gradient(|_| Ok(0.0), &p, 1e-6).unwrap();
        assert_eq!(g.norm(), 0.0);
        assert_eq!(g.g1.dim(), 3);
    }

    #[test]
    fn euclidean_distance_gradient() {
        let l = psd_factor(&SquareMatrix::identity(2), 1e-10).unwrap();
        let p = PairPoint::from_slices(&[3.0, 4.0], &[0.0, 0.0]).unwrap();
        let g = finite_diff_gradient(|q| mahalanobis(&l, q), &p, 1e-6).unwrap();
        let expected = [0.6, 0.8, -0.6, -0.8];
        for (a, b) in g.concat().iter().zip(expected) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = PairPoint::from_slices(&[0.0], &[0.0]).unwrap();
        assert!(finite_diff_gradient(|_| Ok(0.0), &p, 0.0).is_err());
        assert!(finite_diff_gradient(|_| Ok(0.0), &p, f64::NAN).is_err());
    }
}
