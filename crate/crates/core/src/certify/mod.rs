//! Certified Lipschitz constants w.r.t. the ℓ2 norm on the product space.
//!
//! For a Mahalanobis distance with `M = LᵀL` the constant is `√2 ‖L‖₂`,
//! independent of the domain. For the bilinear similarity `x1ᵀ M x2` on the
//! ball of radius `R` it is `√2 ‖M‖₂ R`. Both come from bounding the
//! product-space gradient norm, and both are attained: see [`witness`].
//!
//! The Mahalanobis distance is not differentiable where `L(x1 - x2) = 0`, so
//! "constant = sup of gradient norm" does not literally apply there. The
//! bound is still valid for every secant slope, and [`audit`] checks slopes
//! directly rather than relying on gradients alone.

mod audit;
mod fd;
mod witness;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{psd_factor_with, spectral_norm, PowerIteration, PsdFactor, SquareMatrix};
use crate::metrics::{self, BallDomain, PairGradient, PairPoint};

pub use audit::{audit, gradcheck, sample_in_ball, AuditConfig, AuditReport, GradcheckReport};
pub use fd::finite_diff_gradient;
pub use witness::{witness_bilinear, witness_mahalanobis, Witness};

/// Numerical tolerances shared by certification and auditing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Pivot band for PSD detection, relative to `1 + max|M_ii|`.
    pub psd: f64,
    /// Allowed `max|LᵀL - M|`, relative to `1 + max|M|`.
    pub factor: f64,
    #[serde(flatten)]
    pub power: PowerIteration,
    /// Multiplicative slack on `k` before a slope counts as a violation.
    pub violation: f64,
    /// Allowed relative gap between `‖L‖₂` and `√‖M‖₂`.
    pub cross_check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: 1e-10,
            factor: 1e-9,
            power: PowerIteration::default(),
            violation: 1e-9,
            cross_check: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Mahalanobis,
    Bilinear,
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricKind::Mahalanobis => "mahalanobis",
            MetricKind::Bilinear => "bilinear",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzCertificate {
    pub metric: MetricKind,
    pub dim: usize,
    pub k_theoretical: f64,
    /// `‖L‖₂`, Mahalanobis only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_norm: Option<f64>,
    /// `‖M‖₂`, bilinear only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_norm: Option<f64>,
    pub radius: Option<f64>,
    /// Rank of the PSD factor, Mahalanobis only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// `√‖M‖₂`, an independent route to `‖L‖₂`. Mahalanobis only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sqrt_matrix_norm: Option<f64>,
    pub max_asymmetry: f64,
    pub tolerances: Tolerances,
}

impl LipschitzCertificate {
    /// Relative gap between `‖L‖₂` and `√‖M‖₂`; zero for bilinear certificates.
    pub fn cross_check_error(&self) -> f64 {
        match (self.factor_norm, self.sqrt_matrix_norm) {
            (Some(a), Some(b)) if a.max(b) > 0.0 => (a - b).abs() / a.max(b),
            _ => 0.0,
        }
    }

    pub fn cross_check_passes(&self) -> bool {
        self.cross_check_error() <= self.tolerances.cross_check
    }

    /// Largest slope not counted as a violation.
    pub fn violation_threshold(&self) -> f64 {
        self.k_theoretical * (1.0 + self.tolerances.violation)
    }
}

/// `k = √2 ‖L‖₂` where `M = LᵀL`.
pub fn certify_mahalanobis(m: &SquareMatrix, tols: &Tolerances) -> Result<LipschitzCertificate> {
    let factor = psd_factor_with(m, tols.psd, tols.factor)?;
    let factor_norm = spectral_norm(factor.factor(), &tols.power)?;
    let (sym, _) = m.symmetrized();
    let sqrt_matrix_norm = spectral_norm(&sym, &tols.power)?.sqrt();
    Ok(LipschitzCertificate {
        metric: MetricKind::Mahalanobis,
        dim: m.dim(),
        k_theoretical: std::f64::consts::SQRT_2 * factor_norm,
        factor_norm: Some(factor_norm),
        matrix_norm: None,
        radius: None,
        rank: Some(factor.rank()),
        sqrt_matrix_norm: Some(sqrt_matrix_norm),
        max_asymmetry: factor.max_asymmetry(),
        tolerances: *tols,
    })
}

/// `k = √2 ‖M‖₂ R` on the ball of radius `R`.
pub fn certify_bilinear(
    m: &SquareMatrix,
    domain: &BallDomain,
    tols: &Tolerances,
) -> Result<LipschitzCertificate> {
    if domain.dim != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: domain.dim,
        });
    }
    let matrix_norm = spectral_norm(m, &tols.power)?;
    let (_, max_asymmetry) = m.symmetrized();
    Ok(LipschitzCertificate {
        metric: MetricKind::Bilinear,
        dim: m.dim(),
        k_theoretical: std::f64::consts::SQRT_2 * matrix_norm * domain.radius,
        factor_norm: None,
        matrix_norm: Some(matrix_norm),
        radius: Some(domain.radius),
        rank: None,
        sqrt_matrix_norm: None,
        max_asymmetry,
        tolerances: *tols,
    })
}

/// Two pair-points `(x1, x2)` and `(x1', x2')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadruple {
    pub first: PairPoint,
    pub second: PairPoint,
}

impl Quadruple {
    pub fn new(first: PairPoint, second: PairPoint) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: second.dim(),
            });
        }
        Ok(Quadruple { first, second })
    }
}

/// Smallest product-space separation for which a slope is evaluated.
pub const MIN_SEPARATION: f64 = 1e-300;

/// `|f(x1, x2) - f(x1', x2')| / ‖(x1, x2) - (x1', x2')‖₂`
pub fn slope<F>(f: F, q: &Quadruple) -> Result<f64>
where
    F: Fn(&PairPoint) -> Result<f64>,
{
    let denom = q.first.distance_to(&q.second);
    if denom <= MIN_SEPARATION {
        return Err(Error::DegenerateQuadruple);
    }
    Ok((f(&q.first)? - f(&q.second)?).abs() / denom)
}

/// A metric bound to its matrix, evaluable on pairs.
#[derive(Debug, Clone)]
pub enum Metric {
    Mahalanobis { m: SquareMatrix, factor: PsdFactor },
    Bilinear { m: SquareMatrix },
}

impl Metric {
    pub fn mahalanobis(m: &SquareMatrix, tols: &Tolerances) -> Result<Self> {
        let factor = psd_factor_with(m, tols.psd, tols.factor)?;
        let (sym, _) = m.symmetrized();
        Ok(Metric::Mahalanobis { m: sym, factor })
    }

    pub fn bilinear(m: &SquareMatrix) -> Self {
        Metric::Bilinear { m: m.clone() }
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Mahalanobis { .. } => MetricKind::Mahalanobis,
            Metric::Bilinear { .. } => MetricKind::Bilinear,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Mahalanobis { m, .. } | Metric::Bilinear { m } => m.dim(),
        }
    }

    pub fn value(&self, p: &PairPoint) -> Result<f64> {
        match self {
            Metric::Mahalanobis { factor, .. } => metrics::mahalanobis(factor, p),
            Metric::Bilinear { m } => metrics::bilinear(m, p),
        }
    }

    pub fn gradient(&self, p: &PairPoint) -> Result<PairGradient> {
        match self {
            Metric::Mahalanobis { m, factor } => metrics::mahalanobis_grad(m, factor, p),
            Metric::Bilinear { m } => metrics::bilinear_grad(m, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn mahalanobis_identity() {
        for d in 1..6 {
            let c = certify_mahalanobis(&SquareMatrix::identity(d), &tols()).unwrap();
            assert!((c.k_theoretical - SQRT_2).abs() < 1e-12);
            assert_eq!(c.rank, Some(d));
        }
    }

    #[test]
    fn mahalanobis_diagonal() {
        let c = certify_mahalanobis(&SquareMatrix::diag(&[4.0, 1.0]), &tols()).unwrap();
        assert!((c.k_theoretical - 2.0 * SQRT_2).abs() < 1e-10);
        assert!(c.cross_check_passes());
    }

    #[test]
    fn mahalanobis_zero() {
        let c = certify_mahalanobis(&SquareMatrix::zeros(3), &tols()).unwrap();
        assert_eq!(c.k_theoretical, 0.0);
        assert_eq!(c.rank, Some(0));
        assert!(c.cross_check_passes());
    }

    #[test]
    fn mahalanobis_rejects_indefinite() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            certify_mahalanobis(&m, &tols()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn bilinear_values() {
        let c = certify_bilinear(
            &SquareMatrix::identity(2),
            &BallDomain::new(1.0, 2).unwrap(),
            &tols(),
        )
        .unwrap();
        assert!((c.k_theoretical - SQRT_2).abs() < 1e-12);

        let n = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let c = certify_bilinear(&n, &BallDomain::new(3.0, 2).unwrap(), &tols()).unwrap();
        assert!((c.k_theoretical - 6.0 * SQRT_2).abs() < 1e-10);
        assert_eq!(c.matrix_norm.map(|x| (x - 2.0).abs() < 1e-12), Some(true));

        let c = certify_bilinear(&n, &BallDomain::new(0.0, 2).unwrap(), &tols()).unwrap();
        assert_eq!(c.k_theoretical, 0.0);
    }

    #[test]
    fn bilinear_domain_dimension_must_match() {
        let err = certify_bilinear(
            &SquareMatrix::identity(2),
            &BallDomain::new(1.0, 3).unwrap(),
            &tols(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn slope_examples() {
        let euclid = Metric::mahalanobis(&SquareMatrix::identity(2), &tols()).unwrap();
        let q = Quadruple::new(
            PairPoint::from_slices(&[0.0, 0.0], &[1.0, 0.0]).unwrap(),
            PairPoint::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(slope(|p| euclid.value(p), &q).unwrap(), 1.0);

        let bil = Metric::bilinear(&SquareMatrix::identity(2));
        let q = Quadruple::new(
            PairPoint::from_slices(&[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            PairPoint::from_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(slope(|p| bil.value(p), &q).unwrap(), 1.0);
    }

    #[test]
    fn slope_rejects_coincident_pairs() {
        let p = PairPoint::from_slices(&[0.3, 0.1], &[1.0, 2.0]).unwrap();
        let q = Quadruple::new(p.clone(), p).unwrap();
        assert!(matches!(slope(|_| Ok(1.0), &q), Err(Error::DegenerateQuadruple)));
    }

    #[test]
    fn certificate_json_shape() {
        let c = certify_mahalanobis(&SquareMatrix::identity(2), &tols()).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["metric"], "mahalanobis");
        assert!(v.get("matrix_norm").is_none());
        assert!(v["radius"].is_null());
        assert_eq!(v["tolerances"]["max_iter"], 10_000);
    }
}
