//! Empirical audit of a certificate.
//!
//! Quadruples are drawn from a ChaCha stream seeded by the caller, so a
//! report is a pure function of `(certificate, matrix, config)`. The stream
//! holds `samples` independent quadruples followed by `samples / 10`
//! correlated ones whose second pair is a small Gaussian perturbation of the
//! first; the latter probe the short-secant regime where slopes approach
//! gradient norms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{
    finite_diff_gradient, slope, witness_bilinear, witness_mahalanobis, LipschitzCertificate,
    Metric, MetricKind, Quadruple,
};
use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, Vector};
use crate::metrics::{BallDomain, PairPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditConfig {
    pub samples: usize,
    pub seed: u64,
    /// Radius of the sampling ball for Mahalanobis audits. Bilinear audits
    /// always sample the certificate's own ball.
    pub sample_radius: f64,
    /// Central-difference step.
    pub fd_step: f64,
    /// At most this many sampled pairs are gradient-checked.
    pub gradcheck_pairs: usize,
    /// Mahalanobis pairs closer than this are not gradient-checked.
    pub gradcheck_min_distance: f64,
    pub witness_step: f64,
    pub witness_shrink: f64,
    /// Standard deviation of the correlated perturbation, relative to the
    /// sampling radius.
    pub correlated_scale: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            samples: 10_000,
            seed: 42,
            sample_radius: 1.0,
            fd_step: 1e-6,
            gradcheck_pairs: 1_000,
            gradcheck_min_distance: 0.1,
            witness_step: 1e-4,
            witness_shrink: 0.999,
            correlated_scale: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    pub seed: u64,
    /// Largest secant slope over all sampled quadruples.
    pub empirical_slope_sup: f64,
    /// Largest product-space gradient norm over sampled pairs.
    pub empirical_grad_sup: f64,
    pub witness_slope: f64,
    /// Quadruples whose slope exceeds `k·(1 + tol)`.
    pub violation_count: usize,
    /// Sampled pairs whose gradient norm exceeds `k·(1 + tol)`.
    pub gradient_violation_count: usize,
    /// Largest entrywise `|fd - analytic| / (1 + |analytic|)`.
    pub gradcheck_max_err: f64,
    pub gradcheck_pair_count: usize,
    pub correlated_samples: usize,
    /// Pairs skipped for gradient estimation because the gradient is undefined.
    pub undefined_gradient_count: usize,
    pub degenerate_quadruple_count: usize,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0 && self.gradient_violation_count == 0
    }
}

/// Uniform sample from the ball of radius `radius` in ℝᵈ.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    let dir: Vec<f64> = loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if g.iter().any(|&x| x != 0.0) {
            break g;
        }
    };
    let n = crate::linalg::norm2(&dir);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    Vector::from_vec_unchecked(dir.into_iter().map(|x| x * r / n).collect())
}

fn sample_pair<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> PairPoint {
    PairPoint {
        x1: sample_in_ball(rng, dim, radius),
        x2: sample_in_ball(rng, dim, radius),
    }
}

/// Gaussian perturbation of `x`, pulled back onto the sphere if it leaves the ball.
fn perturb<R: Rng + ?Sized>(rng: &mut R, x: &Vector, sigma: f64, radius: f64) -> Vector {
    let moved: Vec<f64> = x
        .as_slice()
        .iter()
        .map(|&xi| {
            let z: f64 = StandardNormal.sample(rng);
            xi + sigma * z
        })
        .collect();
    let moved = Vector::from_vec_unchecked(moved);
    let n = moved.norm();
    if n > radius {
        moved.scaled(radius / n)
    } else {
        moved
    }
}

/// Generates the full quadruple stream for an audit.
pub(crate) fn quadruple_stream(dim: usize, radius: f64, cfg: &AuditConfig) -> Vec<Quadruple> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let correlated = cfg.samples / 10;
    let mut out = Vec::with_capacity(cfg.samples + correlated);
    for _ in 0..cfg.samples {
        let first = sample_pair(&mut rng, dim, radius);
        let second = sample_pair(&mut rng, dim, radius);
        out.push(Quadruple { first, second });
    }
    let sigma = cfg.correlated_scale * radius;
    for _ in 0..correlated {
        let first = sample_pair(&mut rng, dim, radius);
        let second = PairPoint {
            x1: perturb(&mut rng, &first.x1, sigma, radius),
            x2: perturb(&mut rng, &first.x2, sigma, radius),
        };
        out.push(Quadruple { first, second });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub samples: usize,
    pub seed: u64,
    /// Pairs actually compared.
    pub pairs: usize,
    /// Largest entrywise `|fd - analytic| / (1 + |analytic|)`.
    pub max_err: f64,
    pub fd_step: f64,
    pub undefined_gradient_count: usize,
}

/// Finite-difference check of the analytic gradient on up to
/// `cfg.gradcheck_pairs` eligible pairs from `pairs`.
fn check_pairs<'a>(
    metric: &Metric,
    pairs: impl Iterator<Item = &'a PairPoint>,
    cfg: &AuditConfig,
) -> Result<GradcheckReport> {
    let mut report = GradcheckReport {
        samples: cfg.samples,
        seed: cfg.seed,
        pairs: 0,
        max_err: 0.0,
        fd_step: cfg.fd_step,
        undefined_gradient_count: 0,
    };
    for p in pairs {
        if report.pairs >= cfg.gradcheck_pairs {
            break;
        }
        if metric.kind() == MetricKind::Mahalanobis
            && metric.value(p)? <= cfg.gradcheck_min_distance
        {
            continue;
        }
        let analytic = match metric.gradient(p) {
            Ok(g) => g,
            Err(Error::UndefinedGradient { .. }) => {
                report.undefined_gradient_count += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let fd = finite_diff_gradient(|q| metric.value(q), p, cfg.fd_step)?;
        report.max_err = report.max_err.max(fd.max_rel_diff(&analytic));
        report.pairs += 1;
    }
    Ok(report)
}

fn audit_setup(cert: &LipschitzCertificate, m: &SquareMatrix, cfg: &AuditConfig) -> Result<(Metric, BallDomain)> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("audit needs at least one sample".into()));
    }
    if cert.dim != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: cert.dim,
            found: m.dim(),
        });
    }
    let (metric, radius) = match cert.metric {
        MetricKind::Mahalanobis => (Metric::mahalanobis(m, &cert.tolerances)?, cfg.sample_radius),
        MetricKind::Bilinear => (Metric::bilinear(m), cert.radius.unwrap_or(0.0)),
    };
    Ok((metric, BallDomain::new(radius, m.dim())?))
}

/// Gradient check alone, on the first pairs of the audit's sample stream.
pub fn gradcheck(cert: &LipschitzCertificate, m: &SquareMatrix, cfg: &AuditConfig) -> Result<GradcheckReport> {
    let (metric, domain) = audit_setup(cert, m, cfg)?;
    let stream = quadruple_stream(m.dim(), domain.radius, cfg);
    check_pairs(&metric, stream[..cfg.samples].iter().map(|q| &q.first), cfg)
}

/// Audits `cert` the metric it certifies for matrix `m`.
pub fn audit(cert: &LipschitzCertificate, m: &SquareMatrix, cfg: &AuditConfig) -> Result<AuditReport> {
    let (metric, domain) = audit_setup(cert, m, cfg)?;
    let tols = &cert.tolerances;
    let threshold = cert.violation_threshold();

    let stream = quadruple_stream(m.dim(), domain.radius, cfg);

    let mut report = AuditReport {
        samples: cfg.samples,
        seed: cfg.seed,
        empirical_slope_sup: 0.0,
        empirical_grad_sup: 0.0,
        witness_slope: 0.0,
        violation_count: 0,
        gradient_violation_count: 0,
        gradcheck_max_err: 0.0,
        gradcheck_pair_count: 0,
        correlated_samples: stream.len() - cfg.samples,
        undefined_gradient_count: 0,
        degenerate_quadruple_count: 0,
    };

    for q in &stream {
        match slope(|p| metric.value(p), q) {
            Ok(s) => {
                report.empirical_slope_sup = report.empirical_slope_sup.max(s);
                if s > threshold {
                    report.violation_count += 1;
                }
            }
            Err(Error::DegenerateQuadruple) => report.degenerate_quadruple_count += 1,
            Err(e) => return Err(e),
        }

        let grad = match metric.gradient(&q.first) {
            Ok(g) => g,
            Err(Error::UndefinedGradient { .. }) => {
                report.undefined_gradient_count += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let gn = grad.norm();
        report.empirical_grad_sup = report.empirical_grad_sup.max(gn);
        if gn > threshold {
            report.gradient_violation_count += 1;
        }
    }

    let gc = check_pairs(&metric, stream[..cfg.samples].iter().map(|q| &q.first), cfg)?;
    report.gradcheck_max_err = gc.max_err;
    report.gradcheck_pair_count = gc.pairs;

    let witness = match cert.metric {
        MetricKind::Mahalanobis => witness_mahalanobis(m, cfg.witness_step, tols),
        MetricKind::Bilinear => witness_bilinear(m, &domain, cfg.witness_shrink, None, tols),
    };
    report.witness_slope = match witness {
        Ok(w) => w.slope,
        Err(Error::ZeroMatrix | Error::ZeroRadius) => 0.0,
        Err(e) => return Err(e),
    };

    Ok(report)
}
