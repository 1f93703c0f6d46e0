//! Explicit inputs whose slope reaches the certified constant.
//!
//! Mahalanobis: take `v` the top right singular vector of `L` and the pair
//! `(v, 0)`. Since `Mv = LᵀLv = σ²v` and `d = ‖Lv‖ = σ`, the partials are
//! `(σv, -σv)` with product-space norm `√2 σ = k`. The distance is linear
//! along the normalized gradient from there, so a finite step of any size
//! has slope `k` up to rounding.
//!
//! Bilinear: with `Mv = σu`, `Mᵀu = σv`, put `x1 = sRu`, `x2 = sRv` for a
//! shrink factor `s < 1`. The partials are `(sRσu, sRσv)`, norm `s·k`. A step
//! of length `h` along `(u, v)/√2` has slope `σ(√2 sR + h/2)`, which stays
//! at most `k` while the stepped points remain inside the ball.

use serde::Serialize;

use super::{slope, Metric, Quadruple, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{top_singular, SquareMatrix, Vector};
use crate::metrics::{BallDomain, PairPoint};

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    #[serde(skip)]
    pub quadruple: Quadruple,
    /// Secant slope achieved by `quadruple`.
    pub slope: f64,
    /// Product-space gradient norm at the base pair.
    pub base_gradient_norm: f64,
    pub step: f64,
}

pub fn witness_mahalanobis(m: &SquareMatrix, h: f64, tols: &Tolerances) -> Result<Witness> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidArgument(format!("witness step must be positive, got {h}")));
    }
    if m.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let metric = Metric::mahalanobis(m, tols)?;
    let Metric::Mahalanobis { factor, .. } = &metric else {
        unreachable!()
    };
    let top = top_singular(factor.factor(), &tols.power)?;
    if top.value == 0.0 {
        return Err(Error::ZeroMatrix);
    }

    let base = PairPoint::new(top.right.clone(), Vector::zeros(m.dim()))?;
    let grad = metric.gradient(&base)?;
    let dir = grad.normalized().ok_or(Error::ZeroMatrix)?;
    let quadruple = Quadruple::new(base.step(h, &dir), base)?;
    let achieved = slope(|p| metric.value(p), &quadruple)?;
    Ok(Witness {
        quadruple,
        slope: achieved,
        base_gradient_norm: grad.norm(),
        step: h,
    })
}

/// Bilinear witness; `h` defaults to `1e-6 · R` and is halved until both
/// stepped points lie in the ball.
pub fn witness_bilinear(
    m: &SquareMatrix,
    domain: &BallDomain,
    shrink: f64,
    h: Option<f64>,
    tols: &Tolerances,
) -> Result<Witness> {
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidArgument(format!("shrink must lie in (0, 1), got {shrink}")));
    }
    if domain.dim != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            found: domain.dim,
        });
    }
    if domain.radius == 0.0 {
        return Err(Error::ZeroRadius);
    }
    if m.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let top = top_singular(m, &tols.power)?;
    if top.value == 0.0 {
        return Err(Error::ZeroMatrix);
    }

    let r = shrink * domain.radius;
    let base = PairPoint::new(top.left.scaled(r), top.right.scaled(r))?;
    let metric = Metric::bilinear(m);
    let grad = metric.gradient(&base)?;
    let dir = grad.normalized().ok_or(Error::ZeroMatrix)?;

    let mut step = h.unwrap_or(1e-6 * domain.radius);
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidArgument(format!("witness step must be positive, got {step}")));
    }
    let moved = loop {
        let moved = base.step(step, &dir);
        if domain.contains(&moved.x1) && domain.contains(&moved.x2) {
            break moved;
        }
        step *= 0.5;
        if step < f64::MIN_POSITIVE {
            return Err(Error::InvalidArgument("no in-ball witness step found".into()));
        }
    };
    let quadruple = Quadruple::new(moved, base)?;
    let achieved = slope(|p| metric.value(p), &quadruple)?;
    Ok(Witness {
        quadruple,
        slope: achieved,
        base_gradient_norm: grad.norm(),
        step,
    })
}
