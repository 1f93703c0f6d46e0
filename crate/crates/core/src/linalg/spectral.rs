use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{norm2, SquareMatrix, Vector};
use crate::error::{Error, Result};

/// Settings for power iteration on `AᵀA`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerIteration {
    /// Target relative error on the top eigenvalue of `AᵀA`.
    #[serde(rename = "spectral_tol")]
    pub tol: f64,
    pub max_iter: usize,
    /// Seeds the start vector; a single restart uses a derived seed.
    #[serde(rename = "power_seed")]
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 42,
        }
    }
}

/// `A v = value · left`, `Aᵀ left = value · right`, both vectors unit length.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub value: f64,
    pub left: Vector,
    pub right: Vector,
    pub iterations: usize,
}

/// Largest singular value of `a`.
pub fn spectral_norm(a: &SquareMatrix, opts: &PowerIteration) -> Result<f64> {
    top_singular(a, opts).map(|t| t.value)
}

/// Top singular triple by power iteration on `AᵀA`.
///
/// Convergence is judged on the Rayleigh quotient `q_k = ‖A v_k‖²`, which is
/// nondecreasing for a PSD operator. Successive increments shrink roughly
/// geometrically with ratio `ρ`, so the remaining error is estimated as
/// `δ_k / (1 - ρ)`; iteration stops when that falls below `tol · q_k` or
/// when `δ_k` reaches the rounding floor. Tied top singular values are fine:
/// the quotient converges even though the iterate wanders in the eigenspace.
pub fn top_singular(a: &SquareMatrix, opts: &PowerIteration) -> Result<SingularTriple> {
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "power iteration needs tol > 0 and max_iter >= 1".into(),
        ));
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "matrix" });
    }
    let d = a.dim();
    if a.is_zero() {
        return Ok(SingularTriple {
            value: 0.0,
            left: Vector::basis(d, 0),
            right: Vector::basis(d, 0),
            iterations: 0,
        });
    }

    match power_attempt(a, opts, opts.seed) {
        Ok(t) => Ok(t),
        Err(_) => power_attempt(a, opts, restart_seed(opts.seed)),
    }
}

fn restart_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

fn start_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm2(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn power_attempt(a: &SquareMatrix, opts: &PowerIteration, seed: u64) -> Result<SingularTriple> {
    let d = a.dim();
    let noise_floor = 64.0 * f64::EPSILON * d as f64;

    let mut v = start_vector(d, seed);
    let mut prev_q: Option<f64> = None;
    let mut prev_delta: Option<f64> = None;
    let mut last = (0.0, f64::INFINITY);

    for iter in 1..=opts.max_iter {
        let av = a.apply(&v);
        let sigma = norm2(&av);
        let q = sigma * sigma;
        let w = a.apply_transpose(&av);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - q * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        last = (sigma, residual);

        if q == 0.0 {
            // start vector landed in the null space
            break;
        }

        if let Some(pq) = prev_q {
            let delta = (q - pq).abs();
            let converged = delta <= noise_floor * q
                || prev_delta.is_some_and(|pd| {
                    let rho = delta / pd;
                    rho < 1.0 && delta / (1.0 - rho) <= opts.tol * q
                });
            if converged {
                let left = Vector::from_vec_unchecked(av.iter().map(|x| x / sigma).collect());
                return Ok(SingularTriple {
                    value: sigma,
                    left,
                    right: Vector::from_vec_unchecked(v),
                    iterations: iter,
                });
            }
            prev_delta = Some(delta);
        }
        prev_q = Some(q);

        let wn = norm2(&w);
        if wn == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / wn).collect();
    }

    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        estimate: last.0,
        residual: last.1,
    })
}
