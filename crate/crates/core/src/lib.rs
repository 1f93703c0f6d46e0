//! Certified Lipschitz constants for Mahalanobis distances and bilinear
//! similarities, with empirical audits.
//!
//! ```
//! use lipcert::certify::{certify_mahalanobis, Tolerances};
//! use lipcert::linalg::SquareMatrix;
//!
//! let m = SquareMatrix::diag(&[4.0, 1.0]);
//! let cert = certify_mahalanobis(&m, &Tolerances::default()).unwrap();
//! assert!((cert.k_theoretical - 2.0 * 2f64.sqrt()).abs() < 1e-10);
//! ```

pub mod certify;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
