//! Maximum-likelihood estimation of truncated and Tobit (censored) normal
//! regression in the `(δ, γ) = (β/σ, 1/σ)` coordinates, where both
//! log-likelihoods are well behaved, plus a Monte Carlo harness that checks
//! the conditions for asymptotic normality of the estimator.
//!
//! ```
//! use limdep::{fit, Dataset, FitOptions, ModelKind};
//!
//! let y = vec![0.3, 1.7, 0.9, 2.4, 0.2, 1.1, 3.0, 0.6];
//! let z = vec![-0.5, 0.8, 0.1, 1.5, -1.2, 0.4, 2.0, -0.3];
//! let data = Dataset::new(ModelKind::Truncated, 0.0, y, z, 1)
//!     .unwrap()
//!     .with_intercept();
//! let fitted = fit(&data, &FitOptions::default()).unwrap();
//! assert!(fitted.theta_hat.gamma > 0.0);
//! ```

// `!(x > 0.0)` is used deliberately: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimator;
pub mod model;
pub mod par;
pub mod special;
pub mod validation;

pub use data::{Dataset, ModelKind, ReparamPoint};
pub use error::{Error, Result};
pub use estimator::{delta_method, fit, FitOptions, FitResult, Init, OrigScale};
pub use model::{evaluate, Need, SampleSums, ScoreHessian};
pub use par::Exec;
