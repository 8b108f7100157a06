//! Vector Barankin covariance lower bounds.
//!
//! For a parametric family `{P_theta}` with true parameter `theta_true`, a
//! target map `g` and a finite list of test points `tau = (theta_1..theta_M)`,
//! every unbiased estimator `psi` of `g` with finite covariance satisfies
//!
//! ```text
//! Cov(psi) >= G(tau) A^T (A B(tau) A^T)^-1 A G(tau)^T
//! ```
//!
//! where `G` stacks the increments `g(theta_i) - g(theta_true)` and `B` is the
//! Gram matrix of the likelihood ratios `pi(theta_i) = dP_theta_i / dP_true`.
//!
//! * [`psd`] - Loewner-order utilities on symmetric matrices.
//! * [`models`] - built-in families and the [`models::Model`] trait.
//! * [`bound`] - moment matrices, bounds, deflation, compatibility, search,
//!   estimator construction and certification.
//! * [`estimator`] - estimators as functions of one sample.
//! * [`mc`] - seeded batch-means Monte Carlo and exact-enumeration oracles.
//!
//! ```
//! use barankin::bound::{bound_v, compute_b, TestPointSet};
//! use barankin::mc::McConfig;
//! use barankin::models::{GaussianMean, GaussianTarget};
//! use barankin::{Model, Tolerance};
//!
//! let model = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity)?;
//! let tau = TestPointSet::scalars(&[0.0, 1.0])?;
//! let mm = compute_b(&model, &tau, model.moment_mode(), &McConfig::default())?;
//! let v = bound_v(&mm, &Tolerance::default())?;
//! assert!((v.trace() - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-12);
//! # Ok::<(), barankin::Error>(())
//! ```

pub mod bound;
pub mod error;
pub mod estimator;
pub mod mc;
pub mod models;
pub mod psd;

pub use error::{Error, Result};
pub use models::{Model, ModelSpec, MomentMethod, ParameterPoint};
pub use psd::{LoewnerOrder, LoewnerVerdict, SymMatrix, Tolerance};
