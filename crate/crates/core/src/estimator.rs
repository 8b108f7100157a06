//! Estimators as pure functions of one sample.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::{Model, SupportPoint};

pub trait Estimator: Send + Sync + fmt::Debug {
    /// Output dimension.
    fn dim(&self) -> usize;

    /// Writes `psi(x)` into `out` (length `dim()`).
    fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn estimate(&self, x: &[f64]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim());
        self.estimate_into(x, out.as_mut_slice())?;
        Ok(out)
    }
}

/// Per-coordinate mean of the observations in a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMean {
    obs_dim: usize,
}

impl SampleMean {
    pub fn new(obs_dim: usize) -> Self {
        Self { obs_dim }
    }

    pub fn for_model(model: &dyn Model) -> Self {
        Self::new(model.obs_dim())
    }
}

impl Estimator for SampleMean {
    fn dim(&self) -> usize {
        self.obs_dim
    }

    fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.obs_dim;
        if x.is_empty() || !x.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                context: "sample mean: sample length not a multiple of observation dim",
                expected: d,
                got: x.len(),
            });
        }
        let n = (x.len() / d) as f64;
        out.fill(0.0);
        for obs in x.chunks_exact(d) {
            for (o, v) in out.iter_mut().zip(obs) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimator {
    value: DVector<f64>,
}

impl ConstantEstimator {
    pub fn new(value: DVector<f64>) -> Self {
        Self { value }
    }
}

impl Estimator for ConstantEstimator {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn estimate_into(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(self.value.as_slice());
        Ok(())
    }
}

/// An estimator on a finite sample space given by its table of values.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedEstimator {
    outcomes: Vec<Vec<f64>>,
    /// One row per outcome.
    values: DMatrix<f64>,
}

impl TabulatedEstimator {
    pub fn new(outcomes: Vec<Vec<f64>>, values: DMatrix<f64>) -> Result<Self> {
        if outcomes.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                context: "tabulated estimator rows vs outcomes",
                expected: outcomes.len(),
                got: values.nrows(),
            });
        }
        Ok(Self { outcomes, values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

impl Estimator for TabulatedEstimator {
    fn dim(&self) -> usize {
        self.values.ncols()
    }

    fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let row = self
            .outcomes
            .iter()
            .position(|o| o.as_slice() == x)
            .ok_or_else(|| Error::Support { sample: x.to_vec() })?;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.values[(row, j)];
        }
        Ok(())
    }
}

/// Exact `E_theta[psi]` on a finite sample space, as
/// `sum_x P_true(x) pi(theta; x) psi(x)`.
pub fn enumerated_mean(
    est: &dyn Estimator,
    model: &dyn Model,
    theta: &crate::models::ParameterPoint,
) -> Result<DVector<f64>> {
    let support = model.enumerate_support()?;
    let mut acc = DVector::zeros(est.dim());
    for (x, p) in &support {
        let w = p * model.pi(theta, x)?;
        if w != 0.0 {
            acc += est.estimate(x)? * w;
        }
    }
    Ok(acc)
}

/// Exact `E_true[(psi - g(theta_true)) (psi - g(theta_true))^T]` on a finite
/// sample space.
pub fn enumerated_cov(est: &dyn Estimator, model: &dyn Model) -> Result<DMatrix<f64>> {
    check_dim(est, model)?;
    let support: Vec<SupportPoint> = model.enumerate_support()?;
    let center = model.target(model.theta_true())?;
    let d = est.dim();
    let mut acc = DMatrix::zeros(d, d);
    for (x, p) in &support {
        let phi = est.estimate(x)? - &center;
        acc += &phi * phi.transpose() * *p;
    }
    Ok((&acc + acc.transpose()) * 0.5)
}

pub(crate) fn check_dim(est: &dyn Estimator, model: &dyn Model) -> Result<()> {
    if est.dim() != model.target_dim() {
        return Err(Error::DimensionMismatch {
            context: "estimator output vs model target",
            expected: model.target_dim(),
            got: est.dim(),
        });
    }
    Ok(())
}
