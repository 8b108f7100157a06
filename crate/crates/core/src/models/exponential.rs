use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{check_sample_len, Domain, Model, MomentMethod, ParameterPoint};
use crate::error::{Error, Result};

/// `n` i.i.d. observations with density `l exp(-l x)`, identity target.
///
/// `E[pi(l1) pi(l2)] = (l1 l2 / (l0 (l1 + l2 - l0)))^n`, finite only when
/// `l1 + l2 > l0`. Pairs outside that region violate square integrability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialRate {
    n: usize,
    theta_true: ParameterPoint,
    domain: Domain,
}

impl ExponentialRate {
    /// Domain defaults to `[1e-3 l0, 1e3 l0]`.
    pub fn new(n: usize, rate_true: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("exponential_rate: n must be positive".into()));
        }
        if !(rate_true > 0.0 && rate_true.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exponential_rate: rate_true must be positive, got {rate_true}"
            )));
        }
        Ok(Self {
            n,
            theta_true: ParameterPoint::scalar(rate_true),
            domain: Domain::new(vec![(1e-3 * rate_true, 1e3 * rate_true)])?,
        })
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if lo <= 0.0 {
            return Err(Error::InvalidInput("exponential_rate: rates must be positive".into()));
        }
        let domain = Domain::new(vec![(lo, hi)])?;
        domain.check(&self.theta_true)?;
        self.domain = domain;
        Ok(self)
    }
}

impl Model for ExponentialRate {
    fn name(&self) -> &str {
        "exponential_rate"
    }

    fn theta_true(&self) -> &ParameterPoint {
        &self.theta_true
    }

    fn sample_dim(&self) -> usize {
        self.n
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn moment_mode(&self) -> MomentMethod {
        MomentMethod::ClosedForm
    }

    fn log_pi(&self, theta: &ParameterPoint, x: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        check_sample_len(self, x)?;
        if x.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Support { sample: x.to_vec() });
        }
        let (l, l0) = (theta.value(), self.theta_true.value());
        let sum: f64 = x.iter().sum();
        Ok(self.n as f64 * (l / l0).ln() - (l - l0) * sum)
    }

    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        self.check_theta(theta)?;
        Ok(DVector::from_element(1, theta.value()))
    }

    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
        self.check_theta(theta1)?;
        self.check_theta(theta2)?;
        let (l1, l2, l0) = (theta1.value(), theta2.value(), self.theta_true.value());
        let denom = l1 + l2 - l0;
        if denom <= 0.0 {
            return Err(Error::PostulateViolation {
                theta1: theta1.clone(),
                theta2: theta2.clone(),
            });
        }
        Ok((l1 * l2 / (l0 * denom)).powi(self.n as i32))
    }

    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let l = theta.value();
        for v in out.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *v = e / l;
        }
    }
}
