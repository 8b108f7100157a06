use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{check_sample_len, Domain, Model, MomentMethod, ParameterPoint};
use crate::error::{Error, Result};

/// Target maps for the scalar Gaussian mean model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianTarget {
    Identity,
    /// `g(theta) = scale * theta + offset`
    Affine {
        scale: f64,
        offset: f64,
    },
}

/// `n` i.i.d. observations from `N(theta, sigma^2)` with known `sigma`.
///
/// `log pi(theta; x) = (theta - t0) sum(x) / sigma^2 - n (theta^2 - t0^2) / (2 sigma^2)`
/// and `E[pi(a) pi(b)] = exp(n (a - t0)(b - t0) / sigma^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMean {
    n: usize,
    sigma: f64,
    theta_true: ParameterPoint,
    target: GaussianTarget,
    domain: Domain,
}

impl GaussianMean {
    /// Domain defaults to `theta_true +/- 10 sigma`.
    pub fn new(n: usize, sigma: f64, theta_true: f64, target: GaussianTarget) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("gaussian_mean: n must be positive".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gaussian_mean: sigma must be positive, got {sigma}"
            )));
        }
        if !theta_true.is_finite() {
            return Err(Error::InvalidInput("gaussian_mean: theta_true must be finite".into()));
        }
        if let GaussianTarget::Affine { scale, offset } = target {
            if !(scale.is_finite() && offset.is_finite()) {
                return Err(Error::InvalidInput(
                    "gaussian_mean: affine target must be finite".into(),
                ));
            }
        }
        let domain = Domain::new(vec![(theta_true - 10.0 * sigma, theta_true + 10.0 * sigma)])?;
        Ok(Self {
            n,
            sigma,
            theta_true: ParameterPoint::scalar(theta_true),
            target,
            domain,
        })
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        let domain = Domain::new(vec![(lo, hi)])?;
        domain.check(&self.theta_true)?;
        self.domain = domain;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Model for GaussianMean {
    fn name(&self) -> &str {
        "gaussian_mean"
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
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Support { sample: x.to_vec() });
        }
        let (t, t0) = (theta.value(), self.theta_true.value());
        let s2 = self.sigma * self.sigma;
        let sum: f64 = x.iter().sum();
        Ok((t - t0) * sum / s2 - self.n as f64 * (t * t - t0 * t0) / (2.0 * s2))
    }

    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        self.check_theta(theta)?;
        let t = theta.value();
        let g = match self.target {
            GaussianTarget::Identity => t,
            GaussianTarget::Affine { scale, offset } => scale * t + offset,
        };
        Ok(DVector::from_element(1, g))
    }

    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
        self.check_theta(theta1)?;
        self.check_theta(theta2)?;
        let t0 = self.theta_true.value();
        let s2 = self.sigma * self.sigma;
        Ok((self.n as f64 * ((theta1.value() - t0) * (theta2.value() - t0)) / s2).exp())
    }

    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mu = theta.value();
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = mu + self.sigma * z;
        }
    }
}

/// `n` i.i.d. observations from `N_d(theta, diag(variances))`, identity target.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeanVector {
    n: usize,
    variances: Vec<f64>,
    theta_true: ParameterPoint,
    domain: Domain,
}

impl GaussianMeanVector {
    /// Domain defaults to `theta_true_j +/- 10 sd_j` per coordinate.
    pub fn new(n: usize, variances: Vec<f64>, theta_true: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("gaussian_mean_vector: n must be positive".into()));
        }
        if variances.is_empty() || variances.len() != theta_true.len() {
            return Err(Error::DimensionMismatch {
                context: "gaussian_mean_vector variances vs theta_true",
                expected: theta_true.len(),
                got: variances.len(),
            });
        }
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(
                "gaussian_mean_vector: variances must be positive".into(),
            ));
        }
        if theta_true.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(
                "gaussian_mean_vector: theta_true must be finite".into(),
            ));
        }
        let bounds = theta_true
            .iter()
            .zip(&variances)
            .map(|(t, v)| (t - 10.0 * v.sqrt(), t + 10.0 * v.sqrt()))
            .collect();
        Ok(Self {
            n,
            domain: Domain::new(bounds)?,
            variances,
            theta_true: ParameterPoint::new(theta_true),
        })
    }

    pub fn with_domain(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let domain = Domain::new(bounds)?;
        domain.check(&self.theta_true)?;
        self.domain = domain;
        Ok(self)
    }

    fn d(&self) -> usize {
        self.variances.len()
    }
}

impl Model for GaussianMeanVector {
    fn name(&self) -> &str {
        "gaussian_mean_vector"
    }

    fn theta_true(&self) -> &ParameterPoint {
        &self.theta_true
    }

    fn sample_dim(&self) -> usize {
        self.n * self.d()
    }

    fn obs_dim(&self) -> usize {
        self.d()
    }

    fn target_dim(&self) -> usize {
        self.d()
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
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Support { sample: x.to_vec() });
        }
        let d = self.d();
        let mut acc = 0.0;
        for j in 0..d {
            let (t, t0, s2) = (theta.coords()[j], self.theta_true.coords()[j], self.variances[j]);
            let sum: f64 = x.iter().skip(j).step_by(d).sum();
            acc += (t - t0) * sum / s2 - self.n as f64 * (t * t - t0 * t0) / (2.0 * s2);
        }
        Ok(acc)
    }

    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        self.check_theta(theta)?;
        Ok(DVector::from_column_slice(theta.coords()))
    }

    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
        self.check_theta(theta1)?;
        self.check_theta(theta2)?;
        let q: f64 = (0..self.d())
            .map(|j| {
                let t0 = self.theta_true.coords()[j];
                ((theta1.coords()[j] - t0) * (theta2.coords()[j] - t0)) / self.variances[j]
            })
            .sum();
        Ok((self.n as f64 * q).exp())
    }

    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let d = self.d();
        for (k, v) in out.iter_mut().enumerate() {
            let j = k % d;
            let z: f64 = StandardNormal.sample(rng);
            *v = theta.coords()[j] + self.variances[j].sqrt() * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sample;
    use std::f64::consts::E;

    fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
        (-(x - mu) * (x - mu) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn log_pi_matches_density_quotient() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let t = ParameterPoint::scalar(1.0);
        assert!((m.log_pi(&t, &[0.0]).unwrap() + 0.5).abs() < 1e-15);
        let m3 = GaussianMean::new(3, 1.7, 0.4, GaussianTarget::Identity).unwrap();
        let x = [0.3, -1.2, 2.5];
        let th = ParameterPoint::scalar(-0.8);
        let ratio: f64 = x
            .iter()
            .map(|&xi| normal_pdf(xi, -0.8, 1.7) / normal_pdf(xi, 0.4, 1.7))
            .product();
        assert!((m3.log_pi(&th, &x).unwrap() - ratio.ln()).abs() < 1e-12);
        assert_eq!(m3.log_pi(m3.theta_true(), &x).unwrap(), 0.0);
    }

    #[test]
    fn moment_closed_form() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let one = ParameterPoint::scalar(1.0);
        assert!((m.moment(&one, &one).unwrap() - E).abs() < 1e-15);
        assert_eq!(m.moment(m.theta_true(), &ParameterPoint::scalar(3.3)).unwrap(), 1.0);
    }

    #[test]
    fn targets() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        assert_eq!(m.target(&ParameterPoint::scalar(0.7)).unwrap()[0], 0.7);
        let a = GaussianMean::new(
            1,
            1.0,
            0.0,
            GaussianTarget::Affine {
                scale: 2.0,
                offset: 1.0,
            },
        )
        .unwrap();
        assert_eq!(a.target(&ParameterPoint::scalar(0.7)).unwrap()[0], 2.4);
        assert!(matches!(
            m.target(&ParameterPoint::scalar(50.0)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let t = ParameterPoint::scalar(0.0);
        let a = sample(&m, &t, 4, 7).unwrap();
        let b = sample(&m, &t, 4, 7).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        assert_ne!(a, sample(&m, &t, 4, 8).unwrap());
    }

    #[test]
    fn vector_model_reduces_to_scalar_per_coordinate() {
        let v = GaussianMeanVector::new(2, vec![1.0, 4.0], vec![0.0, 1.0]).unwrap();
        let s0 = GaussianMean::new(2, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let s1 = GaussianMean::new(2, 2.0, 1.0, GaussianTarget::Identity).unwrap();
        let th = ParameterPoint::new(vec![0.3, 1.5]);
        let x = [0.1, 2.0, -0.4, 0.5];
        let expect = s0.log_pi(&ParameterPoint::scalar(0.3), &[0.1, -0.4]).unwrap()
            + s1.log_pi(&ParameterPoint::scalar(1.5), &[2.0, 0.5]).unwrap();
        assert!((v.log_pi(&th, &x).unwrap() - expect).abs() < 1e-13);
        let th2 = ParameterPoint::new(vec![-0.2, 0.0]);
        let expect_m = s0
            .moment(&ParameterPoint::scalar(0.3), &ParameterPoint::scalar(-0.2))
            .unwrap()
            * s1.moment(&ParameterPoint::scalar(1.5), &ParameterPoint::scalar(0.0))
                .unwrap();
        assert!((v.moment(&th, &th2).unwrap() - expect_m).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussianMean::new(0, 1.0, 0.0, GaussianTarget::Identity).is_err());
        assert!(GaussianMean::new(1, 0.0, 0.0, GaussianTarget::Identity).is_err());
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        assert!(matches!(
            m.log_pi(&ParameterPoint::scalar(0.5), &[f64::NAN]),
            Err(Error::Support { .. })
        ));
        assert!(m.clone().with_domain(1.0, 2.0).is_err());
    }
}
