use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_sample_len, Domain, Model, MomentMethod, ParameterPoint, SupportPoint};
use crate::error::{Error, Result};

/// Largest `n` for which the support `{0,1}^n` is enumerated.
pub const MAX_ENUMERATED_TRIALS: usize = 20;

/// Odds are unbounded at `p = 1`; the domain stops just short of it.
const ODDS_UPPER: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BernoulliTarget {
    /// `g(p) = p`
    Identity,
    /// `g(p) = p / (1 - p)`
    Odds,
    /// `g(p) = p^2`
    Square,
}

/// `n` i.i.d. Bernoulli(p) trials, `0 < p_true < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliN {
    n: usize,
    theta_true: ParameterPoint,
    target: BernoulliTarget,
    domain: Domain,
}

impl BernoulliN {
    /// Domain is `[0, 1]`, or `[0, 1 - 1e-12]` for the odds target.
    pub fn new(n: usize, p_true: f64, target: BernoulliTarget) -> Result<Self> {
        if n == 0 || n > MAX_ENUMERATED_TRIALS {
            return Err(Error::InvalidInput(format!(
                "bernoulli: n must be in 1..={MAX_ENUMERATED_TRIALS}, got {n}"
            )));
        }
        if !(p_true > 0.0 && p_true < 1.0) {
            return Err(Error::InvalidInput(format!(
                "bernoulli: p_true must lie strictly inside (0, 1), got {p_true}"
            )));
        }
        let upper = match target {
            BernoulliTarget::Odds => ODDS_UPPER,
            _ => 1.0,
        };
        Ok(Self {
            n,
            theta_true: ParameterPoint::scalar(p_true),
            target,
            domain: Domain::new(vec![(0.0, upper)])?,
        })
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if lo < 0.0 || hi > self.domain.bounds()[0].1 {
            return Err(Error::InvalidInput(format!(
                "bernoulli: domain [{lo}, {hi}] exceeds the admissible range"
            )));
        }
        let domain = Domain::new(vec![(lo, hi)])?;
        domain.check(&self.theta_true)?;
        self.domain = domain;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target_kind(&self) -> BernoulliTarget {
        self.target
    }

    fn p_true(&self) -> f64 {
        self.theta_true.value()
    }

    /// Log-ratio for `k` successes out of `n`.
    fn log_ratio_count(&self, p: f64, k: usize) -> f64 {
        let pt = self.p_true();
        let mut acc = 0.0;
        if k > 0 {
            acc += k as f64 * (p / pt).ln();
        }
        if k < self.n {
            acc += (self.n - k) as f64 * ((1.0 - p) / (1.0 - pt)).ln();
        }
        acc
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Model for BernoulliN {
    fn name(&self) -> &str {
        "bernoulli"
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
        MomentMethod::Enumeration
    }

    fn log_pi(&self, theta: &ParameterPoint, x: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        check_sample_len(self, x)?;
        if x.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Support { sample: x.to_vec() });
        }
        let k = x.iter().filter(|&&v| v == 1.0).count();
        Ok(self.log_ratio_count(theta.value(), k))
    }

    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        self.check_theta(theta)?;
        let p = theta.value();
        let g = match self.target {
            BernoulliTarget::Identity => p,
            BernoulliTarget::Odds => p / (1.0 - p),
            BernoulliTarget::Square => p * p,
        };
        Ok(DVector::from_element(1, g))
    }

    /// Sums over the support grouped by success count.
    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
        self.check_theta(theta1)?;
        self.check_theta(theta2)?;
        let pt = self.p_true();
        let (p1, p2) = (theta1.value(), theta2.value());
        let mut acc = 0.0;
        for k in 0..=self.n {
            let prob = binomial(self.n, k) * pt.powi(k as i32) * (1.0 - pt).powi((self.n - k) as i32);
            let r = (self.log_ratio_count(p1, k) + self.log_ratio_count(p2, k)).exp();
            acc += prob * r;
        }
        Ok(acc)
    }

    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let p = theta.value();
        for v in out.iter_mut() {
            let u: f64 = rng.random();
            *v = if u < p { 1.0 } else { 0.0 };
        }
    }

    /// Outcomes in binary counting order (trial 0 is the least significant bit).
    fn enumerate_support(&self) -> Result<Vec<SupportPoint>> {
        let pt = self.p_true();
        let out = (0..1usize << self.n)
            .map(|code| {
                let x: Vec<f64> = (0..self.n).map(|i| ((code >> i) & 1) as f64).collect();
                let prob = x.iter().map(|&v| if v == 1.0 { pt } else { 1.0 - pt }).product();
                (x, prob)
            })
            .collect();
        Ok(out)
    }
}
