//! Parametric families with likelihood ratios relative to a true parameter.
//!
//! Every model fixes a true index `theta_true` and exposes the likelihood
//! ratio `pi(theta; x) = dP_theta / dP_theta_true (x)` (through its log), the
//! target map `g(theta)`, the second moments `E_true[pi(theta1) pi(theta2)]`
//! when they are available exactly, and a sampler. The parameter space is a
//! box in `R^k`.
//!
//! Sampling uses ChaCha8 keyed by the 64-bit seed, with the ChaCha stream
//! number selecting an independent substream (see [`stream_rng`]).

mod bernoulli;
mod exponential;
mod gaussian;

use std::fmt;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use bernoulli::{BernoulliN, BernoulliTarget};
pub use exponential::ExponentialRate;
pub use gaussian::{GaussianMean, GaussianMeanVector, GaussianTarget};

/// A point of the parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn scalar(v: f64) -> Self {
        Self(vec![v])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// First coordinate; convenient for scalar models.
    pub fn value(&self) -> f64 {
        self.0[0]
    }
}

impl From<f64> for ParameterPoint {
    fn from(v: f64) -> Self {
        Self::scalar(v)
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Per-coordinate closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("domain needs at least one coordinate".into()));
        }
        for &(lo, hi) in &bounds {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
            }
        }
        Ok(Self { bounds })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, theta: &ParameterPoint) -> bool {
        theta.dim() == self.dim()
            && theta
                .coords()
                .iter()
                .zip(&self.bounds)
                .all(|(&c, &(lo, hi))| c >= lo && c <= hi)
    }

    /// Clamps each coordinate into its interval.
    pub fn clamp(&self, coords: &mut [f64]) {
        for (c, &(lo, hi)) in coords.iter_mut().zip(&self.bounds) {
            *c = c.clamp(lo, hi);
        }
    }

    pub fn check(&self, theta: &ParameterPoint) -> Result<()> {
        if theta.dim() != self.dim() {
            return Err(Error::Domain {
                theta: theta.clone(),
                reason: format!("expected {} coordinates", self.dim()),
            });
        }
        if !self.contains(theta) {
            return Err(Error::Domain {
                theta: theta.clone(),
                reason: format!("outside box {:?}", self.bounds),
            });
        }
        Ok(())
    }
}

/// How second moments of likelihood ratios are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentMethod {
    ClosedForm,
    Enumeration,
    MonteCarlo,
}

impl MomentMethod {
    pub fn is_exact(self) -> bool {
        !matches!(self, Self::MonteCarlo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ClosedForm => "closed_form",
            Self::Enumeration => "enumeration",
            Self::MonteCarlo => "monte_carlo",
        }
    }
}

impl fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One finite-support outcome with its probability under the true parameter.
pub type SupportPoint = (Vec<f64>, f64);

/// A parametric family `{P_theta}` dominated by `P_theta_true`.
///
/// Samples are flat vectors of `sample_dim` reals holding `n` observations of
/// `obs_dim` coordinates each, observation-major.
pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn theta_true(&self) -> &ParameterPoint;
    fn sample_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn domain(&self) -> &Domain;
    fn moment_mode(&self) -> MomentMethod;

    /// Natural log of the likelihood ratio; `-inf` where `P_theta` puts no
    /// mass but `P_theta_true` does.
    fn log_pi(&self, theta: &ParameterPoint, x: &[f64]) -> Result<f64>;

    /// The target map `g(theta)`.
    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>>;

    /// `E_true[pi(theta1) pi(theta2)]`, exactly.
    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64>;

    /// Draws one sample from `P_theta` into `out` (length `sample_dim`).
    /// `theta` has already been validated.
    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]);

    fn enumerate_support(&self) -> Result<Vec<SupportPoint>> {
        Err(Error::Mode(format!(
            "model '{}' has a continuous sample space; enumeration unavailable",
            self.name()
        )))
    }

    fn check_theta(&self, theta: &ParameterPoint) -> Result<()> {
        self.domain().check(theta)
    }

    /// `h(theta) = g(theta) - g(theta_true)`.
    fn target_increment(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        Ok(self.target(theta)? - self.target(self.theta_true())?)
    }

    /// The likelihood ratio itself.
    fn pi(&self, theta: &ParameterPoint, x: &[f64]) -> Result<f64> {
        Ok(self.log_pi(theta, x)?.exp())
    }
}

pub(crate) fn check_sample_len(model: &dyn Model, x: &[f64]) -> Result<()> {
    if x.len() != model.sample_dim() {
        return Err(Error::DimensionMismatch {
            context: "sample length",
            expected: model.sample_dim(),
            got: x.len(),
        });
    }
    Ok(())
}

/// The built-in families, selectable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    GaussianMean(GaussianMean),
    GaussianMeanVector(GaussianMeanVector),
    Bernoulli(BernoulliN),
    ExponentialRate(ExponentialRate),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            ModelSpec::GaussianMean($m) => $e,
            ModelSpec::GaussianMeanVector($m) => $e,
            ModelSpec::Bernoulli($m) => $e,
            ModelSpec::ExponentialRate($m) => $e,
        }
    };
}

impl Model for ModelSpec {
    fn name(&self) -> &str {
        delegate!(self, m => m.name())
    }
    fn theta_true(&self) -> &ParameterPoint {
        delegate!(self, m => m.theta_true())
    }
    fn sample_dim(&self) -> usize {
        delegate!(self, m => m.sample_dim())
    }
    fn obs_dim(&self) -> usize {
        delegate!(self, m => m.obs_dim())
    }
    fn target_dim(&self) -> usize {
        delegate!(self, m => m.target_dim())
    }
    fn domain(&self) -> &Domain {
        delegate!(self, m => m.domain())
    }
    fn moment_mode(&self) -> MomentMethod {
        delegate!(self, m => m.moment_mode())
    }
    fn log_pi(&self, theta: &ParameterPoint, x: &[f64]) -> Result<f64> {
        delegate!(self, m => m.log_pi(theta, x))
    }
    fn target(&self, theta: &ParameterPoint) -> Result<DVector<f64>> {
        delegate!(self, m => m.target(theta))
    }
    fn moment(&self, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
        delegate!(self, m => m.moment(theta1, theta2))
    }
    fn draw(&self, theta: &ParameterPoint, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        delegate!(self, m => m.draw(theta, rng, out))
    }
    fn enumerate_support(&self) -> Result<Vec<SupportPoint>> {
        delegate!(self, m => m.enumerate_support())
    }
}

/// Draws from `P_theta`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    data: Vec<f64>,
    sample_dim: usize,
    pub seed: u64,
    pub theta: ParameterPoint,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.data.len() / self.sample_dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.sample_dim..(i + 1) * self.sample_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.sample_dim)
    }
}

/// ChaCha8 generator for substream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` independent draws from `P_theta`; deterministic in `seed`.
pub fn sample(model: &dyn Model, theta: &ParameterPoint, count: usize, seed: u64) -> Result<SampleBatch> {
    sample_stream(model, theta, count, seed, 0)
}

/// Like [`sample`], on an explicit substream.
pub fn sample_stream(
    model: &dyn Model,
    theta: &ParameterPoint,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    model.check_theta(theta)?;
    let d = model.sample_dim();
    let mut data = vec![0.0; count * d];
    let mut rng = stream_rng(seed, stream);
    for chunk in data.chunks_exact_mut(d) {
        model.draw(theta, &mut rng, chunk);
    }
    Ok(SampleBatch {
        data,
        sample_dim: d,
        seed,
        theta: theta.clone(),
    })
}

/// `sum_x P_true(x) pi(theta1; x) pi(theta2; x)` over the finite support.
pub fn enumerated_moment(model: &dyn Model, theta1: &ParameterPoint, theta2: &ParameterPoint) -> Result<f64> {
    let support = model.enumerate_support()?;
    let mut acc = 0.0;
    for (x, p) in &support {
        acc += p * model.pi(theta1, x)? * model.pi(theta2, x)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_checks() {
        let d = Domain::new(vec![(0.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert!(d.contains(&ParameterPoint::new(vec![0.0, 1.0])));
        assert!(!d.contains(&ParameterPoint::new(vec![1.5, 0.0])));
        assert!(!d.contains(&ParameterPoint::scalar(0.5)));
        assert!(matches!(
            d.check(&ParameterPoint::new(vec![2.0, 0.0])),
            Err(Error::Domain { .. })
        ));
        assert!(Domain::new(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn parameter_point_display() {
        assert_eq!(ParameterPoint::new(vec![0.5, 1.0]).to_string(), "(0.5, 1)");
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        use rand::Rng;
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 1).random();
        let c: u64 = stream_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
