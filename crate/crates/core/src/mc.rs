//! Seeded Monte Carlo with batch-means standard errors, plus exact
//! enumeration oracles for finite sample spaces.
//!
//! Batch `b` draws from ChaCha8 substream `b` of `McConfig::seed`, so batch
//! results do not depend on scheduling. Batch means are reduced in batch
//! order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{check_dim, Estimator, TabulatedEstimator};
use crate::models::{stream_rng, Model, ParameterPoint, SupportPoint};
use crate::psd::{SymMatrix, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub batches: usize,
}

impl Default for McConfig {
    /// 40 batches divides every power of ten from 10^3 up.
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            batches: 40,
        }
    }
}

impl McConfig {
    pub fn new(samples: usize, seed: u64, batches: usize) -> Result<Self> {
        let cfg = Self { samples, seed, batches };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidInput("Monte Carlo samples must be positive".into()));
        }
        if self.batches < 2 {
            return Err(Error::InvalidInput("Monte Carlo needs at least 2 batches".into()));
        }
        if !self.samples.is_multiple_of(self.batches) {
            return Err(Error::InvalidInput(format!(
                "Monte Carlo samples ({}) must be divisible by batches ({})",
                self.samples, self.batches
            )));
        }
        Ok(())
    }

    pub fn per_batch(&self) -> usize {
        self.samples / self.batches
    }
}

/// A Monte Carlo value (scalar, vector or matrix, stored as a matrix) with
/// entrywise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub value: DMatrix<f64>,
    pub std_err: DMatrix<f64>,
    pub samples_used: usize,
}

impl McEstimate {
    pub fn scalar(&self) -> f64 {
        self.value[(0, 0)]
    }

    pub fn scalar_err(&self) -> f64 {
        self.std_err[(0, 0)]
    }

    pub fn max_std_err(&self) -> f64 {
        self.std_err.amax()
    }

    /// `|value - expected| <= k std_err` entrywise.
    pub fn within(&self, expected: &DMatrix<f64>, k: f64) -> bool {
        self.value
            .iter()
            .zip(expected.iter())
            .zip(self.std_err.iter())
            .all(|((v, e), s)| (v - e).abs() <= k * s)
    }
}

/// Per-batch means of a statistic, in batch order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    pub means: Vec<DMatrix<f64>>,
    pub samples_used: usize,
}

impl BatchMeans {
    pub fn mean(&self) -> DMatrix<f64> {
        let b = self.means.len() as f64;
        let mut acc = DMatrix::zeros(self.means[0].nrows(), self.means[0].ncols());
        for m in &self.means {
            acc += m;
        }
        acc / b
    }

    /// Grand mean with standard error `sd(batch means) / sqrt(batches)`.
    pub fn summarize(&self) -> McEstimate {
        let b = self.means.len() as f64;
        let mean = self.mean();
        let mut var = DMatrix::zeros(mean.nrows(), mean.ncols());
        for m in &self.means {
            let d = m - &mean;
            var += d.component_mul(&d);
        }
        let std_err = (var / (b - 1.0)).map(|v| (v / b).sqrt());
        McEstimate {
            value: mean,
            std_err,
            samples_used: self.samples_used,
        }
    }

    /// Delete-one-batch jackknife for a smooth function of the mean.
    pub fn jackknife<F>(&self, f: F) -> Result<McEstimate>
    where
        F: Fn(&DMatrix<f64>) -> Result<DMatrix<f64>>,
    {
        let b = self.means.len() as f64;
        let mean = self.mean();
        let full = f(&mean)?;
        let leave_out: Vec<DMatrix<f64>> = self
            .means
            .iter()
            .map(|m| f(&((&mean * b - m) / (b - 1.0))))
            .collect::<Result<_>>()?;
        let mut avg = DMatrix::zeros(full.nrows(), full.ncols());
        for v in &leave_out {
            avg += v;
        }
        avg /= b;
        let mut ss = DMatrix::zeros(full.nrows(), full.ncols());
        for v in &leave_out {
            let d = v - &avg;
            ss += d.component_mul(&d);
        }
        let std_err = ss.map(|v| ((b - 1.0) / b * v).sqrt());
        Ok(McEstimate {
            value: full,
            std_err,
            samples_used: self.samples_used,
        })
    }
}

/// Runs `stat` on `cfg.samples` draws from `P_theta`, averaging within each
/// batch. `stat` writes `rows * cols` values (column-major) per sample.
pub fn batch_means<F>(
    model: &dyn Model,
    theta: &ParameterPoint,
    cfg: &McConfig,
    rows: usize,
    cols: usize,
    stat: F,
) -> Result<BatchMeans>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    cfg.validate()?;
    model.check_theta(theta)?;
    let per = cfg.per_batch();
    let sdim = model.sample_dim();
    let means = (0..cfg.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(cfg.seed, b as u64);
            let mut x = vec![0.0; sdim];
            let mut tmp = vec![0.0; rows * cols];
            let mut acc = vec![0.0; rows * cols];
            for _ in 0..per {
                model.draw(theta, &mut rng, &mut x);
                stat(&x, &mut tmp)?;
                for (a, t) in acc.iter_mut().zip(&tmp) {
                    *a += t;
                }
            }
            let m = DMatrix::from_vec(rows, cols, acc) / per as f64;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diagnostics(format!(
                    "non-finite batch mean in batch {b}; the statistic overflows"
                )));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchMeans {
        means,
        samples_used: per * cfg.batches,
    })
}

/// Batch-mean estimate of `E_true[pi(theta1) pi(theta2)]`.
pub fn empirical_moment(
    model: &dyn Model,
    theta1: &ParameterPoint,
    theta2: &ParameterPoint,
    cfg: &McConfig,
) -> Result<McEstimate> {
    model.check_theta(theta1)?;
    model.check_theta(theta2)?;
    let bm = batch_means(model, model.theta_true(), cfg, 1, 1, |x, out| {
        out[0] = (model.log_pi(theta1, x)? + model.log_pi(theta2, x)?).exp();
        Ok(())
    })?;
    Ok(bm.summarize())
}

/// Batch means of `beta beta^T` with `beta_i = pi(tau_i; X)`, `X ~ P_true`.
pub fn empirical_gram(model: &dyn Model, tau: &[ParameterPoint], cfg: &McConfig) -> Result<BatchMeans> {
    for t in tau {
        model.check_theta(t)?;
    }
    let m = tau.len();
    batch_means(model, model.theta_true(), cfg, m, m, |x, out| {
        let beta: Vec<f64> = tau.iter().map(|t| model.pi(t, x)).collect::<Result<_>>()?;
        for j in 0..m {
            for i in 0..m {
                out[j * m + i] = beta[i] * beta[j];
            }
        }
        Ok(())
    })
}

/// Mean of `psi(X) - g(theta)` under `P_theta`.
pub fn empirical_bias(
    est: &dyn Estimator,
    model: &dyn Model,
    theta: &ParameterPoint,
    cfg: &McConfig,
) -> Result<McEstimate> {
    check_dim(est, model)?;
    let g = model.target(theta)?;
    let d = est.dim();
    let bm = batch_means(model, theta, cfg, d, 1, |x, out| {
        est.estimate_into(x, out)?;
        for (o, gi) in out.iter_mut().zip(g.iter()) {
            *o -= gi;
        }
        Ok(())
    })?;
    Ok(bm.summarize())
}

/// `E_true[(psi - g(theta_true)) (psi - g(theta_true))^T]`, centered at the
/// known `g(theta_true)` rather than the sample mean.
pub fn empirical_cov(est: &dyn Estimator, model: &dyn Model, cfg: &McConfig) -> Result<McEstimate> {
    empirical_cov_batches(est, model, cfg).map(|bm| bm.summarize())
}

pub(crate) fn empirical_cov_batches(est: &dyn Estimator, model: &dyn Model, cfg: &McConfig) -> Result<BatchMeans> {
    check_dim(est, model)?;
    let center = model.target(model.theta_true())?;
    let d = est.dim();
    let mut bm = batch_means(model, model.theta_true(), cfg, d, d, |x, out| {
        let mut psi = vec![0.0; d];
        est.estimate_into(x, &mut psi)?;
        for (p, c) in psi.iter_mut().zip(center.iter()) {
            *p -= c;
        }
        for j in 0..d {
            for i in 0..d {
                out[j * d + i] = psi[i] * psi[j];
            }
        }
        Ok(())
    })?;
    for m in bm.means.iter_mut() {
        *m = (&*m + m.transpose()) * 0.5;
    }
    Ok(bm)
}

/// Exact likelihood-ratio Gram matrix from the model's moments.
pub fn exact_gram(model: &dyn Model, tau: &[ParameterPoint]) -> Result<SymMatrix> {
    let m = tau.len();
    let mut b = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = model.moment(&tau[i], &tau[j])?;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    SymMatrix::new(b)
}

/// Gram matrix computed by summing over the enumerated support.
pub fn enumerated_gram(model: &dyn Model, tau: &[ParameterPoint]) -> Result<SymMatrix> {
    let support = model.enumerate_support()?;
    let m = tau.len();
    let mut b = DMatrix::zeros(m, m);
    for (x, p) in &support {
        let beta: Vec<f64> = tau.iter().map(|t| model.pi(t, x)).collect::<Result<_>>()?;
        let beta = DVector::from_vec(beta);
        b += &beta * beta.transpose() * *p;
    }
    SymMatrix::new(b)
}

/// Settings for [`gram_convergence_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct GramLadder {
    pub samples: Vec<usize>,
    pub seed: u64,
    pub batches: usize,
    /// Independent repetitions per rung; the reported distance is their mean.
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramDistance {
    pub samples: usize,
    pub distance: f64,
}

/// Frobenius distance `||B_hat_N - B||_F` at each rung of the ladder.
pub fn gram_convergence_experiment(
    model: &dyn Model,
    tau: &[ParameterPoint],
    ladder: &GramLadder,
) -> Result<Vec<GramDistance>> {
    if ladder.replicates == 0 {
        return Err(Error::InvalidInput("replicates must be positive".into()));
    }
    let exact = exact_gram(model, tau)?;
    ladder
        .samples
        .iter()
        .enumerate()
        .map(|(rung, &n)| {
            let mut sum = 0.0;
            for r in 0..ladder.replicates {
                let seed = ladder.seed.wrapping_add((rung as u64) << 32).wrapping_add(r as u64);
                let cfg = McConfig::new(n, seed, ladder.batches)?;
                let est = empirical_gram(model, tau, &cfg)?.mean();
                sum += (est - exact.matrix()).norm();
            }
            Ok(GramDistance {
                samples: n,
                distance: sum / ladder.replicates as f64,
            })
        })
        .collect()
}

/// Least-squares slope of `ln distance` against `ln samples`.
pub fn log_log_slope(points: &[GramDistance]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.samples as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// All estimators on a finite sample space that are unbiased at every test
/// point: `particular + homogeneous * Z` for arbitrary `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasedFamily {
    pub support: Vec<SupportPoint>,
    /// `s x d_g`, one row per outcome.
    pub particular: DMatrix<f64>,
    /// `s x r` basis of the solutions of the homogeneous system.
    pub homogeneous: DMatrix<f64>,
    center: DVector<f64>,
}

impl UnbiasedFamily {
    pub fn dimension(&self) -> usize {
        self.homogeneous.ncols()
    }

    fn outcomes(&self) -> Vec<Vec<f64>> {
        self.support.iter().map(|(x, _)| x.clone()).collect()
    }

    /// The member `particular + homogeneous * coeffs` (`coeffs` is `r x d_g`).
    pub fn member(&self, coeffs: &DMatrix<f64>) -> Result<TabulatedEstimator> {
        if coeffs.nrows() != self.dimension() || coeffs.ncols() != self.particular.ncols() {
            return Err(Error::DimensionMismatch {
                context: "unbiased family coefficients",
                expected: self.dimension() * self.particular.ncols(),
                got: coeffs.len(),
            });
        }
        TabulatedEstimator::new(self.outcomes(), &self.particular + &self.homogeneous * coeffs)
    }

    /// The member with the Loewner-smallest covariance at the true parameter
    /// (weighted least squares, column by column).
    pub fn min_covariance_member(&self) -> Result<TabulatedEstimator> {
        let r = self.dimension();
        let d = self.particular.ncols();
        if r == 0 {
            return self.member(&DMatrix::zeros(0, d));
        }
        let w = DVector::from_iterator(self.support.len(), self.support.iter().map(|(_, p)| *p));
        let n = &self.homogeneous;
        let dn = DMatrix::from_fn(n.nrows(), n.ncols(), |i, j| w[i] * n[(i, j)]);
        let ntdn = n.transpose() * &dn;
        let mut centered = self.particular.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.center.transpose();
        }
        let rhs = -(dn.transpose() * centered);
        let z = ntdn
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Diagnostics("weighted homogeneous Gram matrix is singular".into()))?;
        self.member(&z)
    }
}

/// Solves `E_theta_i[psi] = g(theta_i)` for all test points over the values
/// `psi(x)` on the finite support. `None` when the system is inconsistent.
pub fn exact_unbiased_polytope(
    model: &dyn Model,
    tau: &[ParameterPoint],
    tol: &Tolerance,
) -> Result<Option<UnbiasedFamily>> {
    let support = model.enumerate_support()?;
    let (m, s, d) = (tau.len(), support.len(), model.target_dim());
    if m == 0 {
        return Err(Error::InvalidInput("test point set must be non-empty".into()));
    }
    // Pad to a square-or-tall system so the SVD returns a full right basis.
    let rows = m.max(s);
    let mut c = DMatrix::zeros(rows, s);
    let mut rhs = DMatrix::zeros(rows, d);
    for (i, t) in tau.iter().enumerate() {
        for (k, (x, p)) in support.iter().enumerate() {
            c[(i, k)] = p * model.pi(t, x)?;
        }
        rhs.set_row(i, &model.target(t)?.transpose());
    }
    let svd = c.clone().svd(true, true);
    let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let sv = &svd.singular_values;
    let cutoff = tol.rank_eps * sv.max();
    let mut particular = DMatrix::zeros(s, d);
    let mut null_cols = Vec::new();
    for k in 0..sv.len() {
        let vk = v_t.row(k).transpose();
        if sv[k] > cutoff {
            let coef = u.column(k).transpose() * &rhs / sv[k];
            particular += &vk * coef;
        } else {
            null_cols.push(vk);
        }
    }
    let residual = (&c * &particular - &rhs).norm();
    if residual > 1e-9 * (1.0 + rhs.norm()) {
        return Ok(None);
    }
    let homogeneous = if null_cols.is_empty() {
        DMatrix::zeros(s, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    Ok(Some(UnbiasedFamily {
        support,
        particular,
        homogeneous,
        center: model.target(model.theta_true())?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{enumerated_cov, enumerated_mean, ConstantEstimator, SampleMean};
    use crate::models::{BernoulliN, BernoulliTarget, GaussianMean, GaussianTarget};
    use std::f64::consts::E;

    fn p(v: f64) -> ParameterPoint {
        ParameterPoint::scalar(v)
    }

    fn gauss(n: usize) -> GaussianMean {
        GaussianMean::new(n, 1.0, 0.0, GaussianTarget::Identity).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(1000, 1, 40).is_ok());
        assert!(McConfig::new(1000, 1, 1).is_err());
        assert!(McConfig::new(1001, 1, 40).is_err());
        assert!(McConfig::new(0, 1, 2).is_err());
    }

    #[test]
    fn moment_at_true_parameter_is_one() {
        let m = gauss(1);
        let cfg = McConfig::new(100_000, 3, 40).unwrap();
        let est = empirical_moment(&m, &p(0.0), &p(0.8), &cfg).unwrap();
        assert!((est.scalar() - 1.0).abs() <= 4.0 * est.scalar_err());
    }

    #[test]
    fn moment_gaussian_matches_closed_form() {
        let m = gauss(1);
        let cfg = McConfig::new(1_000_000, 11, 40).unwrap();
        let est = empirical_moment(&m, &p(1.0), &p(1.0), &cfg).unwrap();
        assert!((est.scalar() - E).abs() <= 4.0 * est.scalar_err(), "{est:?}");
    }

    #[test]
    fn moment_bernoulli_matches_enumeration() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let cfg = McConfig::new(100_000, 5, 40).unwrap();
        let est = empirical_moment(&m, &p(0.75), &p(0.75), &cfg).unwrap();
        assert!((est.scalar() - 1.25).abs() <= 4.0 * est.scalar_err());
    }

    #[test]
    fn batch_results_are_reproducible() {
        let m = gauss(2);
        let cfg = McConfig::new(4_000, 9, 40).unwrap();
        let a = empirical_gram(&m, &[p(0.0), p(0.4)], &cfg).unwrap();
        let b = empirical_gram(&m, &[p(0.0), p(0.4)], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_mean_bias_and_covariance() {
        let m = gauss(5);
        let est = SampleMean::for_model(&m);
        let cfg = McConfig::new(100_000, 21, 40).unwrap();
        let bias = empirical_bias(&est, &m, &p(0.37), &cfg).unwrap();
        assert!(bias.scalar().abs() <= 4.0 * bias.scalar_err());
        let cov = empirical_cov(&est, &m, &cfg).unwrap();
        assert!((cov.scalar() - 0.2).abs() <= 4.0 * cov.scalar_err(), "{cov:?}");
    }

    #[test]
    fn constant_estimator_has_zero_covariance() {
        let m = gauss(1);
        let est = ConstantEstimator::new(DVector::from_element(1, 0.0));
        let cfg = McConfig::new(1_000, 1, 10).unwrap();
        let cov = empirical_cov(&est, &m, &cfg).unwrap();
        assert_eq!(cov.scalar(), 0.0);
        assert_eq!(cov.scalar_err(), 0.0);
    }

    #[test]
    fn estimator_dimension_mismatch() {
        let m = gauss(1);
        let est = ConstantEstimator::new(DVector::from_element(2, 0.0));
        let cfg = McConfig::new(1_000, 1, 10).unwrap();
        assert!(matches!(
            empirical_cov(&est, &m, &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_ladder_decreases() {
        let m = gauss(1);
        let ladder = GramLadder {
            samples: vec![1_000, 10_000, 100_000],
            seed: 2,
            batches: 40,
            replicates: 16,
        };
        let d = gram_convergence_experiment(&m, &[p(0.0), p(1.0)], &ladder).unwrap();
        assert_eq!(d.len(), 3);
        let slope = log_log_slope(&d).unwrap();
        assert!((slope + 0.5).abs() < 0.2, "{slope} {d:?}");
        let single = GramLadder {
            samples: vec![1_000],
            ..ladder
        };
        let one = gram_convergence_experiment(&m, &[p(0.0), p(1.0)], &single).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(log_log_slope(&one), None);
    }

    #[test]
    fn enumerated_gram_is_exact() {
        let m = BernoulliN::new(2, 0.4, BernoulliTarget::Identity).unwrap();
        let tau = [p(0.4), p(0.1), p(0.9)];
        let d = (enumerated_gram(&m, &tau).unwrap().matrix() - exact_gram(&m, &tau).unwrap().matrix()).norm();
        assert!(d < 1e-14);
    }

    #[test]
    fn polytope_unique_identity_solution() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let fam = exact_unbiased_polytope(&m, &[p(0.5), p(0.75)], &Tolerance::default())
            .unwrap()
            .unwrap();
        assert_eq!(fam.dimension(), 0);
        assert!((fam.particular[(0, 0)] - 0.0).abs() < 1e-14);
        assert!((fam.particular[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn polytope_square_target_is_empty() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Square).unwrap();
        let fam = exact_unbiased_polytope(&m, &[p(0.25), p(0.5), p(0.75)], &Tolerance::default()).unwrap();
        assert!(fam.is_none());
    }

    #[test]
    fn polytope_single_true_point() {
        let m = BernoulliN::new(2, 0.5, BernoulliTarget::Identity).unwrap();
        let fam = exact_unbiased_polytope(&m, &[p(0.5)], &Tolerance::default())
            .unwrap()
            .unwrap();
        assert_eq!(fam.dimension(), 3);
        for i in 0..4 {
            assert!((fam.particular[(i, 0)] - 0.5).abs() < 1e-14);
        }
        // the minimum-covariance member is the constant g(theta_true)
        let best = fam.min_covariance_member().unwrap();
        assert!(enumerated_cov(&best, &m).unwrap()[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn polytope_members_are_unbiased_at_test_points() {
        let m = BernoulliN::new(2, 0.3, BernoulliTarget::Identity).unwrap();
        let tau = [p(0.2), p(0.6)];
        let fam = exact_unbiased_polytope(&m, &tau, &Tolerance::default())
            .unwrap()
            .unwrap();
        let z = DMatrix::from_fn(fam.dimension(), 1, |i, _| 0.7 * i as f64 - 0.4);
        let est = fam.member(&z).unwrap();
        for t in &tau {
            let mean = enumerated_mean(&est, &m, t).unwrap();
            assert!((mean[0] - t.value()).abs() < 1e-12);
        }
    }
}
