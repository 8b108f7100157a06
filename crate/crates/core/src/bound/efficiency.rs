use nalgebra::{DMatrix, DVector};

use super::{bound_w, lambda0, MomentMatrices};
use crate::error::{Error, Result};
use crate::estimator::{enumerated_cov, Estimator};
use crate::mc::{empirical_bias, empirical_cov_batches, exact_gram, McConfig};
use crate::models::{Model, MomentMethod, ParameterPoint};
use crate::psd::Tolerance;

/// `psi*(x) = g(theta_true) + Lambda_0 A beta(tau; x)`, the estimator that
/// attains the bound whenever any unbiased estimator does.
#[derive(Debug, Clone)]
pub struct BarankinEstimator<'m> {
    model: &'m dyn Model,
    tau: Vec<ParameterPoint>,
    /// `Lambda_0 A`, `d_g x M`.
    weights: DMatrix<f64>,
    offset: DVector<f64>,
    lambda0: DMatrix<f64>,
}

impl BarankinEstimator<'_> {
    pub fn lambda0(&self) -> &DMatrix<f64> {
        &self.lambda0
    }

    /// `Lambda_0 A`: coefficients on the raw likelihood ratios.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }
}

impl Estimator for BarankinEstimator<'_> {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(self.offset.as_slice());
        for (j, t) in self.tau.iter().enumerate() {
            let col = self.weights.column(j);
            if col.iter().all(|&w| w == 0.0) {
                continue;
            }
            let beta = self.model.pi(t, x)?;
            for (o, w) in out.iter_mut().zip(col.iter()) {
                *o += w * beta;
            }
        }
        Ok(())
    }
}

fn a_or_identity(mm: &MomentMatrices, a: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    a.cloned().unwrap_or_else(|| DMatrix::identity(mm.dim(), mm.dim()))
}

/// Builds `psi*` from `Lambda_0 = G A^T (A B A^T)^-1`. `a = None` means `A = I`.
pub fn construct_estimator<'m>(
    model: &'m dyn Model,
    mm: &MomentMatrices,
    a: Option<&DMatrix<f64>>,
    tol: &Tolerance,
) -> Result<BarankinEstimator<'m>> {
    if mm.target_dim() != model.target_dim() {
        return Err(Error::DimensionMismatch {
            context: "moment matrices vs model target",
            expected: model.target_dim(),
            got: mm.target_dim(),
        });
    }
    let a = a_or_identity(mm, a);
    let l0 = lambda0(mm, &a, tol)?;
    Ok(BarankinEstimator {
        model,
        tau: mm.tau.points().to_vec(),
        weights: &l0 * &a,
        offset: model.target(model.theta_true())?,
        lambda0: l0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyVerdict {
    AttainedOnSpan,
    NotAttained,
    Inconclusive,
}

impl EfficiencyVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AttainedOnSpan => "AttainedOnSpan",
            Self::NotAttained => "NotAttained",
            Self::Inconclusive => "Inconclusive",
        }
    }
}

/// Bias of `psi*` at one probe parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBias {
    pub theta: ParameterPoint,
    pub bias: DVector<f64>,
    /// `None` for exact evaluation.
    pub std_err: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCertificate {
    pub lambda0: DMatrix<f64>,
    /// `trace(E_true[phi* phi*^T] - W)`.
    pub residual_trace: f64,
    pub residual_std_err: Option<f64>,
    pub probes: Vec<ProbeBias>,
    pub verdict: EfficiencyVerdict,
    pub exact: bool,
    pub notes: Vec<String>,
}

/// Monte Carlo decision settings for [`certify_efficiency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifySettings {
    /// Deviations beyond `k_sigma` standard errors are decisive failures.
    pub k_sigma: f64,
    /// A check whose `k_sigma * std_err` exceeds this cannot confirm attainment.
    pub resolution: f64,
}

impl Default for CertifySettings {
    fn default() -> Self {
        Self {
            k_sigma: 4.0,
            resolution: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    Pass,
    Fail,
    Unresolved,
}

/// Checks whether `psi*` attains `W` and is unbiased at the probes.
///
/// With `mc = None` every quantity is exact: the covariance of `psi*` comes
/// from enumerating the support (finite models) or from the model's moments,
/// and `E_theta[psi*] = g(theta_true) + Lambda_0 A m(theta)` with
/// `m_i = E_true[pi(theta) pi(theta_i)]`. With `mc = Some(..)` both are
/// estimated by sampling.
pub fn certify_efficiency(
    model: &dyn Model,
    mm: &MomentMatrices,
    a: Option<&DMatrix<f64>>,
    probes: &[ParameterPoint],
    mc: Option<&McConfig>,
    settings: &CertifySettings,
    tol: &Tolerance,
) -> Result<EfficiencyCertificate> {
    if let Some(cfg) = mc {
        cfg.validate()?;
    }
    for p in probes {
        model.check_theta(p)?;
    }
    let a_mat = a_or_identity(mm, a);
    let w = bound_w(mm, &a_mat, tol)?.w;
    let est = construct_estimator(model, mm, Some(&a_mat), tol)?;
    let mut notes = Vec::new();
    if est.lambda0().amax() <= tol.psd_eps {
        notes.push(
            "Lambda_0 vanishes: the optimal estimator is the constant g(theta_true); \
             constant estimators are unbiased only for constant targets"
                .to_string(),
        );
    }
    let mut checks = Vec::new();
    let certificate = match mc {
        None => {
            if !model.moment_mode().is_exact() {
                return Err(Error::Mode(format!(
                    "model '{}' has no exact moments; supply a Monte Carlo configuration",
                    model.name()
                )));
            }
            let cov = match model.moment_mode() {
                MomentMethod::Enumeration => enumerated_cov(&est, model)?,
                _ => {
                    let b = exact_gram(model, mm.tau.points())?;
                    est.weights() * b.matrix() * est.weights().transpose()
                }
            };
            let residual = (cov - w.matrix()).trace();
            checks.push(exact_check(residual, tol.slack(w.frobenius_norm())));
            let mut biases = Vec::with_capacity(probes.len());
            for theta in probes {
                let m = DVector::from_iterator(
                    mm.dim(),
                    mm.tau
                        .points()
                        .iter()
                        .map(|t| model.moment(theta, t))
                        .collect::<Result<Vec<_>>>()?,
                );
                let bias = est.offset() + est.weights() * m - model.target(theta)?;
                let scale = model.target(theta)?.norm();
                checks.push(exact_check(bias.amax(), tol.slack(scale)));
                biases.push(ProbeBias {
                    theta: theta.clone(),
                    bias,
                    std_err: None,
                });
            }
            EfficiencyCertificate {
                lambda0: est.lambda0().clone(),
                residual_trace: residual,
                residual_std_err: None,
                probes: biases,
                verdict: EfficiencyVerdict::Inconclusive,
                exact: true,
                notes,
            }
        }
        Some(cfg) => {
            let bm = empirical_cov_batches(&est, model, cfg)?;
            let w_trace = w.trace();
            let traces = crate::mc::BatchMeans {
                means: bm
                    .means
                    .iter()
                    .map(|m| DMatrix::from_element(1, 1, m.trace() - w_trace))
                    .collect(),
                samples_used: bm.samples_used,
            }
            .summarize();
            let (residual, residual_se) = (traces.scalar(), traces.scalar_err());
            checks.push(mc_check(residual, residual_se, settings));
            let mut biases = Vec::with_capacity(probes.len());
            for (i, theta) in probes.iter().enumerate() {
                let probe_cfg = McConfig {
                    seed: cfg.seed.wrapping_add(1 + i as u64),
                    ..*cfg
                };
                let b = empirical_bias(&est, model, theta, &probe_cfg)?;
                for k in 0..b.value.nrows() {
                    checks.push(mc_check(b.value[(k, 0)], b.std_err[(k, 0)], settings));
                }
                biases.push(ProbeBias {
                    theta: theta.clone(),
                    bias: b.value.column(0).into_owned(),
                    std_err: Some(b.std_err.column(0).into_owned()),
                });
            }
            EfficiencyCertificate {
                lambda0: est.lambda0().clone(),
                residual_trace: residual,
                residual_std_err: Some(residual_se),
                probes: biases,
                verdict: EfficiencyVerdict::Inconclusive,
                exact: false,
                notes,
            }
        }
    };
    let verdict = if checks.contains(&Check::Fail) {
        EfficiencyVerdict::NotAttained
    } else if probes.is_empty() || checks.contains(&Check::Unresolved) {
        EfficiencyVerdict::Inconclusive
    } else {
        EfficiencyVerdict::AttainedOnSpan
    };
    let mut certificate = EfficiencyCertificate { verdict, ..certificate };
    if probes.is_empty() {
        certificate
            .notes
            .push("no probes: unbiasedness off the test points was not checked".to_string());
    }
    Ok(certificate)
}

fn exact_check(value: f64, slack: f64) -> Check {
    if value.abs() <= slack {
        Check::Pass
    } else {
        Check::Fail
    }
}

fn mc_check(value: f64, se: f64, s: &CertifySettings) -> Check {
    let band = s.k_sigma * se;
    if value.abs() > band + 1e-12 {
        Check::Fail
    } else if band > s.resolution {
        Check::Unresolved
    } else {
        Check::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{compute_b, TestPointSet};
    use crate::estimator::enumerated_mean;
    use crate::models::{BernoulliN, BernoulliTarget, GaussianMean, GaussianTarget};
    use std::f64::consts::E;

    fn mm_for(model: &dyn Model, tau: &[f64]) -> MomentMatrices {
        compute_b(
            model,
            &TestPointSet::scalars(tau).unwrap(),
            model.moment_mode(),
            &McConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn bernoulli_estimator_is_x() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.5, 0.75]);
        let est = construct_estimator(&m, &mm, None, &Tolerance::default()).unwrap();
        assert!(est.estimate(&[0.0]).unwrap()[0].abs() < 1e-14);
        assert!((est.estimate(&[1.0]).unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_estimator_closed_form() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.0, 1.0]);
        let est = construct_estimator(&m, &mm, None, &Tolerance::default()).unwrap();
        for x in [-1.3, 0.0, 0.4, 2.2] {
            let want = ((x - 0.5f64).exp() - 1.0) / (E - 1.0);
            assert!((est.estimate(&[x]).unwrap()[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_true_point_gives_constant() {
        let m = GaussianMean::new(1, 1.0, 0.3, GaussianTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.3]);
        let est = construct_estimator(&m, &mm, None, &Tolerance::default()).unwrap();
        assert_eq!(est.estimate(&[5.0]).unwrap()[0], 0.3);
    }

    #[test]
    fn certify_bernoulli_attained() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.5, 0.75]);
        let probes = [ParameterPoint::scalar(0.3), ParameterPoint::scalar(0.6)];
        let c = certify_efficiency(
            &m,
            &mm,
            None,
            &probes,
            None,
            &CertifySettings::default(),
            &Tolerance::default(),
        )
        .unwrap();
        assert_eq!(c.verdict, EfficiencyVerdict::AttainedOnSpan);
        assert!(c.residual_trace.abs() < 1e-15);
        assert!(c.probes.iter().all(|p| p.bias[0].abs() < 1e-15));
    }

    #[test]
    fn certify_gaussian_not_attained_exact() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.0, 1.0]);
        let c = certify_efficiency(
            &m,
            &mm,
            None,
            &[ParameterPoint::scalar(0.5)],
            None,
            &CertifySettings::default(),
            &Tolerance::default(),
        )
        .unwrap();
        let want = (0.5f64.exp() - 1.0) / (E - 1.0) - 0.5;
        assert!((c.probes[0].bias[0] - want).abs() < 1e-12);
        assert!((c.probes[0].bias[0] + 0.12246).abs() < 1e-5);
        assert_eq!(c.verdict, EfficiencyVerdict::NotAttained);
    }

    #[test]
    fn certify_constant_target_degenerate() {
        let m = GaussianMean::new(
            1,
            1.0,
            0.0,
            GaussianTarget::Affine {
                scale: 0.0,
                offset: 2.0,
            },
        )
        .unwrap();
        let mm = mm_for(&m, &[0.0]);
        let c = certify_efficiency(
            &m,
            &mm,
            None,
            &[ParameterPoint::scalar(0.0)],
            None,
            &CertifySettings::default(),
            &Tolerance::default(),
        )
        .unwrap();
        assert_eq!(c.verdict, EfficiencyVerdict::AttainedOnSpan);
        assert_eq!(c.residual_trace, 0.0);
        assert!(!c.notes.is_empty());
    }

    #[test]
    fn certify_without_probes_is_inconclusive() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let mm = mm_for(&m, &[0.5, 0.75]);
        let c = certify_efficiency(
            &m,
            &mm,
            None,
            &[],
            None,
            &CertifySettings::default(),
            &Tolerance::default(),
        )
        .unwrap();
        assert_eq!(c.verdict, EfficiencyVerdict::Inconclusive);
    }

    #[test]
    fn unbiased_at_test_points_exactly() {
        let m = BernoulliN::new(3, 0.4, BernoulliTarget::Square).unwrap();
        let tau = [0.4, 0.1, 0.7, 0.95];
        let mm = mm_for(&m, &tau);
        let est = construct_estimator(&m, &mm, None, &Tolerance::default()).unwrap();
        for t in tau {
            let th = ParameterPoint::scalar(t);
            let mean = enumerated_mean(&est, &m, &th).unwrap();
            assert!((mean[0] - t * t).abs() < 1e-11, "{t}: {}", mean[0]);
        }
    }
}
