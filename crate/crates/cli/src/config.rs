//! Run configuration, read from TOML.
//!
//! ```toml
//! [model]
//! family = "gaussian_mean"      # gaussian_mean | gaussian_mean_vector | bernoulli | exponential_rate
//! n = 1
//! sigma = 1.0
//! theta_true = 0.0
//! target = "identity"
//!
//! [bound]
//! tau = [0.0, 1.0]
//!
//! [mc]
//! samples = 100000
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use barankin::bound::{GridAxis, SearchConfig};
use barankin::mc::McConfig;
use barankin::models::{
    BernoulliN, BernoulliTarget, ExponentialRate, GaussianMean, GaussianMeanVector, GaussianTarget,
};
use barankin::{Model, ModelSpec, MomentMethod, ParameterPoint, Tolerance};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A scalar or a coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointValue {
    pub fn to_point(&self) -> ParameterPoint {
        match self {
            Self::Scalar(v) => ParameterPoint::scalar(*v),
            Self::Vector(v) => ParameterPoint::new(v.clone()),
        }
    }
}

pub fn points(values: &[PointValue]) -> Vec<ParameterPoint> {
    values.iter().map(PointValue::to_point).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    #[serde(default = "one")]
    pub n: usize,
    pub theta_true: PointValue,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub variances: Option<Vec<f64>>,
    /// Affine target `scale * theta + offset`.
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub offset: Option<f64>,
    /// `[[lo, hi], ...]`, one pair per coordinate.
    #[serde(default)]
    pub domain: Option<Vec<[f64; 2]>>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub tau: Vec<PointValue>,
    /// Row-major reduction matrix.
    #[serde(default)]
    pub a_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    #[serde(default)]
    pub grid: Vec<AxisConfig>,
    #[serde(default)]
    pub candidates: Vec<PointValue>,
    pub local_proposals: Option<usize>,
    pub local_scale: Option<f64>,
    pub budget: Option<usize>,
    pub stall_tol: Option<f64>,
    pub patience: Option<usize>,
    pub divergence_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub method: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_samples() -> usize {
    McConfig::default().samples
}

fn default_batches() -> usize {
    McConfig::default().batches
}

impl Default for McSettings {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            samples: d.samples,
            seed: d.seed,
            batches: d.batches,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_psd_eps")]
    pub psd_eps: f64,
    #[serde(default = "default_rank_eps")]
    pub rank_eps: f64,
}

fn default_psd_eps() -> f64 {
    Tolerance::default().psd_eps
}

fn default_rank_eps() -> f64 {
    Tolerance::default().rank_eps
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerance::default();
        Self {
            psd_eps: t.psd_eps,
            rank_eps: t.rank_eps,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default)]
    pub probes: Vec<PointValue>,
    /// Estimate covariance and biases by sampling even when exact values exist.
    #[serde(default)]
    pub monte_carlo: bool,
    pub resolution: Option<f64>,
    pub k_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrbConfig {
    #[serde(default = "default_crb_eps")]
    pub eps: f64,
}

fn default_crb_eps() -> f64 {
    1e-3
}

impl Default for CrbConfig {
    fn default() -> Self {
        Self { eps: default_crb_eps() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// `sample_mean`, `constructed` or `constant`.
    #[serde(default = "default_estimator")]
    pub estimator: String,
    /// Output of the `constant` estimator.
    #[serde(default)]
    pub value: Option<Vec<f64>>,
    /// A search report whose best test points replace `[bound].tau`.
    #[serde(default)]
    pub search_report: Option<PathBuf>,
    #[serde(default)]
    pub probes: Vec<PointValue>,
}

fn default_estimator() -> String {
    "sample_mean".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report file; relative paths are resolved against the output directory.
    pub path: Option<PathBuf>,
    /// Also write the search trajectory as CSV next to the report.
    #[serde(default)]
    pub trajectory_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub bound: Option<BoundConfig>,
    pub search: Option<SearchSettings>,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub crb: CrbConfig,
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn build_model(&self) -> Result<ModelSpec, CliError> {
        build_model(&self.model)
    }

    pub fn tolerance(&self) -> Result<Tolerance, CliError> {
        Ok(Tolerance::new(self.tolerance.psd_eps, self.tolerance.rank_eps)?)
    }

    pub fn mc(&self) -> Result<McConfig, CliError> {
        Ok(McConfig::new(self.mc.samples, self.mc.seed, self.mc.batches)?)
    }

    /// The configured moment method, or the model's own.
    pub fn method(&self, model: &dyn Model) -> Result<MomentMethod, CliError> {
        match self.moments.method.as_deref() {
            None => Ok(model.moment_mode()),
            Some("closed_form") => Ok(MomentMethod::ClosedForm),
            Some("enumeration") => Ok(MomentMethod::Enumeration),
            Some("monte_carlo") => Ok(MomentMethod::MonteCarlo),
            Some(other) => Err(CliError::Config(format!(
                "unknown moment method '{other}' (expected closed_form, enumeration or monte_carlo)"
            ))),
        }
    }

    pub fn tau(&self) -> Result<Vec<ParameterPoint>, CliError> {
        let bound = self
            .bound
            .as_ref()
            .ok_or_else(|| CliError::Config("[bound] with tau is required".into()))?;
        if bound.tau.is_empty() {
            return Err(CliError::Config("[bound].tau must not be empty".into()));
        }
        Ok(points(&bound.tau))
    }

    pub fn a_matrix(&self) -> Result<Option<DMatrix<f64>>, CliError> {
        let Some(rows) = self.bound.as_ref().and_then(|b| b.a_matrix.as_ref()) else {
            return Ok(None);
        };
        matrix_from_rows(rows).map(Some)
    }

    /// Explicit test points and search settings are mutually exclusive.
    pub fn require_tau_only(&self) -> Result<(), CliError> {
        if self.search.is_some() {
            return Err(CliError::Config(
                "[search] must not be combined with explicit [bound].tau for this command".into(),
            ));
        }
        self.tau().map(|_| ())
    }

    pub fn search_config(&self, model: &dyn Model) -> Result<SearchConfig, CliError> {
        let s = self
            .search
            .as_ref()
            .ok_or_else(|| CliError::Config("[search] settings are required".into()))?;
        if self.bound.is_some() {
            return Err(CliError::Config(
                "[bound].tau must not be combined with [search]".into(),
            ));
        }
        let d = SearchConfig::default();
        Ok(SearchConfig {
            grid: s
                .grid
                .iter()
                .map(|a| GridAxis {
                    lower: a.lower,
                    upper: a.upper,
                    points: a.points,
                })
                .collect(),
            candidates: points(&s.candidates),
            local_proposals: s.local_proposals.unwrap_or(d.local_proposals),
            local_scale: s.local_scale.unwrap_or(d.local_scale),
            budget: s.budget.unwrap_or(d.budget),
            stall_tol: s.stall_tol.unwrap_or(d.stall_tol),
            patience: s.patience.unwrap_or(d.patience),
            divergence_threshold: s.divergence_threshold,
            method: Some(self.method(model)?),
            mc: self.mc()?,
            seed: self.mc.seed,
            tol: self.tolerance()?,
            parallel: true,
        })
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(CliError::Config(
            "matrix must be a non-empty rectangular array of rows".into(),
        ));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn scalar_theta(m: &ModelConfig) -> Result<f64, CliError> {
    match &m.theta_true {
        PointValue::Scalar(v) => Ok(*v),
        PointValue::Vector(v) if v.len() == 1 => Ok(v[0]),
        PointValue::Vector(_) => Err(CliError::Config(format!(
            "family '{}' has a scalar parameter",
            m.family
        ))),
    }
}

fn scalar_domain(m: &ModelConfig) -> Result<Option<(f64, f64)>, CliError> {
    match m.domain.as_deref() {
        None => Ok(None),
        Some([[lo, hi]]) => Ok(Some((*lo, *hi))),
        Some(_) => Err(CliError::Config("scalar families take exactly one domain pair".into())),
    }
}

fn reject(m: &ModelConfig, field: &str, present: bool) -> Result<(), CliError> {
    if present {
        return Err(CliError::Config(format!(
            "field '{field}' does not apply to family '{}'",
            m.family
        )));
    }
    Ok(())
}

pub fn build_model(m: &ModelConfig) -> Result<ModelSpec, CliError> {
    let target = m.target.as_deref().unwrap_or("identity");
    match m.family.as_str() {
        "gaussian_mean" => {
            reject(m, "variances", m.variances.is_some())?;
            let target = match target {
                "identity" => {
                    reject(m, "scale", m.scale.is_some())?;
                    reject(m, "offset", m.offset.is_some())?;
                    GaussianTarget::Identity
                }
                "affine" => GaussianTarget::Affine {
                    scale: m.scale.unwrap_or(1.0),
                    offset: m.offset.unwrap_or(0.0),
                },
                other => return Err(unknown_target(m, other)),
            };
            let mut model = GaussianMean::new(m.n, m.sigma.unwrap_or(1.0), scalar_theta(m)?, target)?;
            if let Some((lo, hi)) = scalar_domain(m)? {
                model = model.with_domain(lo, hi)?;
            }
            Ok(ModelSpec::GaussianMean(model))
        }
        "gaussian_mean_vector" => {
            reject(m, "sigma", m.sigma.is_some())?;
            reject(m, "scale", m.scale.is_some())?;
            reject(m, "offset", m.offset.is_some())?;
            if target != "identity" {
                return Err(unknown_target(m, target));
            }
            let theta = match &m.theta_true {
                PointValue::Scalar(v) => vec![*v],
                PointValue::Vector(v) => v.clone(),
            };
            let variances = m
                .variances
                .clone()
                .ok_or_else(|| CliError::Config("gaussian_mean_vector requires 'variances'".into()))?;
            let mut model = GaussianMeanVector::new(m.n, variances, theta)?;
            if let Some(d) = &m.domain {
                model = model.with_domain(d.iter().map(|[lo, hi]| (*lo, *hi)).collect())?;
            }
            Ok(ModelSpec::GaussianMeanVector(model))
        }
        "bernoulli" => {
            for (f, present) in [
                ("sigma", m.sigma.is_some()),
                ("variances", m.variances.is_some()),
                ("scale", m.scale.is_some()),
                ("offset", m.offset.is_some()),
            ] {
                reject(m, f, present)?;
            }
            let target = match target {
                "identity" => BernoulliTarget::Identity,
                "odds" => BernoulliTarget::Odds,
                "square" => BernoulliTarget::Square,
                other => return Err(unknown_target(m, other)),
            };
            let mut model = BernoulliN::new(m.n, scalar_theta(m)?, target)?;
            if let Some((lo, hi)) = scalar_domain(m)? {
                model = model.with_domain(lo, hi)?;
            }
            Ok(ModelSpec::Bernoulli(model))
        }
        "exponential_rate" => {
            for (f, present) in [
                ("sigma", m.sigma.is_some()),
                ("variances", m.variances.is_some()),
                ("scale", m.scale.is_some()),
                ("offset", m.offset.is_some()),
            ] {
                reject(m, f, present)?;
            }
            if target != "identity" {
                return Err(unknown_target(m, target));
            }
            let mut model = ExponentialRate::new(m.n, scalar_theta(m)?)?;
            if let Some((lo, hi)) = scalar_domain(m)? {
                model = model.with_domain(lo, hi)?;
            }
            Ok(ModelSpec::ExponentialRate(model))
        }
        other => Err(CliError::Config(format!(
            "unknown model family '{other}' (expected gaussian_mean, gaussian_mean_vector, bernoulli or exponential_rate)"
        ))),
    }
}

fn unknown_target(m: &ModelConfig, target: &str) -> CliError {
    CliError::Config(format!("unknown target '{target}' for family '{}'", m.family))
}
