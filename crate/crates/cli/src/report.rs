//! Report data model. Reals are written as decimal strings with 17
//! significant digits so they round-trip exactly.

use barankin::bound::SearchReport;
use barankin::{ParameterPoint, SymMatrix};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    s.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixOut {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub data: Vec<String>,
}

impl MatrixOut {
    pub fn new(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| num(m[(i, j)]))
                .collect(),
        }
    }

    pub fn sym(s: &SymMatrix) -> Self {
        Self::new(s.matrix())
    }

    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        let vals: Option<Vec<f64>> = self.data.iter().map(|s| parse_num(s)).collect();
        Some(DMatrix::from_row_slice(self.rows, self.cols, &vals?))
    }
}

pub fn vector(v: &DVector<f64>) -> Vec<String> {
    v.iter().copied().map(num).collect()
}

pub fn point(p: &ParameterPoint) -> Vec<String> {
    p.coords().iter().copied().map(num).collect()
}

pub fn points(ps: &[ParameterPoint]) -> Vec<Vec<String>> {
    ps.iter().map(point).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelOut {
    pub name: String,
    pub theta_true: Vec<String>,
    pub target_dim: usize,
    pub moment_method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityOut {
    pub compatible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    /// `sum_i a_i h(theta_i)` for the witness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_increment: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundOut {
    pub tau: Vec<Vec<String>>,
    pub kept: Vec<usize>,
    pub g: MatrixOut,
    pub b: MatrixOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_std_err: Option<MatrixOut>,
    pub v: MatrixOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_std_err: Option<MatrixOut>,
    pub v_condition_number: String,
    pub v_trace: String,
    pub v_lambda_max: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<MatrixOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<MatrixOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_condition_number: Option<String>,
    pub compatibility: CompatibilityOut,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationOut {
    pub iteration: usize,
    pub trace: String,
    pub lambda_max: String,
    pub added: Option<Vec<String>>,
    pub tau_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrunedOut {
    pub point: Vec<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOut {
    pub boundedness: String,
    pub stop: String,
    pub k_witness: String,
    pub divergence_threshold: String,
    pub best_tau: Vec<Vec<String>>,
    pub best_w: MatrixOut,
    pub best_trace: String,
    pub best_condition_number: String,
    pub iterations: Vec<IterationOut>,
    pub pruned: Vec<PrunedOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incompatibility: Option<IncompatibilityOut>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncompatibilityOut {
    pub tau: Vec<Vec<String>>,
    pub coefficients: Vec<String>,
}

impl SearchOut {
    pub fn new(r: &SearchReport) -> Self {
        Self {
            boundedness: r.boundedness.as_str().into(),
            stop: r.stop.as_str().into(),
            k_witness: num(r.k_witness),
            divergence_threshold: num(r.divergence_threshold),
            best_tau: points(r.best.spec.tau.points()),
            best_w: MatrixOut::sym(&r.best.w),
            best_trace: num(r.best.trace()),
            best_condition_number: num(r.best.condition_number),
            iterations: r
                .iterations
                .iter()
                .enumerate()
                .map(|(i, it)| IterationOut {
                    iteration: i,
                    trace: num(it.trace),
                    lambda_max: num(it.lambda_max),
                    added: it.added.as_ref().map(point),
                    tau_size: it.tau.len(),
                })
                .collect(),
            pruned: r
                .pruned
                .iter()
                .map(|p| PrunedOut {
                    point: point(&p.point),
                    reason: p.reason.clone(),
                })
                .collect(),
            incompatibility: r.incompatibility.as_ref().map(|w| IncompatibilityOut {
                tau: points(w.tau.points()),
                coefficients: vector(&w.coefficients),
            }),
            notes: r.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeOut {
    pub theta: Vec<String>,
    pub bias: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateOut {
    pub verdict: String,
    pub exact: bool,
    pub lambda0: MatrixOut,
    pub residual_trace: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_std_err: Option<String>,
    pub probes: Vec<ProbeOut>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrbOut {
    pub eps: String,
    pub crb: MatrixOut,
    pub crb_trace: String,
    /// `loewner_compare(best known bound, CRB limit)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOut {
    pub estimator: String,
    pub exact: bool,
    pub covariance: MatrixOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance_std_err: Option<MatrixOut>,
    pub bound: MatrixOut,
    pub min_eigenvalue_gap: String,
    /// Allowed negative slack on the smallest eigenvalue of `cov - W`.
    pub dominance_slack: String,
    pub dominance_holds: bool,
    pub loewner_order: String,
    pub max_abs_difference: String,
    pub biases: Vec<ProbeOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub model: ModelOut,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crb: Option<CrbOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyOut>,
    pub warnings: Vec<String>,
    pub elapsed_seconds: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Replaces every JSON number with its decimal-string form.
pub fn stringify_numbers(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) => Value::String(match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(i)) => i.to_string(),
            _ => num(n.as_f64().unwrap_or(f64::NAN)),
        }),
        Value::Array(a) => Value::Array(a.into_iter().map(stringify_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, stringify_numbers(v))).collect()),
        other => other,
    }
}
