use std::path::{Path, PathBuf};
use std::time::Instant;

use barankin::bound::{
    b0_compatibility_check, bound_v, bound_w, certify_efficiency, compute_b, construct_estimator, crb_limit,
    deflate_dependent, search_msup, CertifySettings, MomentMatrices, SearchReport, TestPointSet,
};
use barankin::estimator::{enumerated_cov, enumerated_mean, ConstantEstimator, Estimator, SampleMean};
use barankin::mc::{empirical_bias, empirical_cov};
use barankin::psd::{lambda_max, loewner_compare};
use barankin::{Model, ModelSpec, MomentMethod, ParameterPoint, SymMatrix, Tolerance};
use nalgebra::DVector;

use crate::config::{points, RunConfig};
use crate::report::{
    num, point, vector, BoundOut, CertificateOut, CompatibilityOut, CrbOut, MatrixOut, ModelOut, ProbeOut, Report,
    SearchOut, VerifyOut,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bound,
    Search,
    Certify,
    Crb,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bound => "bound",
            Self::Search => "search",
            Self::Certify => "certify",
            Self::Crb => "crb",
            Self::Verify => "verify",
        }
    }
}

/// A finished command: the report plus, for searches, the raw search result.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub search: Option<SearchReport>,
}

/// Runs `cmd` on an already loaded configuration. `base_dir` resolves
/// relative paths inside the configuration.
pub fn execute(cmd: Command, cfg: &RunConfig, base_dir: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let model = cfg.build_model()?;
    let tol = cfg.tolerance()?;
    let method = cfg.method(&model)?;
    let mut report = Report {
        tool: "barankin",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.as_str().into(),
        model: ModelOut {
            name: model.name().into(),
            theta_true: point(model.theta_true()),
            target_dim: model.target_dim(),
            moment_method: method.as_str().into(),
        },
        config: crate::report::stringify_numbers(serde_json::to_value(cfg).expect("config serializes")),
        bound: None,
        search: None,
        certificate: None,
        crb: None,
        verify: None,
        warnings: Vec::new(),
        elapsed_seconds: String::new(),
    };
    let mut search = None;
    match cmd {
        Command::Bound => {
            cfg.require_tau_only()?;
            let tau = TestPointSet::new(cfg.tau()?)?;
            report.bound = Some(bound_section(&model, cfg, &tau, method, &tol, &mut report.warnings)?.0);
        }
        Command::Search => {
            let sc = cfg.search_config(&model)?;
            let r = search_msup(&model, &sc)?;
            report.search = Some(SearchOut::new(&r));
            search = Some(r);
        }
        Command::Certify => {
            cfg.require_tau_only()?;
            let tau = TestPointSet::new(cfg.tau()?)?;
            let (section, mm) = bound_section(&model, cfg, &tau, method, &tol, &mut report.warnings)?;
            report.bound = Some(section);
            let use_mc = cfg.certify.monte_carlo || method == MomentMethod::MonteCarlo;
            let mc = cfg.mc()?;
            let defaults = CertifySettings::default();
            let settings = CertifySettings {
                k_sigma: cfg.certify.k_sigma.unwrap_or(defaults.k_sigma),
                resolution: cfg.certify.resolution.unwrap_or(defaults.resolution),
            };
            let a = cfg.a_matrix()?;
            let c = certify_efficiency(
                &model,
                &mm,
                a.as_ref(),
                &points(&cfg.certify.probes),
                use_mc.then_some(&mc),
                &settings,
                &tol,
            )?;
            report.certificate = Some(CertificateOut {
                verdict: c.verdict.as_str().into(),
                exact: c.exact,
                lambda0: MatrixOut::new(&c.lambda0),
                residual_trace: num(c.residual_trace),
                residual_std_err: c.residual_std_err.map(num),
                probes: c
                    .probes
                    .iter()
                    .map(|p| ProbeOut {
                        theta: point(&p.theta),
                        bias: vector(&p.bias),
                        std_err: p.std_err.as_ref().map(vector),
                    })
                    .collect(),
                notes: c.notes.clone(),
            });
        }
        Command::Crb => {
            let eps = cfg.crb.eps;
            let crb = crb_limit(&model, eps, method, &cfg.mc()?, &tol)?;
            let comparison = match &cfg.bound {
                Some(_) => {
                    let tau = TestPointSet::new(cfg.tau()?)?;
                    let (section, _) = bound_section(&model, cfg, &tau, method, &tol, &mut report.warnings)?;
                    let best = section_bound(&section);
                    report.bound = Some(section);
                    Some(loewner_compare(&best, &crb, &tol)?.order.to_string())
                }
                None => None,
            };
            report.crb = Some(CrbOut {
                eps: num(eps),
                crb: MatrixOut::sym(&crb),
                crb_trace: num(crb.trace()),
                comparison,
            });
        }
        Command::Verify => {
            report.verify = Some(verify(&model, cfg, base_dir, method, &tol, &mut report)?);
        }
    }
    report.elapsed_seconds = num(start.elapsed().as_secs_f64());
    Ok(Outcome { report, search })
}

/// The bound carried by a section: `W` when an `A` matrix was given, else `V`.
fn section_bound(section: &BoundOut) -> SymMatrix {
    let m = section.w.as_ref().unwrap_or(&section.v);
    SymMatrix::new(m.to_matrix().expect("report matrix parses")).expect("report matrix is symmetric")
}

/// Computes `G`, `B`, deflation, `V`, optional `W` and the compatibility
/// verdict. Returns the matrices the bound was taken on: the full set when an
/// `A` matrix is given, the deflated set otherwise.
fn bound_section(
    model: &ModelSpec,
    cfg: &RunConfig,
    tau: &TestPointSet,
    method: MomentMethod,
    tol: &Tolerance,
    warnings: &mut Vec<String>,
) -> Result<(BoundOut, MomentMatrices), CliError> {
    let full = compute_b(model, tau, method, &cfg.mc()?)?;
    let compat = b0_compatibility_check(&full, tol);
    let (kept, mm) = deflate_dependent(&full, tol)?;
    if kept.len() < full.dim() {
        let dropped: Vec<usize> = (0..full.dim()).filter(|i| !kept.contains(i)).collect();
        warnings.push(format!(
            "dependent test points removed by deflation: indices {dropped:?}"
        ));
    }
    let v = bound_v(&mm, tol)?;
    let v_std_err = match &mm.mc_batches {
        Some(bm) => {
            let jk = bm.jackknife(|b| {
                let mut tmp = mm.clone();
                tmp.b = SymMatrix::new(b.clone())?;
                tmp.mc_batches = None;
                Ok(bound_v(&tmp, tol)?.w.into_inner())
            })?;
            Some(MatrixOut::new(&jk.std_err))
        }
        None => None,
    };
    if v.w.frobenius_norm() == 0.0 {
        warnings.push("degenerate test set: V = 0".into());
    }
    let a = cfg.a_matrix()?;
    let (w, w_cond, bound_mm) = match &a {
        Some(a) => {
            let w = bound_w(&full, a, tol)?;
            (Some(MatrixOut::sym(&w.w)), Some(num(w.condition_number)), full.clone())
        }
        None => (None, None, mm.clone()),
    };
    let witness_increment = compat.witness.as_ref().map(|a| vector(&(&full.g * a)));
    let out = BoundOut {
        tau: crate::report::points(tau.points()),
        kept,
        g: MatrixOut::new(&mm.g),
        b: MatrixOut::sym(&mm.b),
        b_std_err: mm.mc_std_err.as_ref().map(MatrixOut::new),
        v: MatrixOut::sym(&v.w),
        v_std_err,
        v_condition_number: num(v.condition_number),
        v_trace: num(v.trace()),
        v_lambda_max: num(lambda_max(&v.w)),
        a_matrix: a.as_ref().map(MatrixOut::new),
        w,
        w_condition_number: w_cond,
        compatibility: CompatibilityOut {
            compatible: compat.compatible,
            witness: compat.witness.as_ref().map(vector),
            witness_increment,
        },
    };
    Ok((out, bound_mm))
}

fn tau_from_search_report(path: &Path) -> Result<Vec<ParameterPoint>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read search report {}: {e}", path.display())))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("search report: {e}")))?;
    let bad = || CliError::Config(format!("{} has no search.best_tau", path.display()));
    let tau = v["search"]["best_tau"].as_array().ok_or_else(bad)?;
    tau.iter()
        .map(|p| {
            let coords: Option<Vec<f64>> = p
                .as_array()?
                .iter()
                .map(|c| c.as_str().and_then(crate::report::parse_num))
                .collect();
            coords.map(ParameterPoint::new)
        })
        .collect::<Option<Vec<_>>>()
        .ok_or_else(bad)
}

fn verify(
    model: &ModelSpec,
    cfg: &RunConfig,
    base_dir: &Path,
    method: MomentMethod,
    tol: &Tolerance,
    report: &mut Report,
) -> Result<VerifyOut, CliError> {
    let vc = cfg
        .verify
        .clone()
        .ok_or_else(|| CliError::Config("[verify] settings are required".into()))?;
    let tau = match &vc.search_report {
        Some(p) => {
            let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
            tau_from_search_report(&path)?
        }
        None => cfg.tau()?,
    };
    let tau = TestPointSet::new(tau)?;
    let (section, mm) = bound_section(model, cfg, &tau, method, tol, &mut report.warnings)?;
    let w = section_bound(&section);
    report.bound = Some(section);

    let a = cfg.a_matrix()?;
    let est: Box<dyn Estimator + '_> = match vc.estimator.as_str() {
        "sample_mean" => Box::new(SampleMean::for_model(model)),
        "constructed" => Box::new(construct_estimator(model, &mm, a.as_ref(), tol)?),
        "constant" => {
            let v = vc
                .value
                .clone()
                .ok_or_else(|| CliError::Config("constant estimator requires [verify].value".into()))?;
            Box::new(ConstantEstimator::new(DVector::from_vec(v)))
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown estimator '{other}' (expected sample_mean, constructed or constant)"
            )))
        }
    };
    let probes = if vc.probes.is_empty() {
        vec![model.theta_true().clone()]
    } else {
        points(&vc.probes)
    };
    let exact = model.moment_mode() == MomentMethod::Enumeration;
    let d = model.target_dim();
    let (cov, cov_se, slack) = if exact {
        let cov = enumerated_cov(est.as_ref(), model)?;
        let scale = cov.norm().max(w.frobenius_norm());
        (cov, None, tol.slack(scale))
    } else {
        let e = empirical_cov(est.as_ref(), model, &cfg.mc()?)?;
        let slack = 3.0 * e.max_std_err() * d as f64;
        (e.value, Some(e.std_err), slack)
    };
    let cov_sym = SymMatrix::new(cov.clone())?;
    let gap = cov_sym.sub(&w)?;
    let min_gap = gap.min_eigenvalue();
    let order = loewner_compare(&cov_sym, &w, tol)?.order;
    let mut biases = Vec::with_capacity(probes.len());
    for (i, theta) in probes.iter().enumerate() {
        let g = model.target(theta)?;
        let probe = if exact {
            ProbeOut {
                theta: point(theta),
                bias: vector(&(enumerated_mean(est.as_ref(), model, theta)? - g)),
                std_err: None,
            }
        } else {
            let mut mc = cfg.mc()?;
            mc.seed = mc.seed.wrapping_add(1 + i as u64);
            let b = empirical_bias(est.as_ref(), model, theta, &mc)?;
            ProbeOut {
                theta: point(theta),
                bias: vector(&b.value.column(0).into_owned()),
                std_err: Some(vector(&b.std_err.column(0).into_owned())),
            }
        };
        biases.push(probe);
    }
    Ok(VerifyOut {
        estimator: vc.estimator.clone(),
        exact,
        covariance: MatrixOut::new(&cov),
        covariance_std_err: cov_se.as_ref().map(MatrixOut::new),
        bound: MatrixOut::sym(&w),
        min_eigenvalue_gap: num(min_gap),
        dominance_slack: num(slack),
        dominance_holds: min_gap >= -slack,
        loewner_order: order.to_string(),
        max_abs_difference: num(gap.matrix().amax()),
        biases,
    })
}

/// Default directory for reports: `$BARANKIN_OUT_DIR`, else `barankin-out`.
pub fn output_dir() -> PathBuf {
    std::env::var_os(crate::OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("barankin-out"))
}

/// `--out`, else `[output].path` (relative to the output directory), else
/// `<output dir>/<command>_report.json`.
pub fn report_path(cmd: Command, cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    let dir = output_dir();
    match &cfg.output.path {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => dir.join(p),
        None => dir.join(format!("{}_report.json", cmd.as_str())),
    }
}

/// Trajectory CSV: `iteration, trace, lambda_max, new_point_0..`.
pub fn write_trajectory(path: &Path, r: &SearchReport, dim: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    let mut header = vec!["iteration".to_string(), "trace".into(), "lambda_max".into()];
    header.extend((0..dim).map(|j| format!("new_point_{j}")));
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for (i, it) in r.iterations.iter().enumerate() {
        let mut row = vec![i.to_string(), num(it.trace), num(it.lambda_max)];
        match &it.added {
            Some(p) => row.extend(p.coords().iter().copied().map(num)),
            None => row.extend(std::iter::repeat_n(String::new(), dim)),
        }
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
