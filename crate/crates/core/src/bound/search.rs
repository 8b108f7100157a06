use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{
    b0_compatibility_check, bound_v, compute_b, crb_limit, deflate_dependent, BoundMatrix, MomentMatrices, TestPointSet,
};
use crate::error::{Error, Result};
use crate::mc::McConfig;
use crate::models::{stream_rng, Model, MomentMethod, ParameterPoint};
use crate::psd::{lambda_max, SymMatrix, Tolerance};

/// `points` evenly spaced values on `[lower, upper]` (one value: the midpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![0.5 * (self.lower + self.upper)],
            k => (0..k)
                .map(|i| self.lower + (self.upper - self.lower) * i as f64 / (k - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// One axis per parameter coordinate; candidates are the Cartesian product.
    pub grid: Vec<GridAxis>,
    /// Extra fixed candidates.
    pub candidates: Vec<ParameterPoint>,
    /// Gaussian perturbations of current test points drawn each round.
    pub local_proposals: usize,
    /// Proposal standard deviation as a fraction of each domain side.
    pub local_scale: f64,
    /// Maximum number of rounds.
    pub budget: usize,
    pub stall_tol: f64,
    pub patience: usize,
    /// `None` means `1e3 * trace(crb_limit(eps = 1e-3))`.
    pub divergence_threshold: Option<f64>,
    /// `None` means the model's own moment method.
    pub method: Option<MomentMethod>,
    pub mc: McConfig,
    pub seed: u64,
    pub tol: Tolerance,
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            candidates: Vec::new(),
            local_proposals: 16,
            local_scale: 0.05,
            budget: 50,
            stall_tol: 1e-4,
            patience: 3,
            divergence_threshold: None,
            method: None,
            mc: McConfig::default(),
            seed: 0,
            tol: Tolerance::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchIteration {
    pub tau: TestPointSet,
    pub trace: f64,
    pub lambda_max: f64,
    /// Point accepted this round; `None` for the starting set and for rounds
    /// without improvement.
    pub added: Option<ParameterPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    BoundedEvidence,
    DivergenceDetected,
}

impl Boundedness {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BoundedEvidence => "BoundedEvidence",
            Self::DivergenceDetected => "DivergenceDetected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    Stalled,
    Divergence,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Budget => "budget",
            Self::Stalled => "stalled",
            Self::Divergence => "divergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrunedCandidate {
    pub point: ParameterPoint,
    pub reason: String,
}

/// Test points whose likelihood ratios combine to zero while the target
/// increments do not: no unbiased estimator exists.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompatibilityWitness {
    pub tau: TestPointSet,
    pub coefficients: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub iterations: Vec<SearchIteration>,
    pub best: BoundMatrix,
    pub boundedness: Boundedness,
    pub stop: StopReason,
    /// Largest `lambda_max` over visited bounds; `K I` dominates all of them.
    pub k_witness: f64,
    pub divergence_threshold: f64,
    pub pruned: Vec<PrunedCandidate>,
    pub incompatibility: Option<IncompatibilityWitness>,
    pub notes: Vec<String>,
}

enum Outcome {
    Scored { trace: f64, mm: MomentMatrices },
    Dependent(MomentMatrices),
    Pruned(String),
}

fn grid_points(axes: &[GridAxis], dim: usize) -> Result<Vec<ParameterPoint>> {
    if axes.is_empty() {
        return Ok(Vec::new());
    }
    if axes.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "search grid axes vs parameter dimension",
            expected: dim,
            got: axes.len(),
        });
    }
    for ax in axes {
        if !(ax.lower.is_finite() && ax.upper.is_finite() && ax.lower <= ax.upper) {
            return Err(Error::InvalidInput(format!(
                "grid axis [{}, {}] is not a finite interval",
                ax.lower, ax.upper
            )));
        }
    }
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for ax in axes {
        let vals = ax.values();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(ParameterPoint::new).collect())
}

fn extend(model: &dyn Model, cur: &MomentMatrices, c: &ParameterPoint, mc: &McConfig) -> Result<MomentMatrices> {
    model.check_theta(c)?;
    let tau = cur.tau.with_point(c.clone());
    if !cur.method.is_exact() {
        return compute_b(model, &tau, cur.method, mc);
    }
    let m = cur.dim();
    let mut row = Vec::with_capacity(m + 1);
    for t in cur.tau.points() {
        row.push(model.moment(c, t)?);
    }
    row.push(model.moment(c, c)?);
    let b = DMatrix::from_fn(m + 1, m + 1, |i, j| match (i == m, j == m) {
        (false, false) => cur.b.get(i, j),
        (true, _) => row[j],
        (false, true) => row[i],
    });
    let mut g = cur.g.clone().insert_column(m, 0.0);
    g.set_column(m, &model.target_increment(c)?);
    Ok(MomentMatrices {
        tau,
        g,
        b: SymMatrix::new(b)?,
        method: cur.method,
        mc_std_err: None,
        mc_batches: None,
    })
}

fn score(model: &dyn Model, cur: &MomentMatrices, c: &ParameterPoint, cfg: &SearchConfig) -> Result<Outcome> {
    let full = match extend(model, cur, c, &cfg.mc) {
        Ok(mm) => mm,
        Err(e @ (Error::PostulateViolation { .. } | Error::Domain { .. } | Error::Diagnostics(_))) => {
            return Ok(Outcome::Pruned(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let (kept, reduced) = deflate_dependent(&full, &cfg.tol)?;
    if kept.len() < full.dim() {
        return Ok(Outcome::Dependent(full));
    }
    match bound_v(&reduced, &cfg.tol) {
        Ok(v) => Ok(Outcome::Scored {
            trace: v.trace(),
            mm: reduced,
        }),
        Err(Error::RankDeficient { .. }) => Ok(Outcome::Dependent(full)),
        Err(e) => Err(e),
    }
}

fn default_threshold(model: &dyn Model, cfg: &SearchConfig, method: MomentMethod, notes: &mut Vec<String>) -> f64 {
    match crb_limit(model, 1e-3, method, &cfg.mc, &cfg.tol) {
        Ok(crb) if crb.trace() > 0.0 && crb.trace().is_finite() => 1e3 * crb.trace(),
        Ok(_) => {
            notes.push("Cramer-Rao limit has zero trace; divergence detection disabled".into());
            f64::INFINITY
        }
        Err(e) => {
            notes.push(format!(
                "Cramer-Rao limit unavailable ({e}); divergence detection disabled"
            ));
            f64::INFINITY
        }
    }
}

/// Greedy approximation of the matrix-supreme bound.
///
/// Starts from `tau = (theta_true)` and each round adds the candidate (grid,
/// fixed candidates, local proposals) that maximizes `trace(V)` after
/// deflation. Candidates are scored independently and reduced in index
/// order, so serial and parallel runs give identical reports.
pub fn search_msup(model: &dyn Model, cfg: &SearchConfig) -> Result<SearchReport> {
    let method = cfg.method.unwrap_or(model.moment_mode());
    if cfg.stall_tol.is_nan() || cfg.stall_tol < 0.0 || !cfg.local_scale.is_finite() || cfg.local_scale < 0.0 {
        return Err(Error::InvalidInput(
            "stall_tol and local_scale must be non-negative".into(),
        ));
    }
    if cfg.patience == 0 {
        return Err(Error::InvalidInput("patience must be at least 1".into()));
    }
    if !method.is_exact() {
        cfg.mc.validate()?;
    }
    let dim = model.theta_true().dim();
    let mut fixed = grid_points(&cfg.grid, dim)?;
    for c in &cfg.candidates {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "search candidate vs parameter dimension",
                expected: dim,
                got: c.dim(),
            });
        }
        fixed.push(c.clone());
    }

    let mut notes = Vec::new();
    let threshold = match cfg.divergence_threshold {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            return Err(Error::InvalidInput(format!(
                "divergence threshold must be positive, got {t}"
            )))
        }
        None => default_threshold(model, cfg, method, &mut notes),
    };

    let start = TestPointSet::new(vec![model.theta_true().clone()])?;
    let mut cur = compute_b(model, &start, method, &cfg.mc)?;
    let mut best = bound_v(&cur, &cfg.tol)?;
    let mut trace = best.trace();
    let mut lmax = lambda_max(&best.w);
    let mut k_witness = lmax;
    let mut iterations = vec![SearchIteration {
        tau: cur.tau.clone(),
        trace,
        lambda_max: lmax,
        added: None,
    }];
    let mut pruned: Vec<PrunedCandidate> = Vec::new();
    let mut incompatibility = None;
    let mut stall = 0usize;
    let mut stop = StopReason::Budget;

    let bounds = model.domain().bounds().to_vec();
    for round in 0..cfg.budget {
        let mut cands: Vec<ParameterPoint> = fixed.clone();
        if cfg.local_proposals > 0 {
            let mut rng = stream_rng(cfg.seed, round as u64);
            for k in 0..cfg.local_proposals {
                let base = &cur.tau.points()[k % cur.dim()];
                let mut c: Vec<f64> = base.coords().to_vec();
                for (v, (lo, hi)) in c.iter_mut().zip(&bounds) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += z * cfg.local_scale * (hi - lo);
                }
                model.domain().clamp(&mut c);
                cands.push(ParameterPoint::new(c));
            }
        }
        cands.retain(|c| !cur.tau.points().contains(c) && !pruned.iter().any(|p| &p.point == c));

        let results: Vec<Result<Outcome>> = if cfg.parallel {
            cands.par_iter().map(|c| score(model, &cur, c, cfg)).collect()
        } else {
            cands.iter().map(|c| score(model, &cur, c, cfg)).collect()
        };

        let mut pick: Option<(f64, MomentMatrices, ParameterPoint)> = None;
        for (c, r) in cands.iter().zip(results) {
            match r? {
                Outcome::Pruned(reason) => pruned.push(PrunedCandidate {
                    point: c.clone(),
                    reason,
                }),
                Outcome::Dependent(full) => {
                    if incompatibility.is_none() {
                        let compat = b0_compatibility_check(&full, &cfg.tol);
                        if let Some(a) = compat.witness {
                            incompatibility = Some(IncompatibilityWitness {
                                tau: full.tau.clone(),
                                coefficients: a,
                            });
                        }
                    }
                }
                Outcome::Scored { trace: s, mm } => {
                    if pick.as_ref().is_none_or(|(best_s, _, _)| s > *best_s) {
                        pick = Some((s, mm, c.clone()));
                    }
                }
            }
        }

        let mut added = None;
        let mut gain = 0.0;
        if let Some((s, mm, c)) = pick {
            if s > trace {
                gain = if trace > 0.0 {
                    (s - trace) / trace
                } else {
                    f64::INFINITY
                };
                let v = bound_v(&mm, &cfg.tol)?;
                cur = mm;
                best = v;
                trace = best.trace();
                lmax = lambda_max(&best.w);
                k_witness = k_witness.max(lmax);
                added = Some(c);
            }
        }
        iterations.push(SearchIteration {
            tau: cur.tau.clone(),
            trace,
            lambda_max: lmax,
            added,
        });
        if lmax > threshold {
            stop = StopReason::Divergence;
            break;
        }
        if gain < cfg.stall_tol {
            stall += 1;
            if stall >= cfg.patience {
                stop = StopReason::Stalled;
                break;
            }
        } else {
            stall = 0;
        }
    }

    let boundedness = if stop == StopReason::Divergence {
        notes.push(format!(
            "lambda_max {lmax:e} exceeds divergence threshold {threshold:e}: the bounds are unbounded and no \
             finite-covariance unbiased estimator exists"
        ));
        Boundedness::DivergenceDetected
    } else {
        Boundedness::BoundedEvidence
    };
    if cfg.budget == 0 {
        notes.push("budget 0: no candidates evaluated, bound is trivial and the search is inconclusive".into());
    } else if stop == StopReason::Budget {
        notes.push("budget exhausted before the trace stalled".into());
    }
    if incompatibility.is_some() {
        notes.push(
            "target is not compatible with the span of the likelihood ratios: no unbiased estimator exists".into(),
        );
    }
    if !pruned.is_empty() {
        notes.push(format!("{} candidate(s) pruned", pruned.len()));
    }
    Ok(SearchReport {
        iterations,
        best,
        boundedness,
        stop,
        k_witness,
        divergence_threshold: threshold,
        pruned,
        incompatibility,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BernoulliN, BernoulliTarget, ExponentialRate, GaussianMean, GaussianTarget};
    use crate::psd::k_identity_dominates;

    fn axis(lower: f64, upper: f64, points: usize) -> GridAxis {
        GridAxis { lower, upper, points }
    }

    fn nondecreasing(r: &SearchReport) -> bool {
        r.iterations.windows(2).all(|w| w[1].trace >= w[0].trace)
    }

    #[test]
    fn gaussian_reaches_crb() {
        let m = GaussianMean::new(5, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let cfg = SearchConfig {
            grid: vec![axis(-1.0, 1.0, 41)],
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        assert!(nondecreasing(&r));
        assert!((r.best.trace() - 0.2).abs() < 0.002, "{}", r.best.trace());
        assert!(r.best.trace() <= 0.2 + 1e-9);
        assert_eq!(r.boundedness, Boundedness::BoundedEvidence);
        for it in &r.iterations {
            assert!(it.lambda_max <= r.k_witness);
        }
        assert!(k_identity_dominates(r.k_witness, &r.best.w, &cfg.tol).unwrap());
    }

    #[test]
    fn bernoulli_identity_is_quarter() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Identity).unwrap();
        let cfg = SearchConfig {
            grid: vec![axis(0.0, 1.0, 21)],
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        assert!((r.best.trace() - 0.25).abs() < 1e-12);
        assert!(r.incompatibility.is_none());
        assert_eq!(r.stop, StopReason::Stalled);
    }

    #[test]
    fn bernoulli_odds_diverges() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Odds).unwrap();
        let cfg = SearchConfig {
            candidates: (1..=20).map(|k| ParameterPoint::scalar(1.0 - 0.5f64.powi(k))).collect(),
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        assert_eq!(r.boundedness, Boundedness::DivergenceDetected);
        assert!(r.best.w.get(0, 0) > 1e3);
        // CRB of the odds at 1/2 is 4
        assert!(
            (r.divergence_threshold / 4e3 - 1.0).abs() < 0.01,
            "{}",
            r.divergence_threshold
        );
    }

    #[test]
    fn bernoulli_square_flags_incompatibility() {
        let m = BernoulliN::new(1, 0.5, BernoulliTarget::Square).unwrap();
        let cfg = SearchConfig {
            candidates: vec![ParameterPoint::scalar(0.25), ParameterPoint::scalar(0.75)],
            local_proposals: 0,
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        let w = r.incompatibility.expect("witness");
        assert_eq!(w.tau.len(), 3);
    }

    #[test]
    fn exponential_prunes_postulate_violations() {
        let m = ExponentialRate::new(1, 1.0).unwrap();
        let cfg = SearchConfig {
            candidates: vec![ParameterPoint::scalar(0.3), ParameterPoint::scalar(1.5)],
            local_proposals: 0,
            divergence_threshold: Some(1e6),
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        assert!(r.pruned.iter().any(|p| p.point == ParameterPoint::scalar(0.3)));
        assert!(r.best.trace() > 0.0);
    }

    #[test]
    fn budget_zero_is_trivial() {
        let m = GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let cfg = SearchConfig {
            budget: 0,
            ..Default::default()
        };
        let r = search_msup(&m, &cfg).unwrap();
        assert_eq!(r.iterations.len(), 1);
        assert_eq!(r.best.trace(), 0.0);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn serial_equals_parallel() {
        let m = GaussianMean::new(2, 1.5, 0.3, GaussianTarget::Identity).unwrap();
        let base = SearchConfig {
            grid: vec![axis(-2.0, 2.0, 17)],
            seed: 9,
            ..Default::default()
        };
        let a = search_msup(
            &m,
            &SearchConfig {
                parallel: true,
                ..base.clone()
            },
        )
        .unwrap();
        let b = search_msup(
            &m,
            &SearchConfig {
                parallel: false,
                ..base
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
