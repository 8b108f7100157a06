//! Barankin moment matrices and covariance lower bounds.
//!
//! For test points `tau = (theta_1..theta_M)`:
//!
//! * `G(tau)` is `d_g x M` with columns `h(theta_i) = g(theta_i) - g(theta_true)`;
//! * `B(tau)` is the `M x M` Gram matrix `E_true[pi(theta_i) pi(theta_j)]`;
//! * `V = G B^-1 G^T` and, for a `d_A x M` matrix `A`,
//!   `W = G A^T (A B A^T)^-1 A G^T`.
//!
//! Every finite-covariance unbiased estimator has covariance at least `W`.

mod efficiency;
mod search;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mc::{empirical_gram, exact_gram, BatchMeans, McConfig};
use crate::models::{Model, MomentMethod, ParameterPoint};
use crate::psd::{check_rank, inverse_quadratic, reduced_quadratic, solve_spd, SymMatrix, Tolerance};

pub use efficiency::{
    certify_efficiency, construct_estimator, BarankinEstimator, CertifySettings, EfficiencyCertificate,
    EfficiencyVerdict, ProbeBias,
};
pub use search::{
    search_msup, Boundedness, GridAxis, IncompatibilityWitness, PrunedCandidate, SearchConfig, SearchIteration,
    SearchReport, StopReason,
};

/// Minimum Monte Carlo sample count for moment matrices.
pub const MIN_MC_SAMPLES: usize = 1_000;

const DEFLATE_ADVICE: &str = "; remove dependent test points with deflate_dependent";

/// An ordered, non-empty list of test points.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPointSet(Vec<ParameterPoint>);

impl TestPointSet {
    pub fn new(points: Vec<ParameterPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "test point set must contain at least one point".into(),
            ));
        }
        Ok(Self(points))
    }

    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().copied().map(ParameterPoint::scalar).collect())
    }

    pub fn points(&self) -> &[ParameterPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, model: &dyn Model) -> Result<()> {
        self.0.iter().try_for_each(|p| model.check_theta(p))
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self(idx.iter().map(|&i| self.0[i].clone()).collect())
    }

    pub fn with_point(&self, p: ParameterPoint) -> Self {
        let mut v = self.0.clone();
        v.push(p);
        Self(v)
    }
}

/// Test points plus an optional reduction matrix `A` (absent means identity).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec {
    pub tau: TestPointSet,
    pub a_matrix: Option<DMatrix<f64>>,
}

/// `G(tau)`, `B(tau)` and how `B` was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrices {
    pub tau: TestPointSet,
    pub g: DMatrix<f64>,
    pub b: SymMatrix,
    pub method: MomentMethod,
    /// Entrywise standard errors of `B` (Monte Carlo only).
    pub mc_std_err: Option<DMatrix<f64>>,
    /// Per-batch Gram means (Monte Carlo only), for jackknife errors.
    pub mc_batches: Option<BatchMeans>,
}

impl MomentMatrices {
    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.g.nrows()
    }

    /// Restriction to the given test-point indices.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        Ok(Self {
            tau: self.tau.select(idx),
            g: self.g.select_columns(idx),
            b: SymMatrix::new(pick(self.b.matrix()))?,
            method: self.method,
            mc_std_err: self.mc_std_err.as_ref().map(pick),
            mc_batches: self.mc_batches.as_ref().map(|bm| BatchMeans {
                means: bm.means.iter().map(pick).collect(),
                samples_used: bm.samples_used,
            }),
        })
    }
}

/// A Barankin covariance lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMatrix {
    pub w: SymMatrix,
    pub spec: BoundSpec,
    /// Condition number of the matrix inverted (`B` or `A B A^T`).
    pub condition_number: f64,
    /// `A B A^T` passed the rank check.
    pub in_c_a: bool,
}

impl BoundMatrix {
    pub fn trace(&self) -> f64 {
        self.w.trace()
    }
}

/// `G(tau)`: column `i` is `g(tau_i) - g(theta_true)`.
pub fn compute_g(model: &dyn Model, tau: &TestPointSet) -> Result<DMatrix<f64>> {
    tau.check(model)?;
    let cols: Vec<DVector<f64>> = tau
        .points()
        .iter()
        .map(|p| model.target_increment(p))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// `G(tau)` and `B(tau)`. `mc` is used only for [`MomentMethod::MonteCarlo`].
///
/// Monte Carlo Gram matrices with a slightly negative eigenvalue (above
/// `-3` times the largest entry standard error) are projected onto the PSD
/// cone; larger violations are reported as diagnostics errors.
pub fn compute_b(model: &dyn Model, tau: &TestPointSet, method: MomentMethod, mc: &McConfig) -> Result<MomentMatrices> {
    let g = compute_g(model, tau)?;
    match method {
        MomentMethod::ClosedForm | MomentMethod::Enumeration => {
            if model.moment_mode() != method {
                return Err(Error::Mode(format!(
                    "model '{}' provides {} moments, not {}",
                    model.name(),
                    model.moment_mode(),
                    method
                )));
            }
            Ok(MomentMatrices {
                tau: tau.clone(),
                g,
                b: exact_gram(model, tau.points())?,
                method,
                mc_std_err: None,
                mc_batches: None,
            })
        }
        MomentMethod::MonteCarlo => {
            if mc.samples < MIN_MC_SAMPLES {
                return Err(Error::InvalidInput(format!(
                    "Monte Carlo moment matrices need at least {MIN_MC_SAMPLES} samples, got {}",
                    mc.samples
                )));
            }
            let bm = empirical_gram(model, tau.points(), mc)?;
            let est = bm.summarize();
            let b = project_mc_gram(&est.value, est.max_std_err())?;
            Ok(MomentMatrices {
                tau: tau.clone(),
                g,
                b,
                method,
                mc_std_err: Some(est.std_err),
                mc_batches: Some(bm),
            })
        }
    }
}

fn project_mc_gram(b: &DMatrix<f64>, max_se: f64) -> Result<SymMatrix> {
    let sym =
        SymMatrix::new(b.clone()).map_err(|e| Error::Diagnostics(format!("Monte Carlo Gram matrix unusable: {e}")))?;
    let eig = SymmetricEigen::new(sym.matrix().clone());
    let lo = eig.eigenvalues.min();
    if lo >= 0.0 {
        return Ok(sym);
    }
    if lo < -3.0 * max_se {
        return Err(Error::Diagnostics(format!(
            "Monte Carlo Gram matrix has eigenvalue {lo:e}, beyond 3 standard errors ({max_se:e})"
        )));
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    SymMatrix::new(&eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose())
}

/// `V = G B^-1 G^T`.
pub fn bound_v(mm: &MomentMatrices, tol: &Tolerance) -> Result<BoundMatrix> {
    let cond = check_rank(mm.b.matrix(), tol, "B(tau)", DEFLATE_ADVICE)?;
    let w = inverse_quadratic(&mm.g, mm.b.matrix())?;
    Ok(BoundMatrix {
        w,
        spec: BoundSpec {
            tau: mm.tau.clone(),
            a_matrix: None,
        },
        condition_number: cond,
        in_c_a: true,
    })
}

fn check_a(mm: &MomentMatrices, a: &DMatrix<f64>) -> Result<()> {
    if a.ncols() != mm.dim() {
        return Err(Error::DimensionMismatch {
            context: "A columns vs number of test points",
            expected: mm.dim(),
            got: a.ncols(),
        });
    }
    if a.nrows() == 0 {
        return Err(Error::InvalidInput("A must have at least one row".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("A has non-finite entries".into()));
    }
    Ok(())
}

/// `W = G A^T (A B A^T)^-1 A G^T`.
pub fn bound_w(mm: &MomentMatrices, a: &DMatrix<f64>, tol: &Tolerance) -> Result<BoundMatrix> {
    check_a(mm, a)?;
    let aba = a * mm.b.matrix() * a.transpose();
    let cond = check_rank(&aba, tol, "A B(tau) A^T", DEFLATE_ADVICE)?;
    let w = reduced_quadratic(&mm.g, mm.b.matrix(), a, tol)?;
    Ok(BoundMatrix {
        w,
        spec: BoundSpec {
            tau: mm.tau.clone(),
            a_matrix: Some(a.clone()),
        },
        condition_number: cond,
        in_c_a: true,
    })
}

/// `Lambda_0 = G A^T (A B A^T)^-1`, the coefficient matrix of the optimal
/// linear combination of `A beta(tau)`.
pub fn lambda0(mm: &MomentMatrices, a: &DMatrix<f64>, tol: &Tolerance) -> Result<DMatrix<f64>> {
    check_a(mm, a)?;
    let aba = a * mm.b.matrix() * a.transpose();
    check_rank(&aba, tol, "A B(tau) A^T", DEFLATE_ADVICE)?;
    // (A B A^T) symmetric: Lambda_0^T = (A B A^T)^-1 A G^T
    Ok(solve_spd(&aba, &(a * mm.g.transpose())).transpose())
}

/// Greedy left-to-right removal of test points whose likelihood ratio is a
/// linear combination of the ratios already kept.
///
/// Index `i` is kept iff the Schur complement of `B` over the kept indices,
/// evaluated at `i`, exceeds `rank_eps * B_ii` and the enlarged submatrix
/// still passes the singular-value ratio test of [`bound_v`]. Index 0 is
/// always kept.
pub fn deflate_dependent(mm: &MomentMatrices, tol: &Tolerance) -> Result<(Vec<usize>, MomentMatrices)> {
    let b = mm.b.matrix();
    let mut kept = vec![0usize];
    for i in 1..mm.dim() {
        let bkk = DMatrix::from_fn(kept.len(), kept.len(), |r, c| b[(kept[r], kept[c])]);
        let bki = DMatrix::from_fn(kept.len(), 1, |r, _| b[(kept[r], i)]);
        let schur = match bkk.clone().cholesky() {
            Some(ch) => b[(i, i)] - (bki.transpose() * ch.solve(&bki))[(0, 0)],
            None => 0.0,
        };
        if schur > tol.rank_eps * b[(i, i)] {
            kept.push(i);
            let sub = DMatrix::from_fn(kept.len(), kept.len(), |r, c| b[(kept[r], kept[c])]);
            if check_rank(&sub, tol, "B(tau)", "").is_err() {
                kept.pop();
            }
        }
    }
    let reduced = mm.select(&kept)?;
    Ok((kept, reduced))
}

/// Outcome of the compatibility check of the target with the span of the
/// likelihood ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub compatible: bool,
    /// Coefficients `a` with `sum a_i pi(theta_i) = 0` but
    /// `sum a_i h(theta_i) != 0`, scaled so the first significant entry is 1.
    pub witness: Option<DVector<f64>>,
}

/// Works on the scaled pair `C = D^-1 B D^-1`, `Gs = G D^-1` with
/// `D = diag(sqrt(B_ii))`. A unit eigenvector `c` of `C` with eigenvalue
/// `lambda <= rank_eps * lambda_max` is a witness when
/// `||Gs c|| > psd_eps (1 + ||Gs||_F)` and its bound contribution
/// `||Gs c|| / sqrt(lambda)` exceeds `||Gs||_F / sqrt(rank_eps * lambda_max)`,
/// the largest contribution an eigenvalue at the cutoff can produce. The
/// reported witness is `a = D^-1 c`.
pub fn b0_compatibility_check(mm: &MomentMatrices, tol: &Tolerance) -> Compatibility {
    let b = mm.b.matrix();
    let inv_d = DVector::from_iterator(b.nrows(), (0..b.nrows()).map(|i| 1.0 / b[(i, i)].sqrt()));
    let c = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * inv_d[i] * inv_d[j]);
    let gs = DMatrix::from_fn(mm.g.nrows(), mm.g.ncols(), |i, j| mm.g[(i, j)] * inv_d[j]);
    let eig = SymmetricEigen::new(c);
    let top = eig.eigenvalues.max();
    let g_norm = gs.norm();
    let resolvable = g_norm / (tol.rank_eps * top).sqrt();
    for k in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[k] > tol.rank_eps * top {
            continue;
        }
        let v = eig.eigenvectors.column(k).into_owned();
        let gv = (&gs * &v).norm();
        let contribution = gv / eig.eigenvalues[k].max(0.0).sqrt();
        if gv > tol.slack(g_norm) && contribution > resolvable {
            let a = v.component_mul(&inv_d);
            let big = a.amax();
            let lead = a.iter().copied().find(|x| x.abs() > 1e-8 * big).unwrap_or(1.0);
            return Compatibility {
                compatible: false,
                witness: Some(a / lead),
            };
        }
    }
    Compatibility {
        compatible: true,
        witness: None,
    }
}

/// Test points `theta_true, theta_true + eps e_1, ..., theta_true + eps e_k`.
///
/// Both `theta_true +/- eps e_j` must lie in the domain.
pub fn crb_test_points(model: &dyn Model, eps: f64) -> Result<TestPointSet> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let t0 = model.theta_true().coords().to_vec();
    let mut pts = vec![ParameterPoint::new(t0.clone())];
    for j in 0..t0.len() {
        for sign in [1.0, -1.0] {
            let mut c = t0.clone();
            c[j] += sign * eps;
            let p = ParameterPoint::new(c);
            model.check_theta(&p)?;
            if sign > 0.0 {
                pts.push(p);
            }
        }
    }
    TestPointSet::new(pts)
}

/// Bound `V` at the collapsing test points of [`crb_test_points`]; tends to
/// the Cramer-Rao matrix as `eps -> 0`.
pub fn crb_limit(
    model: &dyn Model,
    eps: f64,
    method: MomentMethod,
    mc: &McConfig,
    tol: &Tolerance,
) -> Result<SymMatrix> {
    let tau = crb_test_points(model, eps)?;
    let mm = compute_b(model, &tau, method, mc)?;
    Ok(bound_v(&mm, tol)?.w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BernoulliN, BernoulliTarget, ExponentialRate, GaussianMean, GaussianTarget};
    use crate::psd::{loewner_compare, LoewnerOrder};
    use std::f64::consts::E;

    fn exact(model: &dyn Model, tau: &[f64]) -> MomentMatrices {
        compute_b(
            model,
            &TestPointSet::scalars(tau).unwrap(),
            model.moment_mode(),
            &McConfig::default(),
        )
        .unwrap()
    }

    fn gauss() -> GaussianMean {
        GaussianMean::new(1, 1.0, 0.0, GaussianTarget::Identity).unwrap()
    }

    fn bern(target: BernoulliTarget) -> BernoulliN {
        BernoulliN::new(1, 0.5, target).unwrap()
    }

    #[test]
    fn g_matrix_examples() {
        let g = compute_g(&gauss(), &TestPointSet::scalars(&[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 1.0]);
        let g = compute_g(&gauss(), &TestPointSet::scalars(&[0.0]).unwrap()).unwrap();
        assert_eq!(g.as_slice(), &[0.0]);
        let sq = bern(BernoulliTarget::Square);
        let g = compute_g(&sq, &TestPointSet::scalars(&[0.25, 0.5, 0.75]).unwrap()).unwrap();
        assert_eq!(g.as_slice(), &[-0.1875, 0.0, 0.3125]);
        assert!(compute_g(&sq, &TestPointSet::scalars(&[1.5]).unwrap()).is_err());
    }

    #[test]
    fn b_matrix_examples() {
        let mm = exact(&gauss(), &[0.0, 1.0]);
        assert_eq!(mm.b.matrix().as_slice(), &[1.0, 1.0, 1.0, E]);
        assert_eq!(exact(&gauss(), &[0.0]).b.get(0, 0), 1.0);
        let mm = exact(&bern(BernoulliTarget::Identity), &[0.5, 0.75]);
        let want = [1.0, 1.0, 1.0, 1.25];
        for (a, b) in mm.b.matrix().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn b_matrix_method_mismatch_and_postulate() {
        let tau = TestPointSet::scalars(&[0.0, 1.0]).unwrap();
        let r = compute_b(&gauss(), &tau, MomentMethod::Enumeration, &McConfig::default());
        assert!(matches!(r, Err(Error::Mode(_))));
        let small = McConfig::new(100, 0, 10).unwrap();
        assert!(compute_b(&gauss(), &tau, MomentMethod::MonteCarlo, &small).is_err());
        let ex = ExponentialRate::new(1, 1.0).unwrap();
        let r = compute_b(
            &ex,
            &TestPointSet::scalars(&[1.0, 0.3]).unwrap(),
            MomentMethod::ClosedForm,
            &McConfig::default(),
        );
        assert!(matches!(r, Err(Error::PostulateViolation { .. })));
    }

    #[test]
    fn v_bound_examples() {
        let t = Tolerance::default();
        let v = bound_v(&exact(&gauss(), &[0.0, 1.0]), &t).unwrap();
        assert!((v.w.get(0, 0) - 1.0 / (E - 1.0)).abs() < 1e-12);
        assert!((v.w.get(0, 0) - 0.5819767).abs() < 1e-7);
        assert_eq!(bound_v(&exact(&gauss(), &[0.0]), &t).unwrap().w.get(0, 0), 0.0);
        let v = bound_v(&exact(&bern(BernoulliTarget::Identity), &[0.5, 0.75]), &t).unwrap();
        assert!((v.w.get(0, 0) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn v_bound_singular_b() {
        let mm = exact(&bern(BernoulliTarget::Identity), &[0.25, 0.5, 0.75]);
        assert!(matches!(
            bound_v(&mm, &Tolerance::default()),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn w_bound_examples() {
        let t = Tolerance::default();
        let mm = exact(&gauss(), &[0.0, 1.0]);
        let w = bound_w(&mm, &DMatrix::identity(2, 2), &t).unwrap();
        let v = bound_v(&mm, &t).unwrap();
        assert!((w.w.get(0, 0) - v.w.get(0, 0)).abs() < 1e-14);
        let w = bound_w(&mm, &DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), &t).unwrap();
        assert!((w.w.get(0, 0) - 1.0 / (3.0 + E)).abs() < 1e-14);
        let w = bound_w(&mm, &DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), &t).unwrap();
        assert_eq!(w.w.get(0, 0), 0.0);
        let bad = bound_w(&mm, &DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]), &t);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lambda0_examples() {
        let t = Tolerance::default();
        let l = lambda0(
            &exact(&bern(BernoulliTarget::Identity), &[0.5, 0.75]),
            &DMatrix::identity(2, 2),
            &t,
        )
        .unwrap();
        assert!((l[(0, 0)] + 1.0).abs() < 1e-13 && (l[(0, 1)] - 1.0).abs() < 1e-13);
        let mm = exact(&gauss(), &[0.0, 1.0]);
        let l = lambda0(&mm, &DMatrix::identity(2, 2), &t).unwrap();
        let k = 1.0 / (E - 1.0);
        assert!((l[(0, 0)] + k).abs() < 1e-13 && (l[(0, 1)] - k).abs() < 1e-13);
        let w = bound_w(&mm, &DMatrix::identity(2, 2), &t).unwrap();
        let back = &l * mm.b.matrix() * l.transpose();
        assert!((back[(0, 0)] - w.w.get(0, 0)).abs() <= 1e-10 * w.w.get(0, 0));
        let l = lambda0(&exact(&gauss(), &[0.0]), &DMatrix::identity(1, 1), &t).unwrap();
        assert_eq!(l[(0, 0)], 0.0);
    }

    #[test]
    fn deflation_examples() {
        let t = Tolerance::default();
        let (kept, red) = deflate_dependent(&exact(&bern(BernoulliTarget::Identity), &[0.25, 0.5, 0.75]), &t).unwrap();
        assert_eq!(kept, vec![0, 1]);
        assert!(bound_v(&red, &t).is_ok());
        let (kept, _) = deflate_dependent(&exact(&bern(BernoulliTarget::Identity), &[0.75, 0.75]), &t).unwrap();
        assert_eq!(kept, vec![0]);
        let (kept, _) = deflate_dependent(&exact(&gauss(), &[0.0, 0.5, 1.0]), &t).unwrap();
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn compatibility_examples() {
        let t = Tolerance::default();
        let c = b0_compatibility_check(&exact(&bern(BernoulliTarget::Square), &[0.25, 0.5, 0.75]), &t);
        assert!(!c.compatible);
        let a = c.witness.unwrap();
        assert!((a[0] - 1.0).abs() < 1e-9 && (a[1] + 2.0).abs() < 1e-9 && (a[2] - 1.0).abs() < 1e-9);
        let c = b0_compatibility_check(&exact(&bern(BernoulliTarget::Identity), &[0.25, 0.5, 0.75]), &t);
        assert!(c.compatible);
        let c = b0_compatibility_check(&exact(&gauss(), &[0.0, 1.0]), &t);
        assert!(c.compatible && c.witness.is_none());
        let m = GaussianMean::new(5, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        assert!(b0_compatibility_check(&exact(&m, &[0.0, 0.3, 0.3 + 1e-6]), &t).compatible);
        assert!(b0_compatibility_check(&exact(&m, &[0.0, -0.1, -3.3]), &t).compatible);
    }

    #[test]
    fn crb_examples() {
        let t = Tolerance::default();
        let mc = McConfig::default();
        let v = crb_limit(&gauss(), 0.1, MomentMethod::ClosedForm, &mc, &t).unwrap();
        assert!((v.get(0, 0) - 0.01 / 0.01f64.exp_m1()).abs() < 1e-9);
        assert!((v.get(0, 0) - 0.995).abs() < 1e-3);
        let g5 = GaussianMean::new(5, 1.0, 0.0, GaussianTarget::Identity).unwrap();
        let v = crb_limit(&g5, 1e-3, MomentMethod::ClosedForm, &mc, &t).unwrap();
        assert!((v.get(0, 0) - 0.2).abs() < 1e-5);
        let v = crb_limit(
            &bern(BernoulliTarget::Identity),
            1e-3,
            MomentMethod::Enumeration,
            &mc,
            &t,
        )
        .unwrap();
        assert!((v.get(0, 0) - 0.25).abs() < 1e-8);
        let r = crb_limit(
            &bern(BernoulliTarget::Identity),
            0.6,
            MomentMethod::Enumeration,
            &mc,
            &t,
        );
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn superset_dominates() {
        let t = Tolerance::default();
        let small = bound_v(&exact(&gauss(), &[0.0, 1.0]), &t).unwrap();
        let big = bound_v(&exact(&gauss(), &[0.0, 1.0, -0.5]), &t).unwrap();
        let v = loewner_compare(&big.w, &small.w, &t).unwrap();
        assert_eq!(v.order, LoewnerOrder::GreaterEqual);
    }

    #[test]
    fn monte_carlo_b_has_errors() {
        let tau = TestPointSet::scalars(&[0.0, 1.0]).unwrap();
        let mc = McConfig::new(40_000, 1, 40).unwrap();
        let mm = compute_b(&gauss(), &tau, MomentMethod::MonteCarlo, &mc).unwrap();
        let se = mm.mc_std_err.as_ref().unwrap();
        assert!((mm.b.get(1, 1) - E).abs() <= 4.0 * se[(1, 1)]);
        assert!(mm.mc_batches.is_some());
    }
}
