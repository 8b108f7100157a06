//! Symmetric matrices under the Loewner partial order.
//!
//! `A >= B` means `A - B` is symmetric non-negative definite (s.n.n.d.). All
//! semidefiniteness decisions use the relative slack
//! `psd_eps * (1 + ||.||_F)`; all invertibility decisions use a relative
//! singular-value cutoff `rank_eps`, never a determinant.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest tolerated relative asymmetry before construction fails.
const ASYMMETRY_TOL: f64 = 1e-8;

/// Numerical slack used by every semidefiniteness and rank decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Eigenvalue slack, relative to `1 + ||S||_F`.
    pub psd_eps: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            psd_eps: 1e-9,
            rank_eps: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn new(psd_eps: f64, rank_eps: f64) -> Result<Self> {
        if !(psd_eps >= 0.0 && psd_eps.is_finite()) {
            return Err(Error::InvalidInput(format!("psd_eps must be >= 0, got {psd_eps}")));
        }
        if !(0.0..1.0).contains(&rank_eps) {
            return Err(Error::InvalidInput(format!(
                "rank_eps must lie in [0, 1), got {rank_eps}"
            )));
        }
        Ok(Self { psd_eps, rank_eps })
    }

    /// Absolute eigenvalue slack for a matrix of Frobenius norm `scale`.
    pub fn slack(&self, scale: f64) -> f64 {
        self.psd_eps * (1.0 + scale)
    }
}

/// A dense real symmetric matrix with finite entries.
///
/// Construction symmetrizes the input as `(S + S^T) / 2`; asymmetry above
/// `1e-8` relative to the largest entry is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("symmetric matrix must have dim >= 1".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > ASYMMETRY_TOL * (1.0 + scale) {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric: max |S_ij - S_ji| = {asym:e}"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "row-major symmetric matrix data",
                expected: dim * dim,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(&self.0 * k)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Self::new(&self.0 - &other.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        Self::new(&self.0 + &other.0)
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix operands",
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Outcome of comparing two symmetric matrices in the Loewner order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoewnerOrder {
    GreaterEqual,
    LessEqual,
    Equal,
    Incomparable,
}

impl LoewnerOrder {
    /// True for `GreaterEqual` and `Equal`.
    pub fn is_ge(self) -> bool {
        matches!(self, Self::GreaterEqual | Self::Equal)
    }

    pub fn is_le(self) -> bool {
        matches!(self, Self::LessEqual | Self::Equal)
    }
}

impl fmt::Display for LoewnerOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::GreaterEqual => "GreaterEqual",
            Self::LessEqual => "LessEqual",
            Self::Equal => "Equal",
            Self::Incomparable => "Incomparable",
        };
        f.write_str(s)
    }
}

/// Classification of `X - Y` together with its extremal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoewnerVerdict {
    pub order: LoewnerOrder,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// True iff the smallest eigenvalue of `s` is at least `-psd_eps (1 + ||s||_F)`.
pub fn is_snnd(s: &SymMatrix, tol: &Tolerance) -> bool {
    s.min_eigenvalue() >= -tol.slack(s.frobenius_norm())
}

pub fn loewner_compare(x: &SymMatrix, y: &SymMatrix, tol: &Tolerance) -> Result<LoewnerVerdict> {
    check_same_dim(x, y)?;
    let diff = x.sub(y)?;
    let ev = diff.eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let scale = x.frobenius_norm().max(y.frobenius_norm());
    let slack = tol.slack(scale);
    let order = if diff.frobenius_norm() <= tol.slack(x.frobenius_norm()) {
        LoewnerOrder::Equal
    } else if lo >= -slack {
        LoewnerOrder::GreaterEqual
    } else if hi <= slack {
        LoewnerOrder::LessEqual
    } else {
        LoewnerOrder::Incomparable
    };
    Ok(LoewnerVerdict {
        order,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
    })
}

/// Greatest eigenvalue.
pub fn lambda_max(s: &SymMatrix) -> f64 {
    let ev = s.eigenvalues();
    ev[ev.len() - 1]
}

/// `K I >= X` holds iff `K >= lambda_max(X)`; decided with `psd_eps` slack.
pub fn k_identity_dominates(k: f64, x: &SymMatrix, tol: &Tolerance) -> Result<bool> {
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("K must be finite, got {k}")));
    }
    if !is_snnd(x, tol) {
        return Err(Error::InvalidInput(
            "k_identity_dominates requires a non-negative definite matrix".into(),
        ));
    }
    Ok(k >= lambda_max(x) - tol.psd_eps)
}

/// Both sides of the weighted matrix Cauchy-Schwarz inequality
/// `X H X^T >= X H Y^T (Y H Y^T)^-1 Y H X^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySchwarzGap {
    pub lhs: SymMatrix,
    pub rhs: SymMatrix,
    pub gap_is_snnd: bool,
    /// `X` lies in the row space of `Y` (i.e. `X = Lambda Y`).
    pub equality: bool,
}

pub fn weighted_cauchy_schwarz(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    h: &SymMatrix,
    tol: &Tolerance,
) -> Result<CauchySchwarzGap> {
    let m = h.dim();
    if x.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "X columns vs H",
            expected: m,
            got: x.ncols(),
        });
    }
    if y.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "Y columns vs H",
            expected: m,
            got: y.ncols(),
        });
    }
    let h = h.matrix();
    let yhy = y * h * y.transpose();
    check_rank(&yhy, tol, "Y H Y^T", "")?;
    let xhy = x * h * y.transpose();
    // (Y H Y^T)^-1 Y
    let proj = solve_spd(&yhy, y);
    // G = X H, B = H, A = Y in the reduced form; both sides share one factorization
    let xh = x * h;
    let lhs = inverse_quadratic(&xh, h)?;
    let rhs = reduced_quadratic(&xh, h, y, tol)?;
    let gap = lhs.sub(&rhs)?;
    let residual = x - &xhy * proj;
    let equality = residual.norm() <= tol.slack(x.norm());
    Ok(CauchySchwarzGap {
        gap_is_snnd: is_snnd(&gap, tol),
        lhs,
        rhs,
        equality,
    })
}

/// Matrix Rayleigh-quotient reduction: `V = G B^-1 G^T` dominates
/// `W = G A^T (A B A^T)^-1 A G^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighReduction {
    pub v: SymMatrix,
    pub w: SymMatrix,
    pub dominance: LoewnerVerdict,
}

pub fn rayleigh_reduction(
    g: &DMatrix<f64>,
    b: &SymMatrix,
    a: &DMatrix<f64>,
    tol: &Tolerance,
) -> Result<RayleighReduction> {
    let m = b.dim();
    if g.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "G columns vs B",
            expected: m,
            got: g.ncols(),
        });
    }
    if a.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "A columns vs B",
            expected: m,
            got: a.ncols(),
        });
    }
    check_rank(b.matrix(), tol, "B", "")?;
    let v = inverse_quadratic(g, b.matrix())?;
    let w = reduced_quadratic(g, b.matrix(), a, tol)?;
    let dominance = loewner_compare(&v, &w, tol)?;
    Ok(RayleighReduction { v, w, dominance })
}

/// `true` iff the last element of the sequence, taken as the limit proxy,
/// is non-negative definite.
pub fn psd_limit_check(seq: &[SymMatrix], tol: &Tolerance) -> Result<bool> {
    let last = seq
        .last()
        .ok_or_else(|| Error::InvalidInput("psd_limit_check needs a non-empty sequence".into()))?;
    if let Some(bad) = seq.iter().find(|s| s.dim() != last.dim()) {
        return Err(Error::DimensionMismatch {
            context: "psd_limit_check sequence",
            expected: last.dim(),
            got: bad.dim(),
        });
    }
    Ok(is_snnd(last, tol))
}

/// `G A^T (A B A^T)^-1 A G^T` after a rank check of `A B A^T`.
///
/// With `B = L L^T` this is `Y^T Q Q^T Y` for `Y = L^-1 G^T` and `Q` an
/// orthonormal basis of `L^T A^T`, so `A B A^T` is never inverted.
pub(crate) fn reduced_quadratic(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    tol: &Tolerance,
) -> Result<SymMatrix> {
    let aba = a * b * a.transpose();
    check_rank(&aba, tol, "A B A^T", "")?;
    let ga = g * a.transpose();
    if ga.iter().all(|&v| v == 0.0) {
        return Ok(SymMatrix::zeros(g.nrows()));
    }
    if let Some(ch) = b.clone().cholesky() {
        let l = ch.l();
        let y = l
            .solve_lower_triangular(&g.transpose())
            .expect("Cholesky factor is invertible");
        let q = (l.transpose() * a.transpose()).qr().q();
        let qy = q.transpose() * y;
        return SymMatrix::new(qy.transpose() * qy);
    }
    SymMatrix::new(&ga * solve_spd(&aba, &ga.transpose()))
}

/// `G B^-1 G^T` as `Y^T Y` with `Y = L^-1 G^T` when `B` admits a Cholesky
/// factor. `B` must already be rank-checked.
pub(crate) fn inverse_quadratic(g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SymMatrix> {
    if let Some(ch) = b.clone().cholesky() {
        let y = ch
            .l()
            .solve_lower_triangular(&g.transpose())
            .expect("Cholesky factor is invertible");
        return SymMatrix::new(y.transpose() * y);
    }
    SymMatrix::new(g * solve_spd(b, &g.transpose()))
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Returns the condition number `s_max / s_min`, or a rank-deficiency error
/// when `s_min / s_max <= rank_eps`.
pub(crate) fn check_rank(
    m: &DMatrix<f64>,
    tol: &Tolerance,
    context: &'static str,
    advice: &'static str,
) -> Result<f64> {
    let sv = singular_values(m);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if ratio.is_nan() || ratio <= tol.rank_eps {
        return Err(Error::RankDeficient {
            context,
            ratio,
            rank_eps: tol.rank_eps,
            advice,
        });
    }
    Ok(hi / lo)
}

/// Solves `S X = rhs` for symmetric positive definite `S`; falls back to LU
/// when Cholesky breaks down on a nearly singular (but rank-checked) matrix.
pub(crate) fn solve_spd(s: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = s.clone().cholesky() {
        return ch.solve(rhs);
    }
    s.clone()
        .lu()
        .solve(rhs)
        .expect("rank-checked matrix must be invertible")
}
