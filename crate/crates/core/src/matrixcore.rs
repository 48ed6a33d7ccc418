//! Dense symmetric matrix utilities and the regularized generalized symmetric
//! eigensolver that every subspace objective in this crate reduces to.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense square matrix that is exactly symmetric.
///
/// Every constructor symmetrizes its input as `(S + Sᵀ) / 2`, so
/// `entries[i][j] == entries[j][i]` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (m[(i, j)] + m[(j, i)]) * 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_row_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, scale: f64) {
        assert_eq!(self.order(), other.order(), "order mismatch in add_scaled");
        self.0 += &other.0 * scale;
    }

    pub fn scaled(&self, scale: f64) -> SymMatrix {
        SymMatrix(&self.0 * scale)
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.order() {
            self.0[(i, i)] += value;
        }
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.0 - &other.0).amax()
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `H = I − (1/n)·1·1ᵀ`.
pub fn centering_matrix(n: usize) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::invalid("centering matrix order must be at least 1"));
    }
    let inv = 1.0 / n as f64;
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv });
    Ok(SymMatrix(m))
}

/// `tr(AᵀSA)`.
pub fn trace_quadratic(a: &DMatrix<f64>, s: &SymMatrix) -> Result<f64> {
    if a.nrows() != s.order() {
        return Err(Error::invalid(format!(
            "projection has {} rows but matrix has order {}",
            a.nrows(),
            s.order()
        )));
    }
    let sa = s.as_matrix() * a;
    Ok(sa.component_mul(a).sum())
}

/// `X·L·Xᵀ` for a data matrix `X` (columns are samples) and an `n × n` matrix `L`.
pub fn sandwich(x: &DMatrix<f64>, l: &SymMatrix) -> Result<SymMatrix> {
    if x.ncols() != l.order() {
        return Err(Error::invalid(format!(
            "data has {} samples but matrix has order {}",
            x.ncols(),
            l.order()
        )));
    }
    let xl = x * l.as_matrix();
    Ok(SymMatrix::symmetrized(xl * x.transpose()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigResult {
    /// `m × k`, columns are generalized eigenvectors.
    pub vectors: DMatrix<f64>,
    /// Ascending.
    pub values: Vec<f64>,
    /// `max_j ‖S·a_j − θ_j·B_r·a_j‖₂ / max(1, ‖S·a_j‖₂)` with `B_r` the ridged right-hand matrix.
    pub residual: f64,
    pub ridge_used: f64,
}

/// Ridge steps tried after the caller's ridge, as multiples of `tr(B)/m`.
const RIDGE_ESCALATION: [f64; 7] = [1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3];
/// Smallest accepted `λ_min / λ_max` of the ridged right-hand matrix.
const MIN_RECIPROCAL_CONDITION: f64 = 1e-9;
const PSD_TOLERANCE: f64 = 1e-8;

/// Solves `S·a = θ·(B + r·I)·a` for the `k` smallest eigenpairs.
///
/// `r` starts at `ridge` and is escalated by `10^e · tr(B)/m`, `e = −9..−3`, until
/// `B + r·I` factors with a reciprocal condition number of at least 1e-9. The
/// returned columns are `(B + r·I)`-orthonormal, and each column is sign-normalized
/// so its largest-magnitude entry is positive. Ordering inside a group of tied
/// eigenvalues is whatever the dense solver produces and must not be relied upon.
pub fn solve_generalized_eig(
    s: &SymMatrix,
    b: &SymMatrix,
    k: usize,
    ridge: f64,
) -> Result<EigResult> {
    let m = s.order();
    if b.order() != m {
        return Err(Error::invalid(format!(
            "left matrix has order {m} but right matrix has order {}",
            b.order()
        )));
    }
    if k == 0 || k > m {
        return Err(Error::invalid(format!(
            "requested {k} eigenpairs from a problem of order {m}"
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    if s.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("eigenproblem matrices contain non-finite entries"));
    }

    let b_eigs = b.eigenvalues();
    let b_min = b_eigs[0];
    let b_max = b_eigs[m - 1];
    let b_norm = b_min.abs().max(b_max.abs());
    if b_min < -PSD_TOLERANCE * b_norm {
        return Err(Error::invalid(format!(
            "right-hand matrix is not positive semidefinite (smallest eigenvalue {b_min:e}, norm {b_norm:e})"
        )));
    }

    let scale = {
        let t = b.trace() / m as f64;
        if t > 0.0 {
            t
        } else {
            1.0
        }
    };

    let candidates =
        std::iter::once(ridge).chain(RIDGE_ESCALATION.iter().map(|f| ridge + f * scale));
    for r in candidates {
        let lo = b_min + r;
        let hi = b_max + r;
        if !(lo > 0.0 && lo >= MIN_RECIPROCAL_CONDITION * hi) {
            continue;
        }
        let mut b_r = b.clone();
        b_r.add_diagonal(r);
        let Some(chol) = b_r.as_matrix().clone().cholesky() else {
            continue;
        };
        let l = chol.l();
        return Ok(solve_with_factor(s, &b_r, &l, k, r));
    }

    Err(Error::NumericalFailure(format!(
        "right-hand matrix could not be factored even with ridge {:e}",
        ridge + RIDGE_ESCALATION[RIDGE_ESCALATION.len() - 1] * scale
    )))
}

fn solve_with_factor(
    s: &SymMatrix,
    b_r: &SymMatrix,
    l: &DMatrix<f64>,
    k: usize,
    ridge_used: f64,
) -> EigResult {
    // C = L⁻¹ S L⁻ᵀ
    let y = l
        .solve_lower_triangular(s.as_matrix())
        .expect("cholesky factor has a positive diagonal");
    let c = l
        .solve_lower_triangular(&y.transpose())
        .expect("cholesky factor has a positive diagonal");
    let eig = SymmetricEigen::new(SymMatrix::symmetrized(c).into_inner());

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(k);

    let m = s.order();
    let u = DMatrix::from_fn(m, k, |i, j| eig.eigenvectors[(i, order[j])]);
    let mut vectors = l
        .transpose()
        .solve_upper_triangular(&u)
        .expect("cholesky factor has a positive diagonal");
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    for mut col in vectors.column_iter_mut() {
        let (idx, _) = col.iamax_full();
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }

    let sa = s.as_matrix() * &vectors;
    let ba = b_r.as_matrix() * &vectors;
    let residual = (0..k)
        .map(|j| {
            let r = sa.column(j) - ba.column(j) * values[j];
            r.norm() / sa.column(j).norm().max(1.0)
        })
        .fold(0.0, f64::max);

    EigResult {
        vectors,
        values,
        residual,
        ridge_used,
    }
}
