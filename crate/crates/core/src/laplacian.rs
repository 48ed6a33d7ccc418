//! Per-class variance/within Laplacians embedded in the `[source | target]`
//! sample frame, and the per-domain inter-class Laplacians.
//!
//! Global index convention: all source samples first, then all target samples,
//! each in input order. Inside a class-`c` star matrix the source-`c` samples
//! precede the target-`c` samples.
//!
//! For every class present in both domains,
//! `w_c·(L_v^c − L_w^c) == M_c` entrywise, so the class-wise MMD is
//! exactly a weighted variance term minus a weighted within-class term.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DomainSide, Error, Result};
use crate::matrixcore::{centering_matrix, SymMatrix};
use crate::statistics::{class_indices, implicit_weight};

/// Which construction to use for the within-class star matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WithinForm {
    /// `blockdiag(I − 1/n_s^c·1, I − 1/n_t^c·1)`; satisfies `X·L·Xᵀ = (S_st)_w^c`.
    #[default]
    BlockCentered,
    /// `V − G` with `V` holding `1/(n·n)` blocks and `G` its row sums. Kept for
    /// inspection only: it does not reproduce `M_c`.
    Literal,
}

/// Weight applied to an inter-class Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `(nⁱ + nʲ)/(nⁱ·nʲ)`: the quadratic form becomes `‖mⁱ − mʲ‖²`.
    #[default]
    Product,
    /// `(nⁱ + nʲ)/(nⁱ + nʲ) = 1`.
    Sum,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(WeightMode::Product),
            "sum" => Ok(WeightMode::Sum),
            other => Err(Error::invalid(format!("unknown weight mode {other:?}"))),
        }
    }
}

/// `I − (1/n)·1·1ᵀ` on the pooled class-`c` samples.
pub fn variance_laplacian_star(n_st_c: usize) -> Result<SymMatrix> {
    centering_matrix(n_st_c)
}

/// Block-centered within-class star matrix for `n_s_c` source and `n_t_c` target samples.
pub fn within_laplacian_star(n_s_c: usize, n_t_c: usize) -> Result<SymMatrix> {
    block_centering(&[n_s_c, n_t_c])
}

/// The `V − G` form of the within-class star matrix, see [`WithinForm::Literal`].
pub fn within_laplacian_star_literal(n_s_c: usize, n_t_c: usize) -> Result<SymMatrix> {
    if n_s_c == 0 || n_t_c == 0 {
        return Err(Error::invalid(format!(
            "within Laplacian needs non-empty blocks, got ({n_s_c}, {n_t_c})"
        )));
    }
    let n = n_s_c + n_t_c;
    let vs = 1.0 / (n_s_c as f64 * n_s_c as f64);
    let vt = 1.0 / (n_t_c as f64 * n_t_c as f64);
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            l[(i, j)] = match (i < n_s_c, j < n_s_c) {
                (true, true) => vs,
                (false, false) => vt,
                _ => 0.0,
            };
        }
    }
    for i in 0..n {
        let g: f64 = l.row(i).sum();
        l[(i, i)] -= g;
    }
    Ok(SymMatrix::symmetrized(l))
}

fn block_centering(sizes: &[usize]) -> Result<SymMatrix> {
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::invalid(format!(
            "block centering needs non-empty blocks, got {sizes:?}"
        )));
    }
    let n: usize = sizes.iter().sum();
    let mut l = DMatrix::zeros(n, n);
    let mut start = 0;
    for &s in sizes {
        let inv = 1.0 / s as f64;
        for i in start..start + s {
            for j in start..start + s {
                l[(i, j)] = if i == j { 1.0 - inv } else { -inv };
            }
        }
        start += s;
    }
    Ok(SymMatrix::symmetrized(l))
}

/// Global frame indices of class `c`: source-`c` samples, then target-`c` samples.
pub fn class_frame_indices(y_s: &[usize], y_t: &[usize], c: usize) -> (Vec<usize>, usize) {
    let src = class_indices(y_s, c);
    let n_src = src.len();
    let n_s = y_s.len();
    let idx = src
        .into_iter()
        .chain(class_indices(y_t, c).into_iter().map(|j| n_s + j))
        .collect();
    (idx, n_src)
}

/// Scatters `scale · star` into `total` at the rows/columns listed in `idx`.
pub(crate) fn accumulate_star(total: &mut DMatrix<f64>, idx: &[usize], star: &SymMatrix, scale: f64) {
    debug_assert_eq!(idx.len(), star.order());
    for (a, &p) in idx.iter().enumerate() {
        for (b, &q) in idx.iter().enumerate() {
            total[(p, q)] += scale * star[(a, b)];
        }
    }
}

fn embed(l_star: &SymMatrix, idx: &[usize], n: usize) -> SymMatrix {
    let mut out = DMatrix::zeros(n, n);
    accumulate_star(&mut out, idx, l_star, 1.0);
    SymMatrix::symmetrized(out)
}

/// Places a class-`c` star matrix into the full `n_st × n_st` frame.
pub fn embed_class_laplacian(
    l_star: &SymMatrix,
    y_s: &[usize],
    y_t: &[usize],
    c: usize,
) -> Result<SymMatrix> {
    let (idx, n_src) = class_frame_indices(y_s, y_t, c);
    if n_src == 0 {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Source,
        });
    }
    if n_src == idx.len() {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Target,
        });
    }
    if l_star.order() != idx.len() {
        return Err(Error::invalid(format!(
            "star matrix has order {} but class {c} has {} samples",
            l_star.order(),
            idx.len()
        )));
    }
    Ok(embed(l_star, &idx, y_s.len() + y_t.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassLaplacianSet {
    pub class: usize,
    /// Embedded `(L_st)_v^c`.
    pub l_v: SymMatrix,
    /// Embedded `(L_st)_w^c`.
    pub l_w: SymMatrix,
    /// `w_st^c`.
    pub weight: f64,
    pub counts: (usize, usize),
}

pub fn build_class_set(y_s: &[usize], y_t: &[usize], c: usize) -> Result<ClassLaplacianSet> {
    build_class_set_with(y_s, y_t, c, WithinForm::BlockCentered)
}

pub fn build_class_set_with(
    y_s: &[usize],
    y_t: &[usize],
    c: usize,
    form: WithinForm,
) -> Result<ClassLaplacianSet> {
    let (idx, n_src) = class_frame_indices(y_s, y_t, c);
    let n_tgt = idx.len() - n_src;
    if n_src == 0 {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Source,
        });
    }
    if n_tgt == 0 {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Target,
        });
    }
    let n = y_s.len() + y_t.len();
    let lv_star = variance_laplacian_star(idx.len())?;
    let lw_star = match form {
        WithinForm::BlockCentered => within_laplacian_star(n_src, n_tgt)?,
        WithinForm::Literal => within_laplacian_star_literal(n_src, n_tgt)?,
    };
    Ok(ClassLaplacianSet {
        class: c,
        l_v: embed(&lv_star, &idx, n),
        l_w: embed(&lw_star, &idx, n),
        weight: implicit_weight(n_src, n_tgt)?,
        counts: (n_src, n_tgt),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterClassLaplacian {
    pub side: DomainSide,
    pub i: usize,
    pub j: usize,
    /// Embedded, already multiplied by `weight`.
    pub l_b: SymMatrix,
    pub weight: f64,
}

/// Inter-class Laplacian for classes `i`, `j` of one domain.
///
/// `labels` are that domain's labels; `offset` is the domain's first global index
/// (`0` for source, `n_s` for target) and `n_st` the frame size.
pub fn build_interclass(
    labels: &[usize],
    side: DomainSide,
    i: usize,
    j: usize,
    n_st: usize,
    offset: usize,
    weight_mode: WeightMode,
) -> Result<InterClassLaplacian> {
    if i == j {
        return Err(Error::invalid(format!("inter-class Laplacian needs i != j, got {i}")));
    }
    if offset + labels.len() > n_st {
        return Err(Error::invalid(format!(
            "domain block [{offset}, {}) exceeds frame size {n_st}",
            offset + labels.len()
        )));
    }
    let idx_i = class_indices(labels, i);
    let idx_j = class_indices(labels, j);
    for (class, idx) in [(i, &idx_i), (j, &idx_j)] {
        if idx.is_empty() {
            return Err(Error::ClassAbsent { class, side });
        }
    }
    let (star, weight) = interclass_star(idx_i.len(), idx_j.len(), weight_mode)?;
    let idx: Vec<usize> = idx_i.iter().chain(&idx_j).map(|k| offset + k).collect();
    let mut out = DMatrix::zeros(n_st, n_st);
    accumulate_star(&mut out, &idx, &star, weight);
    Ok(InterClassLaplacian {
        side,
        i,
        j,
        l_b: SymMatrix::symmetrized(out),
        weight,
    })
}

/// Unweighted inter-class star matrix over `[class i | class j]` and its weight.
pub(crate) fn interclass_star(ni: usize, nj: usize, mode: WeightMode) -> Result<(SymMatrix, f64)> {
    let weight = match mode {
        WeightMode::Product => (ni + nj) as f64 / (ni as f64 * nj as f64),
        WeightMode::Sum => (ni + nj) as f64 / (ni + nj) as f64,
    };
    let mut star = centering_matrix(ni + nj)?;
    star.add_scaled(&block_centering(&[ni, nj])?, -1.0);
    Ok((star, weight))
}

/// Per-domain, per-class block centering over the frame: `X·L·Xᵀ` is the sum
/// of the source and target within-class scatters.
pub fn within_class_laplacian(y_s: &[usize], y_t: &[usize], classes: usize) -> SymMatrix {
    let n_s = y_s.len();
    let n = n_s + y_t.len();
    let mut out = DMatrix::zeros(n, n);
    for (labels, offset) in [(y_s, 0), (y_t, n_s)] {
        for c in 1..=classes {
            let idx: Vec<usize> = class_indices(labels, c).into_iter().map(|k| offset + k).collect();
            if idx.is_empty() {
                continue;
            }
            let h = centering_matrix(idx.len()).expect("non-empty class");
            accumulate_star(&mut out, &idx, &h, 1.0);
        }
    }
    SymMatrix::symmetrized(out)
}

/// Per-domain between-class Laplacian: `X·L·Xᵀ` is the sum of the source and
/// target between-class scatters `S_b`.
pub fn between_class_laplacian(y_s: &[usize], y_t: &[usize], classes: usize) -> SymMatrix {
    let n_s = y_s.len();
    let n = n_s + y_t.len();
    let mut out = DMatrix::zeros(n, n);
    for (labels, offset) in [(y_s, 0), (y_t, n_s)] {
        if labels.is_empty() {
            continue;
        }
        let idx: Vec<usize> = (offset..offset + labels.len()).collect();
        let h = centering_matrix(labels.len()).expect("non-empty domain");
        accumulate_star(&mut out, &idx, &h, 1.0);
    }
    let within = within_class_laplacian(y_s, y_t, classes);
    out -= within.as_matrix();
    SymMatrix::symmetrized(out)
}
