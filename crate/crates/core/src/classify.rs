//! Neighborhood graphs, closed-form graph label propagation and a 1-NN baseline.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::SymMatrix;

/// Guard added to norms before dividing, so zero columns have zero cosine to everything.
const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `(1 + cos)/2`; nearest means most similar.
    #[default]
    Cosine,
    /// `exp(−d²/(2σ²))` with `σ` the median pairwise distance.
    Euclidean,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub w: SymMatrix,
    pub p: usize,
    pub metric: Metric,
}

/// `C × n` class scores, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub f: DMatrix<f64>,
}

impl LabelMatrix {
    pub fn one_hot(labels: &[usize], classes: usize) -> Result<Self> {
        let mut f = DMatrix::zeros(classes, labels.len());
        for (i, &l) in labels.iter().enumerate() {
            if l == 0 || l > classes {
                return Err(Error::invalid(format!("label {l} outside 1..={classes}")));
            }
            f[(l - 1, i)] = 1.0;
        }
        Ok(LabelMatrix { f })
    }

    pub fn classes(&self) -> usize {
        self.f.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxResult {
    pub labels: Vec<usize>,
    /// Target indices whose score column was all zeros.
    pub isolated: Vec<usize>,
}

fn cosine_similarities(z: &DMatrix<f64>) -> DMatrix<f64> {
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm()).collect();
    let gram = z.transpose() * z;
    DMatrix::from_fn(z.ncols(), z.ncols(), |i, j| {
        let cos = gram[(i, j)] / ((norms[i] + NORM_EPS) * (norms[j] + NORM_EPS));
        ((1.0 + cos) / 2.0).clamp(0.0, 1.0)
    })
}

fn squared_distances(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.ncols();
    DMatrix::from_fn(n, n, |i, j| (z.column(i) - z.column(j)).norm_squared())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Pairwise similarity (higher means closer) under `metric`, diagonal included.
fn similarities(z: &DMatrix<f64>, metric: Metric) -> DMatrix<f64> {
    match metric {
        Metric::Cosine => cosine_similarities(z),
        Metric::Euclidean => {
            let d2 = squared_distances(z);
            let n = z.ncols();
            let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
            for j in 0..n {
                for i in 0..j {
                    upper.push(d2[(i, j)].sqrt());
                }
            }
            let sigma = median(upper);
            if sigma <= 0.0 {
                // every point coincides
                return DMatrix::from_element(n, n, 1.0);
            }
            d2.map(|d| (-d / (2.0 * sigma * sigma)).exp())
        }
    }
}

/// Indices of the `p` most similar other columns; ties go to the lower index.
fn nearest(sim_row: impl Iterator<Item = f64>, self_idx: usize, p: usize) -> Vec<usize> {
    let mut order: Vec<(usize, f64)> = sim_row.enumerate().filter(|&(j, _)| j != self_idx).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().take(p).map(|(j, _)| j).collect()
}

/// Symmetrized `p`-nearest-neighbor similarity graph over the columns of `z`.
pub fn build_knn_graph(z: &DMatrix<f64>, p: usize, metric: Metric) -> Result<SimilarityGraph> {
    let n = z.ncols();
    if p == 0 || p >= n {
        return Err(Error::invalid(format!(
            "neighbor count must be in 1..{n}, got {p}"
        )));
    }
    let sim = similarities(z, metric);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in nearest(sim.row(i).iter().copied(), i, p) {
            w[(i, j)] = sim[(i, j)];
            w[(j, i)] = sim[(i, j)];
        }
    }
    Ok(SimilarityGraph {
        w: SymMatrix::symmetrized(w),
        p,
        metric,
    })
}

/// `L = diag(colsums(W)) − W`.
pub fn graph_laplacian(g: &SimilarityGraph) -> SymMatrix {
    let w = g.w.as_matrix();
    let mut l = -w.clone();
    for (j, col) in w.column_iter().enumerate() {
        l[(j, j)] += col.sum();
    }
    SymMatrix::symmetrized(l)
}

/// Default regularizer for the target block: `1e-9 · mean(diag L^{tt})`.
pub fn default_eps(l: &SymMatrix, n_s: usize) -> f64 {
    let n = l.order();
    if n <= n_s {
        return 0.0;
    }
    let mean = (n_s..n).map(|i| l[(i, i)]).sum::<f64>() / (n - n_s) as f64;
    1e-9 * mean
}

/// `F_t = F_s·W^{st}·(L^{tt} + eps·I)^{−1}`, the stationary point of the
/// smoothness objective with the source scores held fixed.
pub fn propagate_labels(f_s: &LabelMatrix, l: &SymMatrix, eps: f64) -> Result<LabelMatrix> {
    let n_s = f_s.f.ncols();
    let n = l.order();
    if n_s > n {
        return Err(Error::invalid(format!(
            "{n_s} source columns but the Laplacian has order {n}"
        )));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be finite and >= 0, got {eps}")));
    }
    let n_t = n - n_s;
    let mut l_tt = l.view((n_s, n_s), (n_t, n_t)).into_owned();
    for i in 0..n_t {
        l_tt[(i, i)] += eps;
    }
    let w_st = -l.view((0, n_s), (n_s, n_t)).into_owned();
    let rhs = &f_s.f * w_st;
    // F_t·M = R with M symmetric ⇔ M·F_tᵀ = Rᵀ
    let lu = l_tt.lu();
    let f_t_tr = lu.solve(&rhs.transpose()).ok_or_else(|| {
        Error::NumericalFailure("target Laplacian block is singular; use eps > 0".into())
    })?;
    if f_t_tr.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "target Laplacian block is singular; use eps > 0".into(),
        ));
    }
    Ok(LabelMatrix { f: f_t_tr.transpose() })
}

/// Per-column argmax as 1-based labels; ties go to the smaller class and
/// all-zero columns become class 1 and are reported as isolated.
pub fn argmax_labels(f_t: &LabelMatrix) -> ArgmaxResult {
    let mut labels = Vec::with_capacity(f_t.f.ncols());
    let mut isolated = Vec::new();
    for (i, col) in f_t.f.column_iter().enumerate() {
        if col.iter().all(|&v| v == 0.0) {
            isolated.push(i);
            labels.push(1);
            continue;
        }
        let mut best = 0;
        for c in 1..col.len() {
            if col[c] > col[best] {
                best = c;
            }
        }
        labels.push(best + 1);
    }
    ArgmaxResult { labels, isolated }
}

/// Builds the graph over `[z_s | z_t]`, propagates the source labels and
/// returns the target argmax.
pub fn glp_classify(
    z_s: &DMatrix<f64>,
    y_s: &[usize],
    z_t: &DMatrix<f64>,
    classes: usize,
    p: usize,
    metric: Metric,
) -> Result<ArgmaxResult> {
    let z = crate::statistics::stack_columns(z_s, z_t);
    let graph = build_knn_graph(&z, p, metric)?;
    let l = graph_laplacian(&graph);
    let f_s = LabelMatrix::one_hot(y_s, classes)?;
    let eps = default_eps(&l, z_s.ncols());
    let f_t = propagate_labels(&f_s, &l, eps)?;
    Ok(argmax_labels(&f_t))
}

/// Labels each target column with the label of its nearest source column.
pub fn one_nn_classify(z_s: &DMatrix<f64>, y_s: &[usize], z_t: &DMatrix<f64>, metric: Metric) -> Result<Vec<usize>> {
    if z_s.ncols() == 0 || z_s.ncols() != y_s.len() {
        return Err(Error::invalid(format!(
            "need at least one labeled source sample, got {} columns and {} labels",
            z_s.ncols(),
            y_s.len()
        )));
    }
    if z_s.nrows() != z_t.nrows() {
        return Err(Error::invalid("source and target dimensions differ"));
    }
    let src_norms: Vec<f64> = z_s.column_iter().map(|c| c.norm()).collect();
    let out = z_t
        .column_iter()
        .map(|t| {
            // smaller score is closer
            let score = |j: usize| match metric {
                Metric::Cosine => -t.dot(&z_s.column(j)) / ((t.norm() + NORM_EPS) * (src_norms[j] + NORM_EPS)),
                Metric::Euclidean => (t - z_s.column(j)).norm_squared(),
            };
            let mut best = 0;
            let mut best_score = score(0);
            for j in 1..z_s.ncols() {
                let s = score(j);
                if s.partial_cmp(&best_score) == Some(Ordering::Less) {
                    best = j;
                    best_score = s;
                }
            }
            y_s[best]
        })
        .collect();
    Ok(out)
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::invalid(format!(
            "{} predictions against {} truth labels",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}
