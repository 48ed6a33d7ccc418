//! MMD matrices, scatter matrices and implicit class weights, together with
//! executable checks of the three scatter/MMD identities the method rests on:
//!
//! * pairwise form of the between-class scatter,
//!   `tr(AᵀS_bA) = (1/n)·Σ_{i<j} nⁱnʲ·tr(AᵀDⁱʲA)`;
//! * `S_v = S_w + S_b`;
//! * class-wise MMD as a weighted scatter difference,
//!   `tr(AᵀXM_cXᵀA) = w_c·[tr(Aᵀ(S_st)_v^c A) − tr(Aᵀ(S_st)_w^c A)]`
//!   with `w_c = (n_s^c + n_t^c)/(n_s^c·n_t^c)`.
//!
//! Labels are 1-based (`1..=C`). Samples are matrix columns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DomainSide, Error, Result};
use crate::matrixcore::{sandwich, trace_quadratic, SymMatrix};

/// A feature matrix (`m × n`, columns are samples) with 1-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    x: DMatrix<f64>,
    y: Vec<usize>,
    classes: usize,
}

impl LabeledData {
    pub fn new(x: DMatrix<f64>, y: Vec<usize>, classes: usize) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::invalid("labeled data needs at least one sample"));
        }
        if y.len() != x.ncols() {
            return Err(Error::invalid(format!(
                "{} labels for {} samples",
                y.len(),
                x.ncols()
            )));
        }
        if let Some(bad) = y.iter().find(|&&l| l == 0 || l > classes) {
            return Err(Error::invalid(format!(
                "label {bad} outside 1..={classes}"
            )));
        }
        Ok(Self { x, y, classes })
    }

    /// Infers the class count from the largest label.
    pub fn from_labels(x: DMatrix<f64>, y: Vec<usize>) -> Result<Self> {
        let classes = y.iter().copied().max().unwrap_or(0);
        Self::new(x, y, classes)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// Per-class sample counts, index `c - 1` for class `c`.
    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.y, self.classes)
    }

    pub fn class_columns(&self, c: usize) -> DMatrix<f64> {
        select_columns(&self.x, &class_indices(&self.y, c))
    }

    pub fn class_mean(&self, c: usize) -> Option<DVector<f64>> {
        let idx = class_indices(&self.y, c);
        if idx.is_empty() {
            return None;
        }
        Some(column_mean(&select_columns(&self.x, &idx)))
    }
}

pub(crate) fn class_counts(y: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for &l in y {
        if (1..=classes).contains(&l) {
            counts[l - 1] += 1;
        }
    }
    counts
}

pub(crate) fn class_indices(y: &[usize], c: usize) -> Vec<usize> {
    y.iter()
        .enumerate()
        .filter_map(|(i, &l)| (l == c).then_some(i))
        .collect()
}

pub(crate) fn select_columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), idx.len(), |r, j| x[(r, idx[j])])
}

pub(crate) fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    x.column_mean()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MmdKind {
    Marginal,
    Class(usize),
}

/// An `n_st × n_st` MMD coefficient matrix over the `[source | target]` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdMatrix {
    pub m: SymMatrix,
    pub kind: MmdKind,
    /// `(n_s, n_t)` for the marginal matrix, `(n_s^c, n_t^c)` for a class matrix.
    pub counts: (usize, usize),
}

/// Marginal MMD matrix `M_0`.
pub fn build_m0(n_s: usize, n_t: usize) -> Result<MmdMatrix> {
    if n_s == 0 || n_t == 0 {
        return Err(Error::invalid(format!(
            "marginal MMD needs both domains non-empty, got ({n_s}, {n_t})"
        )));
    }
    let ss = 1.0 / (n_s as f64 * n_s as f64);
    let tt = 1.0 / (n_t as f64 * n_t as f64);
    let st = -1.0 / (n_s as f64 * n_t as f64);
    let n = n_s + n_t;
    let m = DMatrix::from_fn(n, n, |i, j| match (i < n_s, j < n_s) {
        (true, true) => ss,
        (false, false) => tt,
        _ => st,
    });
    Ok(MmdMatrix {
        m: SymMatrix::symmetrized(m),
        kind: MmdKind::Marginal,
        counts: (n_s, n_t),
    })
}

/// Class-wise MMD matrix `M_c` for class `c`.
///
/// Fails with [`Error::ClassAbsent`] when either domain has no class-`c` sample;
/// the coefficients are undefined there and the caller decides whether to skip.
pub fn build_mc(y_s: &[usize], y_t: &[usize], c: usize) -> Result<MmdMatrix> {
    let src = class_indices(y_s, c);
    let tgt = class_indices(y_t, c);
    if src.is_empty() {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Source,
        });
    }
    if tgt.is_empty() {
        return Err(Error::ClassAbsent {
            class: c,
            side: DomainSide::Target,
        });
    }
    let (ns, nt) = (src.len() as f64, tgt.len() as f64);
    let n_s = y_s.len();
    let n = n_s + y_t.len();
    let mut in_source = vec![None; n];
    for &i in &src {
        in_source[i] = Some(true);
    }
    for &j in &tgt {
        in_source[n_s + j] = Some(false);
    }
    let mut m = DMatrix::zeros(n, n);
    let members: Vec<usize> = src.iter().copied().chain(tgt.iter().map(|j| n_s + j)).collect();
    for &p in &members {
        for &q in &members {
            m[(p, q)] = match (in_source[p], in_source[q]) {
                (Some(true), Some(true)) => 1.0 / (ns * ns),
                (Some(false), Some(false)) => 1.0 / (nt * nt),
                _ => -1.0 / (ns * nt),
            };
        }
    }
    Ok(MmdMatrix {
        m: SymMatrix::symmetrized(m),
        kind: MmdKind::Class(c),
        counts: (src.len(), tgt.len()),
    })
}

/// Total scatter `S_v = Σ (x_i − m)(x_i − m)ᵀ`.
pub fn scatter_total(x: &DMatrix<f64>) -> SymMatrix {
    if x.ncols() == 0 {
        return SymMatrix::zeros(x.nrows());
    }
    let mean = column_mean(x);
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    SymMatrix::symmetrized(&centered * centered.transpose())
}

/// Within-class scatter `S_w`; empty classes contribute nothing.
pub fn scatter_within(d: &LabeledData) -> SymMatrix {
    let mut sw = SymMatrix::zeros(d.m());
    for c in 1..=d.classes() {
        let xc = d.class_columns(c);
        if xc.ncols() > 0 {
            sw.add_scaled(&scatter_total(&xc), 1.0);
        }
    }
    sw
}

/// Between-class scatter `S_b = Σ nⁱ(mⁱ − m)(mⁱ − m)ᵀ`.
pub fn scatter_between(d: &LabeledData) -> SymMatrix {
    let mean = column_mean(d.x());
    let mut sb = DMatrix::zeros(d.m(), d.m());
    for (ci, &count) in d.class_counts().iter().enumerate() {
        if count == 0 {
            continue;
        }
        let diff = d.class_mean(ci + 1).expect("non-empty class") - &mean;
        sb += (&diff * diff.transpose()) * count as f64;
    }
    SymMatrix::symmetrized(sb)
}

/// `Dⁱʲ = (mⁱ − mʲ)(mⁱ − mʲ)ᵀ`.
pub fn pairwise_mean_outer(d: &LabeledData, i: usize, j: usize) -> Result<SymMatrix> {
    if i == j {
        return Err(Error::invalid(format!("pairwise term needs distinct classes, got {i} twice")));
    }
    let mi = d.class_mean(i).ok_or(Error::ClassAbsent {
        class: i,
        side: DomainSide::Source,
    })?;
    let mj = d.class_mean(j).ok_or(Error::ClassAbsent {
        class: j,
        side: DomainSide::Source,
    })?;
    let diff = mi - mj;
    Ok(SymMatrix::symmetrized(&diff * diff.transpose()))
}

/// The weight `(n_s^c + n_t^c)/(n_s^c·n_t^c)` with which class `c`'s scatter terms
/// sit inside the class-wise MMD.
pub fn implicit_weight(n_s_c: usize, n_t_c: usize) -> Result<f64> {
    if n_s_c == 0 || n_t_c == 0 {
        return Err(Error::invalid(format!(
            "implicit weight needs non-empty class counts, got ({n_s_c}, {n_t_c})"
        )));
    }
    Ok((n_s_c + n_t_c) as f64 / (n_s_c as f64 * n_t_c as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSet {
    pub s_v: SymMatrix,
    pub s_w: SymMatrix,
    pub s_b: SymMatrix,
}

impl ScatterSet {
    pub fn compute(d: &LabeledData) -> Self {
        Self {
            s_v: scatter_total(d.x()),
            s_w: scatter_within(d),
            s_b: scatter_between(d),
        }
    }
}

fn relative(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(1.0)
}

/// Relative residual of the pairwise between-class identity at projection `a`.
pub fn verify_lemma1(d: &LabeledData, a: &DMatrix<f64>) -> Result<f64> {
    let lhs = trace_quadratic(a, &scatter_between(d))?;
    let counts = d.class_counts();
    let mut rhs = 0.0;
    for i in 1..=d.classes() {
        for j in (i + 1)..=d.classes() {
            if counts[i - 1] == 0 || counts[j - 1] == 0 {
                continue;
            }
            let dij = pairwise_mean_outer(d, i, j)?;
            rhs += (counts[i - 1] * counts[j - 1]) as f64 * trace_quadratic(a, &dij)?;
        }
    }
    rhs /= d.n() as f64;
    Ok(relative(lhs, rhs))
}

/// `‖S_v − S_w − S_b‖_F / max(1, ‖S_v‖_F)`.
pub fn verify_lemma2(d: &LabeledData) -> f64 {
    let s = ScatterSet::compute(d);
    let diff = s.s_v.as_matrix() - s.s_w.as_matrix() - s.s_b.as_matrix();
    diff.norm() / s.s_v.norm().max(1.0)
}

/// Relative residual between the class-`c` MMD term and its weighted scatter
/// decomposition at projection `a`.
pub fn verify_lemma3(
    source: &LabeledData,
    target: &LabeledData,
    a: &DMatrix<f64>,
    c: usize,
) -> Result<f64> {
    if source.m() != target.m() {
        return Err(Error::invalid(format!(
            "feature dimensions differ: {} vs {}",
            source.m(),
            target.m()
        )));
    }
    let mc = build_mc(source.labels(), target.labels(), c)?;
    let x_st = stack_columns(source.x(), target.x());
    let mmd_side = trace_quadratic(a, &sandwich(&x_st, &mc.m)?)?;

    let xs_c = source.class_columns(c);
    let xt_c = target.class_columns(c);
    let pooled = stack_columns(&xs_c, &xt_c);
    let s_v = scatter_total(&pooled);
    let mut s_w = scatter_total(&xs_c);
    s_w.add_scaled(&scatter_total(&xt_c), 1.0);
    let w = implicit_weight(xs_c.ncols(), xt_c.ncols())?;
    let decomposed = w * (trace_quadratic(a, &s_v)? - trace_quadratic(a, &s_w)?);
    Ok(relative(mmd_side, decomposed))
}

/// `[a | b]` column concatenation.
pub fn stack_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "row count mismatch in stack_columns");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::centering_matrix;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn random_labeled(rng: &mut ChaCha8Rng, m: usize, n: usize, classes: usize) -> LabeledData {
        let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-3.0..3.0));
        let y = (0..n).map(|_| rng.random_range(1..=classes)).collect();
        LabeledData::new(x, y, classes).unwrap()
    }

    fn random_projection(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
        let k = rng.random_range(1..=m);
        DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn labeled_data_validation() {
        let x = DMatrix::zeros(2, 3);
        assert!(LabeledData::new(x.clone(), vec![1, 2], 2).is_err());
        assert!(LabeledData::new(x.clone(), vec![1, 0, 2], 2).is_err());
        assert!(LabeledData::new(x.clone(), vec![1, 3, 2], 2).is_err());
        assert!(LabeledData::new(DMatrix::zeros(2, 0), vec![], 2).is_err());
        let d = LabeledData::from_labels(x, vec![1, 3, 3]).unwrap();
        assert_eq!(d.classes(), 3);
        assert_eq!(d.class_counts(), vec![1, 0, 2]);
    }

    #[test]
    fn m0_small_cases() {
        let m = build_m0(1, 1).unwrap();
        assert_eq!(m.m.as_matrix(), &mat(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let m = build_m0(2, 1).unwrap();
        let want = mat(
            3,
            3,
            &[0.25, 0.25, -0.5, 0.25, 0.25, -0.5, -0.5, -0.5, 1.0],
        );
        assert_eq!(m.m.as_matrix(), &want);
        assert!(build_m0(0, 3).is_err());
    }

    #[test]
    fn m0_quadratic_form_is_squared_mean_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let (ns, nt, m) = (rng.random_range(1..9), rng.random_range(1..9), rng.random_range(1..6));
            let xs = DMatrix::from_fn(m, ns, |_, _| rng.random_range(-2.0..2.0));
            let xt = DMatrix::from_fn(m, nt, |_, _| rng.random_range(-2.0..2.0));
            let a = random_projection(&mut rng, m);
            let x = stack_columns(&xs, &xt);
            let q = trace_quadratic(&a, &sandwich(&x, &build_m0(ns, nt).unwrap().m).unwrap()).unwrap();
            let direct = (a.transpose() * xs.column_mean() - a.transpose() * xt.column_mean()).norm_squared();
            assert_abs_diff_eq!(q, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn mc_small_cases() {
        let m = build_mc(&[1], &[1], 1).unwrap();
        assert_eq!(m.m.as_matrix(), &mat(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(m.counts, (1, 1));

        let m = build_mc(&[1, 1, 2], &[1, 2], 1).unwrap();
        let mut want = DMatrix::zeros(5, 5);
        let idx = [0, 1, 3];
        let block = [[0.25, 0.25, -0.5], [0.25, 0.25, -0.5], [-0.5, -0.5, 1.0]];
        for (a, &p) in idx.iter().enumerate() {
            for (b, &q) in idx.iter().enumerate() {
                want[(p, q)] = block[a][b];
            }
        }
        assert_eq!(m.m.as_matrix(), &want);

        assert!(matches!(
            build_mc(&[1], &[2], 1),
            Err(Error::ClassAbsent { class: 1, side: DomainSide::Target })
        ));
    }

    #[test]
    fn mmd_matrices_have_zero_row_sums_and_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let ys: Vec<usize> = (0..rng.random_range(2..15)).map(|_| rng.random_range(1..=3)).collect();
            let yt: Vec<usize> = (0..rng.random_range(2..15)).map(|_| rng.random_range(1..=3)).collect();
            let mut mats = vec![build_m0(ys.len(), yt.len()).unwrap()];
            for c in 1..=3 {
                if let Ok(mc) = build_mc(&ys, &yt, c) {
                    mats.push(mc);
                }
            }
            for mm in mats {
                for rs in mm.m.row_sums() {
                    assert_abs_diff_eq!(rs, 0.0, epsilon = 1e-12);
                }
                let scale = mm.m.amax().max(1.0);
                assert!(mm.m.min_eigenvalue() >= -1e-10 * scale);
            }
        }
    }

    #[test]
    fn scatter_total_cases() {
        assert_eq!(scatter_total(&mat(2, 1, &[3.0, 4.0])).as_matrix(), &DMatrix::zeros(2, 2));
        assert_abs_diff_eq!(scatter_total(&mat(1, 2, &[-1.0, 1.0]))[(0, 0)], 2.0, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = DMatrix::from_fn(4, 9, |_, _| rng.random_range(-1.0..1.0));
        let oracle = sandwich(&x, &centering_matrix(9).unwrap()).unwrap();
        assert!(scatter_total(&x).max_abs_diff(&oracle) <= 1e-10);
    }

    #[test]
    fn scatter_within_cases() {
        let d = LabeledData::new(mat(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), vec![1, 2, 3], 3).unwrap();
        assert_eq!(scatter_within(&d).amax(), 0.0);

        let d = LabeledData::new(mat(1, 3, &[-1.0, 1.0, 5.0]), vec![1, 1, 2], 2).unwrap();
        assert_abs_diff_eq!(scatter_within(&d)[(0, 0)], 2.0, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let d = random_labeled(&mut rng, 3, 20, 4);
        let mut oracle = SymMatrix::zeros(3);
        for c in 1..=4 {
            oracle.add_scaled(&scatter_total(&d.class_columns(c)), 1.0);
        }
        assert!(scatter_within(&d).max_abs_diff(&oracle) <= 1e-12);
    }

    #[test]
    fn scatter_between_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let d = random_labeled(&mut rng, 3, 10, 1);
        assert!(scatter_between(&d).amax() <= 1e-12);

        let d = LabeledData::new(mat(1, 2, &[-1.0, 1.0]), vec![1, 2], 2).unwrap();
        assert_abs_diff_eq!(scatter_between(&d)[(0, 0)], 2.0, epsilon = 1e-15);

        let d = random_labeled(&mut rng, 5, 30, 3);
        let mut oracle = scatter_total(d.x());
        oracle.add_scaled(&scatter_within(&d), -1.0);
        assert!(scatter_between(&d).max_abs_diff(&oracle) <= 1e-10);
    }

    #[test]
    fn between_scatter_rank_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let d = random_labeled(&mut rng, 8, 40, 3);
        let eigs = scatter_between(&d).eigenvalues();
        let top = eigs.last().copied().unwrap();
        let significant = eigs.iter().filter(|&&e| e > 1e-10 * top).count();
        assert!(significant <= 2);
        assert!(eigs[0] >= -1e-10 * top);
    }

    #[test]
    fn pairwise_mean_outer_cases() {
        let d = LabeledData::new(mat(1, 4, &[-1.0, 1.0, 2.0, 4.0]), vec![1, 1, 2, 2], 2).unwrap();
        assert_abs_diff_eq!(pairwise_mean_outer(&d, 1, 2).unwrap()[(0, 0)], 9.0, epsilon = 1e-15);
        assert_eq!(pairwise_mean_outer(&d, 1, 2).unwrap(), pairwise_mean_outer(&d, 2, 1).unwrap());

        let d = LabeledData::new(mat(1, 4, &[-1.0, 1.0, 2.0, -2.0]), vec![1, 1, 2, 2], 3).unwrap();
        assert_eq!(pairwise_mean_outer(&d, 1, 2).unwrap().amax(), 0.0);
        assert!(matches!(pairwise_mean_outer(&d, 1, 3), Err(Error::ClassAbsent { class: 3, .. })));
        assert!(pairwise_mean_outer(&d, 2, 2).is_err());
    }

    #[test]
    fn implicit_weight_values() {
        assert_abs_diff_eq!(implicit_weight(10, 10).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(implicit_weight(100, 50).unwrap(), 0.03, epsilon = 1e-15);
        assert!(implicit_weight(0, 4).is_err());
    }

    #[test]
    fn lemma_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = random_labeled(&mut rng, 4, 12, 1);
        let a = random_projection(&mut rng, 4);
        assert_eq!(verify_lemma1(&d, &a).unwrap(), verify_lemma1(&d, &a).unwrap());
        assert!(verify_lemma1(&d, &a).unwrap() <= 1e-12);
        let d = random_labeled(&mut rng, 4, 12, 3);
        assert_eq!(verify_lemma1(&d, &DMatrix::zeros(4, 2)).unwrap(), 0.0);

        // each class a single point: S_w = 0, S_b = S_v
        let x = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
        let d = LabeledData::new(x, vec![1, 2, 3, 4], 4).unwrap();
        let s = ScatterSet::compute(&d);
        assert_eq!(s.s_w.amax(), 0.0);
        assert!(s.s_b.max_abs_diff(&s.s_v) <= 1e-12);
        // one class: S_b = 0, S_w = S_v
        let d = random_labeled(&mut rng, 3, 7, 1);
        let s = ScatterSet::compute(&d);
        assert!(s.s_b.amax() <= 1e-12);
        assert!(s.s_w.max_abs_diff(&s.s_v) <= 1e-12);
    }

    #[test]
    fn lemma3_edge_cases() {
        // one sample per domain: both sides are ‖x_s − x_t‖² under A = I
        let s = LabeledData::new(mat(2, 1, &[1.0, 2.0]), vec![1], 1).unwrap();
        let t = LabeledData::new(mat(2, 1, &[4.0, -2.0]), vec![1], 1).unwrap();
        let eye = DMatrix::identity(2, 2);
        assert!(verify_lemma3(&s, &t, &eye, 1).unwrap() <= 1e-12);
        let mc = build_mc(s.labels(), t.labels(), 1).unwrap();
        let q = trace_quadratic(&eye, &sandwich(&stack_columns(s.x(), t.x()), &mc.m).unwrap()).unwrap();
        assert_abs_diff_eq!(q, 25.0, epsilon = 1e-12);

        // identical class means
        let s = LabeledData::new(mat(1, 2, &[-1.0, 1.0]), vec![1, 1], 1).unwrap();
        let t = LabeledData::new(mat(1, 3, &[-2.0, 0.0, 2.0]), vec![1, 1, 1], 1).unwrap();
        let eye = DMatrix::identity(1, 1);
        let mc = build_mc(s.labels(), t.labels(), 1).unwrap();
        let q = trace_quadratic(&eye, &sandwich(&stack_columns(s.x(), t.x()), &mc.m).unwrap()).unwrap();
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
        assert!(verify_lemma3(&s, &t, &eye, 1).unwrap() <= 1e-10);

        assert!(matches!(
            verify_lemma3(&s, &LabeledData::new(mat(1, 1, &[0.0]), vec![2], 2).unwrap(), &eye, 1),
            Err(Error::ClassAbsent { .. })
        ));
    }

    #[test]
    fn lemma_identities_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..100 {
            let m = rng.random_range(1..=10);
            let classes = rng.random_range(1..=5);
            let n = rng.random_range(2..=50);
            let d = random_labeled(&mut rng, m, n, classes);
            let a = random_projection(&mut rng, m);
            assert!(verify_lemma1(&d, &a).unwrap() <= 1e-10);
            assert!(verify_lemma2(&d) <= 1e-10);

            let nt = rng.random_range(2..=50);
            let t = random_labeled(&mut rng, m, nt, classes);
            for c in 1..=classes {
                match verify_lemma3(&d, &t, &a, c) {
                    Ok(r) => assert!(r <= 1e-10, "lemma 3 residual {r}"),
                    Err(Error::ClassAbsent { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}
