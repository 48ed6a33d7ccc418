//! Left-hand (objective) and right-hand (variance constraint) matrices for the
//! plain class-wise MMD objective, the two discriminative strategies and the
//! explicit-distance ablations, plus the projection solve.
//!
//! Every objective has the form `min tr(AᵀXLXᵀA) + α‖A‖_F²` subject to
//! `AᵀX H Xᵀ A = I`, which becomes the generalized eigenproblem
//! `(XLXᵀ + αI)·a = θ·(XHXᵀ)·a`. Only the frame Laplacian `L` differs:
//!
//! | objective  | `L`                                                                   |
//! |------------|-----------------------------------------------------------------------|
//! | baseline   | `M_0 + Σ_c M_c`                                                       |
//! | strategy 1 | `M_0 + Σ_c w_c (L_v^c + β·L_w^c)`                                     |
//! | strategy 2 | `M_0 + λ Σ_c w_c (L_v^c − L_w^c) − (1 − λ) Σ_{i<j} (L_b^{ij} per domain)` |
//! | ablation   | `M_0 + Σ_c M_c + γ₁·L_within − γ₂·L_between`                          |
//!
//! Since `w_c (L_v^c − L_w^c) = M_c`, strategy 1 at `β = −1` and strategy 2 at
//! `λ = 1` coincide with the baseline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DomainSide, Error, Result};
use crate::laplacian::{
    accumulate_star, between_class_laplacian, class_frame_indices, interclass_star,
    variance_laplacian_star, within_class_laplacian, within_laplacian_star, WeightMode,
};
use crate::matrixcore::{sandwich, solve_generalized_eig, SymMatrix};
use crate::statistics::{build_m0, class_counts, class_indices, implicit_weight, scatter_total};

/// Which explicit distance terms an ablation run adds to the plain MMD objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationVariant {
    /// Intra-class distance, minimized.
    Dtra,
    /// Inter-class distance, maximized.
    Dter,
    Both,
}

impl AblationVariant {
    pub fn label(self) -> &'static str {
        match self {
            AblationVariant::Dtra => "D_tra",
            AblationVariant::Dter => "D_ter",
            AblationVariant::Both => "D_tra+D_ter",
        }
    }
}

pub const DEFAULT_GAMMA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Baseline,
    StrategyOne { beta: f64 },
    StrategyTwo { lambda: f64, weight_mode: WeightMode },
    Ablation { variant: AblationVariant, gamma1: f64, gamma2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeight {
    pub class: usize,
    pub n_s: usize,
    pub n_t: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub side: DomainSide,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMeta {
    pub objective: Objective,
    pub alpha: f64,
    /// Implicit weights of the classes that contributed class-wise terms.
    pub class_weights: Vec<ClassWeight>,
    /// Classes with no source or no target sample; their class-wise terms were dropped.
    pub skipped_classes: Vec<usize>,
    pub skipped_pairs: Vec<SkippedPair>,
    pub warnings: Vec<String>,
}

/// An immutable left/right matrix pair ready for the eigensolver.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub left: SymMatrix,
    pub right: SymMatrix,
    pub meta: AssemblyMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `m × k`.
    pub a: DMatrix<f64>,
    /// Ascending generalized eigenvalues.
    pub theta: Vec<f64>,
    /// Largest entry of `|Aᵀ(B + rI)A − I|`.
    pub constraint_residual: f64,
    pub eig_residual: f64,
    pub ridge_used: f64,
}

impl Projection {
    pub fn objective_value(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// `Z = AᵀX`.
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.transpose() * x
    }
}

pub fn assemble_baseline(x_st: &DMatrix<f64>, y_s: &[usize], y_t: &[usize], alpha: f64) -> Result<Assembly> {
    assemble(x_st, y_s, y_t, Objective::Baseline, alpha)
}

pub fn assemble_strategy1(
    x_st: &DMatrix<f64>,
    y_s: &[usize],
    y_t: &[usize],
    beta: f64,
    alpha: f64,
) -> Result<Assembly> {
    assemble(x_st, y_s, y_t, Objective::StrategyOne { beta }, alpha)
}

pub fn assemble_strategy2(
    x_st: &DMatrix<f64>,
    y_s: &[usize],
    y_t: &[usize],
    lambda: f64,
    alpha: f64,
    weight_mode: WeightMode,
) -> Result<Assembly> {
    assemble(x_st, y_s, y_t, Objective::StrategyTwo { lambda, weight_mode }, alpha)
}

pub fn assemble_ablation(
    x_st: &DMatrix<f64>,
    y_s: &[usize],
    y_t: &[usize],
    variant: AblationVariant,
    gamma1: f64,
    gamma2: f64,
    alpha: f64,
) -> Result<Assembly> {
    assemble(x_st, y_s, y_t, Objective::Ablation { variant, gamma1, gamma2 }, alpha)
}

/// Builds the frame Laplacian for `objective`, sandwiches it with `x_st` and adds `α·I`.
///
/// `x_st` holds source columns followed by target columns. `y_t` are the current
/// target pseudo labels; classes absent from either domain are skipped and
/// recorded in the metadata.
pub fn assemble(
    x_st: &DMatrix<f64>,
    y_s: &[usize],
    y_t: &[usize],
    objective: Objective,
    alpha: f64,
) -> Result<Assembly> {
    let (n_s, n_t) = (y_s.len(), y_t.len());
    if x_st.ncols() != n_s + n_t {
        return Err(Error::invalid(format!(
            "data has {} samples but {} source + {} target labels were given",
            x_st.ncols(),
            n_s,
            n_t
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if y_s.iter().chain(y_t).any(|&l| l == 0) {
        return Err(Error::invalid("labels are 1-based"));
    }

    let mut warnings = Vec::new();
    match objective {
        Objective::StrategyOne { beta } if !(-1.0..=1.0).contains(&beta) => {
            warnings.push(format!("beta {beta} outside [-1, 1]"));
        }
        Objective::StrategyTwo { lambda, .. } if !(0.0..=1.0).contains(&lambda) => {
            warnings.push(format!("lambda {lambda} outside [0, 1]"));
        }
        Objective::Ablation { gamma1, gamma2, .. } if gamma1 < 0.0 || gamma2 < 0.0 => {
            return Err(Error::invalid(format!(
                "ablation weights must be >= 0, got ({gamma1}, {gamma2})"
            )));
        }
        _ => {}
    }

    let classes = y_s.iter().chain(y_t).copied().max().unwrap_or(0);
    let src_counts = class_counts(y_s, classes);
    let tgt_counts = class_counts(y_t, classes);

    let mut frame = build_m0(n_s, n_t)?.m.into_inner();
    let mut class_weights = Vec::new();
    let mut skipped_classes = Vec::new();

    for c in 1..=classes {
        let (ns, nt) = (src_counts[c - 1], tgt_counts[c - 1]);
        if ns == 0 || nt == 0 {
            skipped_classes.push(c);
            continue;
        }
        let w = implicit_weight(ns, nt)?;
        class_weights.push(ClassWeight {
            class: c,
            n_s: ns,
            n_t: nt,
            weight: w,
        });
        let (idx, _) = class_frame_indices(y_s, y_t, c);
        match objective {
            Objective::Baseline | Objective::Ablation { .. } => {
                accumulate_star(&mut frame, &idx, &class_mmd_star(ns, nt), 1.0);
            }
            Objective::StrategyOne { beta } => {
                accumulate_star(&mut frame, &idx, &variance_laplacian_star(ns + nt)?, w);
                accumulate_star(&mut frame, &idx, &within_laplacian_star(ns, nt)?, w * beta);
            }
            Objective::StrategyTwo { lambda, .. } => {
                accumulate_star(&mut frame, &idx, &variance_laplacian_star(ns + nt)?, lambda * w);
                accumulate_star(&mut frame, &idx, &within_laplacian_star(ns, nt)?, -lambda * w);
            }
        }
    }
    if class_weights.is_empty() {
        return Err(Error::UnusableLabels(format!(
            "none of the {classes} classes has samples in both domains"
        )));
    }

    let mut skipped_pairs = Vec::new();
    match objective {
        Objective::StrategyTwo { lambda, weight_mode } => {
            for (side, labels, offset) in [(DomainSide::Source, y_s, 0), (DomainSide::Target, y_t, n_s)] {
                for i in 1..=classes {
                    for j in (i + 1)..=classes {
                        let idx_i = class_indices(labels, i);
                        let idx_j = class_indices(labels, j);
                        if idx_i.is_empty() || idx_j.is_empty() {
                            skipped_pairs.push(SkippedPair { side, i, j });
                            continue;
                        }
                        let (star, weight) = interclass_star(idx_i.len(), idx_j.len(), weight_mode)?;
                        let idx: Vec<usize> = idx_i.iter().chain(&idx_j).map(|k| offset + k).collect();
                        accumulate_star(&mut frame, &idx, &star, -(1.0 - lambda) * weight);
                    }
                }
            }
        }
        Objective::Ablation { variant, gamma1, gamma2 } => {
            if matches!(variant, AblationVariant::Dtra | AblationVariant::Both) {
                frame += within_class_laplacian(y_s, y_t, classes).as_matrix() * gamma1;
            }
            if matches!(variant, AblationVariant::Dter | AblationVariant::Both) {
                frame -= between_class_laplacian(y_s, y_t, classes).as_matrix() * gamma2;
            }
        }
        _ => {}
    }

    let mut left = sandwich(x_st, &SymMatrix::symmetrized(frame))?;
    left.add_diagonal(alpha);
    let right = scatter_total(x_st);

    Ok(Assembly {
        left,
        right,
        meta: AssemblyMeta {
            objective,
            alpha,
            class_weights,
            skipped_classes,
            skipped_pairs,
            warnings,
        },
    })
}

/// Class-`c` MMD coefficients on `[source-c | target-c]`.
fn class_mmd_star(ns: usize, nt: usize) -> SymMatrix {
    let (a, b) = (ns as f64, nt as f64);
    let n = ns + nt;
    SymMatrix::symmetrized(DMatrix::from_fn(n, n, |i, j| match (i < ns, j < ns) {
        (true, true) => 1.0 / (a * a),
        (false, false) => 1.0 / (b * b),
        _ => -1.0 / (a * b),
    }))
}

/// The `k` smallest generalized eigenvectors of `(left, right)`.
pub fn learn_projection(asm: &Assembly, k: usize, ridge: f64) -> Result<Projection> {
    let eig = solve_generalized_eig(&asm.left, &asm.right, k, ridge)?;
    let mut b_r = asm.right.clone();
    b_r.add_diagonal(eig.ridge_used);
    let gram = eig.vectors.transpose() * b_r.as_matrix() * &eig.vectors;
    let constraint_residual = (gram - DMatrix::identity(k, k)).amax();
    Ok(Projection {
        a: eig.vectors,
        theta: eig.values,
        constraint_residual,
        eig_residual: eig.residual,
        ridge_used: eig.ridge_used,
    })
}
