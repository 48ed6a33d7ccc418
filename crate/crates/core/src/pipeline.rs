//! The alternating adaptation loop, the ablation suite and oracle grid search.
//!
//! Each iteration learns a projection from the current target pseudo labels,
//! projects both domains, and refreshes the pseudo labels with the configured
//! classifier on the projected features.

use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, glp_classify, one_nn_classify, Metric};
use crate::dataio::{normalize_pair, unit_columns, NormMode};
use crate::error::{Error, Result};
use crate::laplacian::WeightMode;
use crate::objectives::{assemble, learn_projection, AblationVariant, ClassWeight, Objective, DEFAULT_GAMMA};
use crate::statistics::{select_columns, stack_columns, LabeledData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Plain marginal plus class-wise MMD.
    Baseline,
    S1,
    S2,
    Ablation(AblationVariant),
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "mmd" => Ok(Strategy::Baseline),
            "s1" => Ok(Strategy::S1),
            "s2" => Ok(Strategy::S2),
            "dtra" => Ok(Strategy::Ablation(AblationVariant::Dtra)),
            "dter" => Ok(Strategy::Ablation(AblationVariant::Dter)),
            "both" | "dtra+dter" => Ok(Strategy::Ablation(AblationVariant::Both)),
            other => Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    #[default]
    Glp,
    OneNn,
}

impl Classifier {
    pub fn label(self) -> &'static str {
        match self {
            Classifier::Glp => "GLP",
            Classifier::OneNn => "1-NN",
        }
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glp" => Ok(Classifier::Glp),
            "one_nn" | "1nn" | "knn" => Ok(Classifier::OneNn),
            other => Err(Error::invalid(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Named `(k, α)` defaults: `small` suits a few hundred samples of a few
/// hundred features, `large` bigger feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Small,
    Large,
}

impl Preset {
    pub fn k_alpha(self) -> (usize, f64) {
        match self {
            Preset::Small => (20, 0.05),
            Preset::Large => (100, 0.1),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Preset::Small),
            "large" => Ok(Preset::Large),
            other => Err(Error::invalid(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub strategy: Strategy,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub t_iters: usize,
    pub p_neighbors: usize,
    pub normalize: NormMode,
    pub classifier: Classifier,
    pub metric: Metric,
    pub ridge: f64,
    pub weight_mode: WeightMode,
    /// Provenance only; the loop itself draws no random numbers.
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        let (k, alpha) = Preset::Small.k_alpha();
        AdaptConfig {
            strategy: Strategy::S1,
            k,
            alpha,
            beta: 0.0,
            lambda: 0.8,
            gamma1: DEFAULT_GAMMA,
            gamma2: DEFAULT_GAMMA,
            t_iters: 5,
            p_neighbors: 20,
            normalize: NormMode::ZscoreL2,
            classifier: Classifier::Glp,
            metric: Metric::Cosine,
            ridge: 0.0,
            weight_mode: WeightMode::Product,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn with_preset(mut self, preset: Preset) -> Self {
        (self.k, self.alpha) = preset.k_alpha();
        self
    }

    pub fn objective(&self) -> Objective {
        match self.strategy {
            Strategy::Baseline => Objective::Baseline,
            Strategy::S1 => Objective::StrategyOne { beta: self.beta },
            Strategy::S2 => Objective::StrategyTwo {
                lambda: self.lambda,
                weight_mode: self.weight_mode,
            },
            Strategy::Ablation(variant) => Objective::Ablation {
                variant,
                gamma1: self.gamma1,
                gamma2: self.gamma2,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.t_iters == 0 || self.p_neighbors == 0 {
            return Err(Error::invalid(format!(
                "k, T and p must be >= 1 (got k={}, T={}, p={})",
                self.k, self.t_iters, self.p_neighbors
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("ridge", self.ridge)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.beta.is_finite() && self.lambda.is_finite()) {
            return Err(Error::invalid("beta and lambda must be finite"));
        }
        Ok(())
    }

    fn range_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.strategy == Strategy::S1 && !(-1.0..=1.0).contains(&self.beta) {
            out.push(format!("beta {} outside [-1, 1]", self.beta));
        }
        if self.strategy == Strategy::S2 && !(0.0..=1.0).contains(&self.lambda) {
            out.push(format!("lambda {} outside [0, 1]", self.lambda));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub accuracy: Option<f64>,
    /// Sum of the kept generalized eigenvalues.
    pub objective: f64,
    pub classes_skipped: Vec<usize>,
    pub implicit_weights: Vec<ClassWeight>,
    pub constraint_residual: f64,
    pub eig_residual: f64,
    pub ridge_used: f64,
    /// Target samples with no graph path to any source sample.
    pub isolated: usize,
    /// Pseudo labels that differ from the previous iteration's.
    pub label_changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptResult {
    pub final_labels: Vec<usize>,
    /// Accuracy of the 1-NN labels used to start the loop.
    pub initial_accuracy: Option<f64>,
    pub per_iteration: Vec<IterationRecord>,
    pub config: AdaptConfig,
    /// Subspace dimension and neighbor count after clamping to the data size.
    pub effective_k: usize,
    pub effective_p: usize,
    pub warnings: Vec<String>,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub timing_secs: f64,
}

impl AdaptResult {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.per_iteration.last().and_then(|r| r.accuracy)
    }

    pub fn iterations(&self) -> usize {
        self.per_iteration.len()
    }
}

/// Projected, unit-normalized embeddings from the last iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub z_s: DMatrix<f64>,
    pub z_t: DMatrix<f64>,
}

pub fn evaluate_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    classify::accuracy(pred, truth)
}

pub fn adapt(source: &LabeledData, target_x: &DMatrix<f64>, truth: Option<&[usize]>, cfg: &AdaptConfig) -> Result<AdaptResult> {
    adapt_with_embeddings(source, target_x, truth, cfg).map(|(r, _)| r)
}

pub fn adapt_with_embeddings(
    source: &LabeledData,
    target_x: &DMatrix<f64>,
    truth: Option<&[usize]>,
    cfg: &AdaptConfig,
) -> Result<(AdaptResult, Embeddings)> {
    let started = Instant::now();
    cfg.validate()?;
    let (m, n_s, n_t) = (source.m(), source.n(), target_x.ncols());
    if target_x.nrows() != m {
        return Err(Error::invalid(format!(
            "source has {m} features, target has {}",
            target_x.nrows()
        )));
    }
    if n_t == 0 {
        return Err(Error::invalid("target domain has no samples"));
    }
    if let Some(t) = truth {
        if t.len() != n_t {
            return Err(Error::invalid(format!("{} truth labels for {n_t} target samples", t.len())));
        }
    }
    let classes = source.classes();
    let y_s = source.labels();
    let accuracy = |pred: &[usize]| truth.map(|t| evaluate_accuracy(pred, t)).transpose();

    let mut warnings = cfg.range_warnings();
    let effective_k = cfg.k.min(m);
    if effective_k < cfg.k {
        warnings.push(format!("k = {} exceeds the feature dimension; using {m}", cfg.k));
    }
    let effective_p = cfg.p_neighbors.min(n_s + n_t - 1);
    if effective_p < cfg.p_neighbors && cfg.classifier == Classifier::Glp {
        warnings.push(format!(
            "p = {} exceeds the sample count; using {effective_p}",
            cfg.p_neighbors
        ));
    }

    let (x_s, x_t, _) = normalize_pair(source.x(), target_x, cfg.normalize)?;
    let x_st = stack_columns(&x_s, &x_t);
    let mut pseudo = one_nn_classify(&x_s, y_s, &x_t, cfg.metric)?;
    let initial_accuracy = accuracy(&pseudo)?;

    let objective = cfg.objective();
    let mut per_iteration = Vec::with_capacity(cfg.t_iters);
    let mut embeddings = None;
    for iteration in 1..=cfg.t_iters {
        let asm = assemble(&x_st, y_s, &pseudo, objective, cfg.alpha)?;
        let proj = learn_projection(&asm, effective_k, cfg.ridge)?;
        let z = unit_columns(&proj.project(&x_st));
        let z_s = select_columns(&z, &(0..n_s).collect::<Vec<_>>());
        let z_t = select_columns(&z, &(n_s..n_s + n_t).collect::<Vec<_>>());
        let (labels, isolated) = match cfg.classifier {
            Classifier::Glp => {
                let r = glp_classify(&z_s, y_s, &z_t, classes, effective_p, cfg.metric)?;
                (r.labels, r.isolated.len())
            }
            Classifier::OneNn => (one_nn_classify(&z_s, y_s, &z_t, cfg.metric)?, 0),
        };
        if isolated > 0 {
            warnings.push(format!(
                "iteration {iteration}: {isolated} isolated target samples assigned class 1"
            ));
        }
        let label_changes = labels.iter().zip(&pseudo).filter(|(a, b)| a != b).count();
        per_iteration.push(IterationRecord {
            iteration,
            accuracy: accuracy(&labels)?,
            objective: proj.objective_value(),
            classes_skipped: asm.meta.skipped_classes.clone(),
            implicit_weights: asm.meta.class_weights.clone(),
            constraint_residual: proj.constraint_residual,
            eig_residual: proj.eig_residual,
            ridge_used: proj.ridge_used,
            isolated,
            label_changes,
        });
        pseudo = labels;
        embeddings = Some(Embeddings { z_s, z_t });
    }

    let result = AdaptResult {
        final_labels: pseudo,
        initial_accuracy,
        per_iteration,
        config: cfg.clone(),
        effective_k,
        effective_p,
        warnings,
        timing_secs: started.elapsed().as_secs_f64(),
    };
    Ok((result, embeddings.expect("at least one iteration")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub result: AdaptResult,
}

impl AblationRow {
    pub fn accuracy(&self) -> Option<f64> {
        self.result.final_accuracy()
    }
}

/// Row labels and configurations of the ablation table, in output order.
pub fn ablation_configs(base: &AdaptConfig) -> Vec<(String, AdaptConfig)> {
    let with = |strategy: Strategy, classifier: Classifier| AdaptConfig {
        strategy,
        classifier,
        ..base.clone()
    };
    let main = base.classifier;
    let other = match main {
        Classifier::Glp => Classifier::OneNn,
        Classifier::OneNn => Classifier::Glp,
    };
    let mut rows = vec![
        ("MMD".to_string(), with(Strategy::Baseline, main)),
        ("D_tra".to_string(), with(Strategy::Ablation(AblationVariant::Dtra), main)),
        ("D_ter".to_string(), with(Strategy::Ablation(AblationVariant::Dter), main)),
        ("D_tra+D_ter".to_string(), with(Strategy::Ablation(AblationVariant::Both), main)),
        ("Our-I".to_string(), with(Strategy::S1, main)),
        ("Our-II".to_string(), with(Strategy::S2, main)),
    ];
    for (name, strategy) in [("MMD", Strategy::Baseline), ("Our-I", Strategy::S1), ("Our-II", Strategy::S2)] {
        rows.push((format!("{name} ({})", other.label()), with(strategy, other)));
    }
    rows
}

/// Runs every configuration of [`ablation_configs`]; rows come back in that order.
pub fn run_ablation_suite(
    source: &LabeledData,
    target_x: &DMatrix<f64>,
    truth: Option<&[usize]>,
    base: &AdaptConfig,
) -> Result<Vec<AblationRow>> {
    ablation_configs(base)
        .into_par_iter()
        .map(|(label, cfg)| {
            adapt(source, target_x, truth, &cfg).map(|result| AblationRow { label, result })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Beta,
    Lambda,
    Alpha,
    K,
    P,
    Gamma1,
    Gamma2,
}

impl Param {
    fn apply(self, cfg: &mut AdaptConfig, v: f64) -> Result<()> {
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(format!("{self:?} needs a positive integer, got {v}")))
            }
        };
        match self {
            Param::Beta => cfg.beta = v,
            Param::Lambda => cfg.lambda = v,
            Param::Alpha => cfg.alpha = v,
            Param::K => cfg.k = count(v)?,
            Param::P => cfg.p_neighbors = count(v)?,
            Param::Gamma1 => cfg.gamma1 = v,
            Param::Gamma2 => cfg.gamma2 = v,
        }
        Ok(())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Param::Beta),
            "lambda" => Ok(Param::Lambda),
            "alpha" => Ok(Param::Alpha),
            "k" => Ok(Param::K),
            "p" => Ok(Param::P),
            "gamma1" => Ok(Param::Gamma1),
            "gamma2" => Ok(Param::Gamma2),
            other => Err(Error::invalid(format!("unknown grid parameter {other:?}"))),
        }
    }
}

/// `β ∈ {−1.0, −0.9, …, 1.0}`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=20).map(|i| (i as f64 - 10.0) / 10.0).collect()
}

/// `λ ∈ {0.2, 0.3, …, 1.0}`.
pub fn default_lambda_grid() -> Vec<f64> {
    (2..=10).map(|i| i as f64 / 10.0).collect()
}

/// The default search grid for the configured strategy.
pub fn default_grid(strategy: Strategy) -> Vec<(Param, Vec<f64>)> {
    match strategy {
        Strategy::S1 => vec![(Param::Beta, default_beta_grid())],
        Strategy::S2 => vec![(Param::Lambda, default_lambda_grid())],
        _ => vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: Vec<(Param, f64)>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: AdaptConfig,
    pub best_accuracy: f64,
    pub best_result: AdaptResult,
    /// Every grid point in row-major order (last parameter varies fastest).
    pub table: Vec<GridPoint>,
}

/// Picks the grid point with the highest final accuracy against `truth`; the
/// earliest point wins ties.
pub fn grid_search(
    source: &LabeledData,
    target_x: &DMatrix<f64>,
    truth: &[usize],
    base: &AdaptConfig,
    grid: &[(Param, Vec<f64>)],
) -> Result<GridSearchResult> {
    if grid.is_empty() || grid.iter().any(|(_, v)| v.is_empty()) {
        return Err(Error::invalid("grid search needs at least one value per parameter"));
    }
    let mut points: Vec<Vec<(Param, f64)>> = vec![vec![]];
    for (param, values) in grid {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((*param, v));
                    p
                })
            })
            .collect();
    }
    let configs = points
        .iter()
        .map(|params| {
            let mut cfg = base.clone();
            for &(p, v) in params {
                p.apply(&mut cfg, v)?;
            }
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let results = configs
        .par_iter()
        .map(|cfg| adapt(source, target_x, Some(truth), cfg))
        .collect::<Result<Vec<_>>>()?;

    let accuracies: Vec<f64> = results
        .iter()
        .map(|r| r.final_accuracy().expect("truth was given"))
        .collect();
    let mut best = 0;
    for (i, &a) in accuracies.iter().enumerate() {
        if a > accuracies[best] {
            best = i;
        }
    }
    let table = points
        .into_iter()
        .zip(&accuracies)
        .map(|(params, &accuracy)| GridPoint { params, accuracy })
        .collect();
    Ok(GridSearchResult {
        best: configs[best].clone(),
        best_accuracy: accuracies[best],
        best_result: results.into_iter().nth(best).expect("best index in range"),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_shifted_gaussians, SynthSpec};
    use crate::statistics::implicit_weight;

    fn small_task(seed: u64) -> crate::dataio::SynthData {
        synth_shifted_gaussians(&SynthSpec {
            classes: 3,
            m: 8,
            n_per_class_source: 20,
            n_per_class_target: 20,
            seed,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    fn cfg(strategy: Strategy) -> AdaptConfig {
        AdaptConfig {
            strategy,
            k: 4,
            p_neighbors: 8,
            ..AdaptConfig::default()
        }
    }

    fn strip_timing(mut r: AdaptResult) -> AdaptResult {
        r.timing_secs = 0.0;
        r
    }

    #[test]
    fn accuracy_examples() {
        let a: Vec<usize> = (1..=10).collect();
        assert_eq!(evaluate_accuracy(&a, &a).unwrap(), 1.0);
        let b: Vec<usize> = a.iter().map(|v| v + 1).collect();
        assert_eq!(evaluate_accuracy(&a, &b).unwrap(), 0.0);
        let half: Vec<usize> = a.iter().enumerate().map(|(i, &v)| if i < 5 { v } else { 0 }).collect();
        assert_eq!(evaluate_accuracy(&a, &half).unwrap(), 0.5);
        assert!(evaluate_accuracy(&a, &a[..3]).is_err());
    }

    #[test]
    fn identical_domains_are_solved_immediately() {
        let d = synth_shifted_gaussians(&SynthSpec {
            classes: 2,
            m: 6,
            class_sep: 10.0,
            n_per_class_source: 25,
            n_per_class_target: 25,
            domain_rotation_deg: 0.0,
            domain_shift: 0.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let r = adapt(&d.source, &d.target_x, Some(&d.target_truth), &AdaptConfig { t_iters: 2, k: 1, ..cfg(Strategy::S1) }).unwrap();
        // two classes separate along a single direction
        assert_eq!(r.final_accuracy(), Some(1.0));
    }

    #[test]
    fn emits_one_record_per_iteration_and_clamps_k() {
        let d = small_task(1);
        let r = adapt(&d.source, &d.target_x, Some(&d.target_truth), &AdaptConfig { k: 50, ..cfg(Strategy::S2) }).unwrap();
        assert_eq!(r.iterations(), 5);
        assert_eq!(r.effective_k, 8);
        assert!(r.warnings.iter().any(|w| w.contains("k = 50")));
        for (i, rec) in r.per_iteration.iter().enumerate() {
            assert_eq!(rec.iteration, i + 1);
            let a = rec.accuracy.unwrap();
            assert!((0.0..=1.0).contains(&a));
            assert!(rec.constraint_residual < 1e-6);
        }
    }

    #[test]
    fn logged_weights_match_pseudo_label_counts() {
        let d = small_task(2);
        let base = cfg(Strategy::S1);
        let r = adapt(&d.source, &d.target_x, Some(&d.target_truth), &base).unwrap();
        // iteration t uses the labels produced by iteration t−1 (or the initial 1-NN)
        let mut labels = {
            let (xs, xt, _) = normalize_pair(d.source.x(), &d.target_x, base.normalize).unwrap();
            one_nn_classify(&xs, d.source.labels(), &xt, base.metric).unwrap()
        };
        for (t, rec) in r.per_iteration.iter().enumerate() {
            for w in &rec.implicit_weights {
                let nt = labels.iter().filter(|&&l| l == w.class).count();
                assert_eq!(w.n_t, nt);
                assert_eq!(w.weight, implicit_weight(w.n_s, nt).unwrap());
            }
            let next = adapt(
                &d.source,
                &d.target_x,
                None,
                &AdaptConfig { t_iters: t + 1, ..base.clone() },
            )
            .unwrap();
            labels = next.final_labels;
        }
    }

    #[test]
    fn extreme_parameters_reproduce_baseline_labels() {
        let d = small_task(3);
        let base = adapt(&d.source, &d.target_x, None, &cfg(Strategy::Baseline)).unwrap();
        let s1 = adapt(&d.source, &d.target_x, None, &AdaptConfig { beta: -1.0, ..cfg(Strategy::S1) }).unwrap();
        let s2 = adapt(&d.source, &d.target_x, None, &AdaptConfig { lambda: 1.0, ..cfg(Strategy::S2) }).unwrap();
        assert_eq!(s1.final_labels, base.final_labels);
        assert_eq!(s2.final_labels, base.final_labels);
    }

    #[test]
    fn runs_are_deterministic() {
        let d = small_task(4);
        let a = adapt(&d.source, &d.target_x, Some(&d.target_truth), &cfg(Strategy::S2)).unwrap();
        let b = adapt(&d.source, &d.target_x, Some(&d.target_truth), &cfg(Strategy::S2)).unwrap();
        assert_eq!(strip_timing(a), strip_timing(b));
    }

    #[test]
    fn zscore_removes_feature_scale() {
        let d = small_task(5);
        let c = AdaptConfig { normalize: NormMode::Zscore, ..cfg(Strategy::S1) };
        let a = adapt(&d.source, &d.target_x, Some(&d.target_truth), &c).unwrap();
        let scaled = LabeledData::from_labels(d.source.x() * 8.0, d.source.labels().to_vec()).unwrap();
        let b = adapt(&scaled, &(&d.target_x * 8.0), Some(&d.target_truth), &c).unwrap();
        assert_eq!(a.final_accuracy(), b.final_accuracy());
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = small_task(6);
        assert!(adapt(&d.source, &d.target_x, None, &AdaptConfig { k: 0, ..cfg(Strategy::S1) }).is_err());
        assert!(adapt(&d.source, &d.target_x.rows(0, 3).into_owned(), None, &cfg(Strategy::S1)).is_err());
        assert!(adapt(&d.source, &d.target_x, Some(&[1, 2]), &cfg(Strategy::S1)).is_err());
    }

    #[test]
    fn ablation_suite_rows() {
        let d = small_task(7);
        let rows = run_ablation_suite(&d.source, &d.target_x, Some(&d.target_truth), &cfg(Strategy::S1)).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            ["MMD", "D_tra", "D_ter", "D_tra+D_ter", "Our-I", "Our-II", "MMD (1-NN)", "Our-I (1-NN)", "Our-II (1-NN)"]
        );

        let zero = AdaptConfig { gamma1: 0.0, gamma2: 0.0, ..cfg(Strategy::S1) };
        let rows = run_ablation_suite(&d.source, &d.target_x, Some(&d.target_truth), &zero).unwrap();
        for row in &rows[1..4] {
            assert_eq!(row.result.final_labels, rows[0].result.final_labels);
            assert_eq!(row.result.per_iteration, rows[0].result.per_iteration);
        }
    }

    #[test]
    fn default_grids() {
        let b = default_beta_grid();
        assert_eq!(b.len(), 21);
        assert_eq!((b[0], b[10], b[20]), (-1.0, 0.0, 1.0));
        assert_eq!(b[1], -0.9);
        let l = default_lambda_grid();
        assert_eq!(l.len(), 9);
        assert_eq!((l[0], l[8]), (0.2, 1.0));
    }

    #[test]
    fn grid_search_picks_best_and_earliest() {
        let d = small_task(8);
        let base = cfg(Strategy::S1);
        let grid = vec![(Param::Beta, vec![-1.0, 0.0, 1.0])];
        let g = grid_search(&d.source, &d.target_x, &d.target_truth, &base, &grid).unwrap();
        assert_eq!(g.table.len(), 3);
        let max = g.table.iter().map(|p| p.accuracy).fold(f64::MIN, f64::max);
        let first = g.table.iter().position(|p| p.accuracy == max).unwrap();
        assert_eq!(g.best.beta, g.table[first].params[0].1);
        assert_eq!(g.best_accuracy, max);

        // identical points tie; the first must win
        let tied = vec![(Param::Alpha, vec![0.05, 0.05]), (Param::Beta, vec![0.0])];
        let g = grid_search(&d.source, &d.target_x, &d.target_truth, &base, &tied).unwrap();
        assert_eq!(g.table.len(), 2);
        assert_eq!(g.table[0].accuracy, g.table[1].accuracy);
        assert_eq!(g.best, AdaptConfig { alpha: 0.05, beta: 0.0, ..base.clone() });

        assert!(grid_search(&d.source, &d.target_x, &d.target_truth, &base, &[]).is_err());
        assert!(grid_search(&d.source, &d.target_x, &d.target_truth, &base, &[(Param::Beta, vec![])]).is_err());
        assert!(grid_search(&d.source, &d.target_x, &d.target_truth, &base, &[(Param::K, vec![2.5])]).is_err());
    }

    #[test]
    fn presets() {
        let small = AdaptConfig::default().with_preset(Preset::Small);
        assert_eq!((small.k, small.alpha), (20, 0.05));
        let large = AdaptConfig::default().with_preset(Preset::Large);
        assert_eq!((large.k, large.alpha), (100, 0.1));
        assert_eq!((large.t_iters, large.p_neighbors), (5, 20));
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = AdaptConfig {
            strategy: Strategy::Ablation(AblationVariant::Both),
            ..AdaptConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<AdaptConfig>(&s).unwrap(), c);
    }
}
