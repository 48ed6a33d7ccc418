//! Randomized numerical checks of the scatter identities and of the
//! Laplacian form of the class-wise MMD matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::laplacian::build_class_set;
use crate::statistics::{build_mc, verify_lemma1, verify_lemma2, verify_lemma3, LabeledData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Between-class scatter as a weighted sum of pairwise mean differences.
    PairwiseBetween,
    /// Total scatter = within + between.
    ScatterSplit,
    /// Class-wise MMD = weight · (pooled variance − within-domain variance).
    ClassMmdDecomposition,
    /// `w·(L_v − L_w)` against the class MMD coefficient matrix, elementwise.
    LaplacianMatrix,
}

impl Check {
    pub const ALL: [Check; 4] = [
        Check::PairwiseBetween,
        Check::ScatterSplit,
        Check::ClassMmdDecomposition,
        Check::LaplacianMatrix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::PairwiseBetween => "pairwise-between",
            Check::ScatterSplit => "scatter-split",
            Check::ClassMmdDecomposition => "class-mmd-decomposition",
            Check::LaplacianMatrix => "laplacian-matrix",
        }
    }
}

/// Shape of one random instance; `seed` regenerates it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub seed: u64,
    pub m: usize,
    pub n_s: usize,
    pub n_t: usize,
    pub classes: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub check: Check,
    pub residual: f64,
    pub instance: Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub seed: u64,
    /// Largest residual per check, in [`Check::ALL`] order.
    pub worst: Vec<Worst>,
}

impl VerifyReport {
    pub fn max_residual(&self) -> f64 {
        self.worst.iter().map(|w| w.residual).fold(0.0, f64::max)
    }

    pub fn violations(&self, tolerance: f64) -> Vec<Worst> {
        self.worst.iter().copied().filter(|w| !(w.residual <= tolerance)).collect()
    }
}

struct Generated {
    source: LabeledData,
    target: LabeledData,
    a: DMatrix<f64>,
}

/// Every class appears at least once in each domain.
fn labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<usize> {
    let mut y: Vec<usize> = (0..n)
        .map(|i| if i < classes { i + 1 } else { rng.random_range(1..=classes) })
        .collect();
    for i in (1..n).rev() {
        y.swap(i, rng.random_range(0..=i));
    }
    y
}

fn generate(seed: u64) -> Result<(Instance, Generated)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=10);
    let classes = rng.random_range(1..=5);
    let n_s = rng.random_range(classes..=25);
    let n_t = rng.random_range(classes..=25);
    let k = rng.random_range(1..=m);
    let mut domain = |n: usize| {
        let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-3.0..3.0));
        let y = labels(&mut rng, n, classes);
        LabeledData::new(x, y, classes)
    };
    let source = domain(n_s)?;
    let target = domain(n_t)?;
    let a = DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0));
    let instance = Instance { seed, m, n_s, n_t, classes, k };
    Ok((instance, Generated { source, target, a }))
}

fn residuals(g: &Generated) -> Result<[f64; 4]> {
    let mut out = [0.0f64; 4];
    for d in [&g.source, &g.target] {
        out[0] = out[0].max(verify_lemma1(d, &g.a)?);
        out[1] = out[1].max(verify_lemma2(d));
    }
    let (y_s, y_t) = (g.source.labels(), g.target.labels());
    for c in 1..=g.source.classes() {
        out[2] = out[2].max(verify_lemma3(&g.source, &g.target, &g.a, c)?);
        let set = build_class_set(y_s, y_t, c)?;
        let mc = build_mc(y_s, y_t, c)?;
        let reconstructed = (set.l_v.as_matrix() - set.l_w.as_matrix()) * set.weight;
        out[3] = out[3].max((reconstructed - mc.m.as_matrix()).amax());
    }
    Ok(out)
}

/// Runs `trials` random instances; instance `i` uses seed `seed + i`.
pub fn run_identity_suite(trials: usize, seed: u64) -> Result<VerifyReport> {
    let mut worst: Vec<Option<Worst>> = vec![None; Check::ALL.len()];
    for trial in 0..trials {
        let (instance, g) = generate(seed.wrapping_add(trial as u64))?;
        for (i, r) in residuals(&g)?.into_iter().enumerate() {
            let replace = match &worst[i] {
                None => true,
                Some(w) => !(r <= w.residual),
            };
            if replace {
                worst[i] = Some(Worst {
                    check: Check::ALL[i],
                    residual: r,
                    instance,
                });
            }
        }
    }
    Ok(VerifyReport {
        trials,
        seed,
        worst: worst.into_iter().flatten().collect(),
    })
}
