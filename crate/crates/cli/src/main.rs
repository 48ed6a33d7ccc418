//! `dmmd` command-line tool.
//!
//! Exit codes: 0 success, 1 numerical or verification failure, 2 usage error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dmmd::classify::Metric;
use dmmd::dataio::NormMode;
use dmmd::laplacian::WeightMode;
use dmmd::pipeline::{AdaptConfig, Classifier, Preset, Strategy};

#[derive(Debug, Parser)]
#[command(name = "dmmd", version, about = "Discriminative MMD subspace learning for unsupervised domain adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the scatter and MMD identities on random instances.
    Verify(VerifyArgs),
    /// Adapt a labeled source domain to an unlabeled target domain.
    Adapt(AdaptArgs),
    /// Compare plain MMD, explicit-distance ablations and both strategies.
    Ablate(AblateArgs),
    /// Write a synthetic shifted-Gaussian source/target pair.
    Synth(SynthArgs),
    /// Run every task of a manifest and summarize.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Labeled source CSV (label first, then features).
    #[arg(long)]
    source: PathBuf,
    /// Target CSV; labels in it are ignored.
    #[arg(long)]
    target: PathBuf,
    /// Target ground truth, one label per line, for reporting accuracy.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// The CSV files start with a header row.
    #[arg(long)]
    header: bool,
}

/// Options shared by every command that runs the adaptation loop. Unset
/// options keep the preset or built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// small: k=20, alpha=0.05; large: k=100, alpha=0.1.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Number of iterations.
    #[arg(long = "T", visible_alias = "iterations")]
    t_iters: Option<usize>,
    /// Neighbors per sample in the label propagation graph.
    #[arg(long = "p")]
    p: Option<usize>,
    /// glp or one_nn.
    #[arg(long)]
    classifier: Option<Classifier>,
    /// none, zscore or zscore+l2.
    #[arg(long)]
    normalize: Option<NormMode>,
    /// cosine or euclidean.
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long)]
    ridge: Option<f64>,
    /// product or sum.
    #[arg(long)]
    weight_mode: Option<WeightMode>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    pub fn apply(&self, mut cfg: AdaptConfig) -> AdaptConfig {
        if let Some(p) = self.preset {
            cfg = cfg.with_preset(p);
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(
            k => k, alpha => alpha, beta => beta, lambda => lambda, gamma1 => gamma1,
            gamma2 => gamma2, t_iters => t_iters, p => p_neighbors, classifier => classifier,
            normalize => normalize, metric => metric, ridge => ridge, weight_mode => weight_mode,
            seed => seed
        );
        cfg
    }
}

#[derive(Debug, Args)]
struct AdaptArgs {
    #[command(flatten)]
    data: DataArgs,
    /// baseline, s1, s2, dtra, dter or both.
    #[arg(long)]
    strategy: Strategy,
    #[command(flatten)]
    config: ConfigArgs,
    /// Result JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the final projected source and target embeddings as CSV.
    #[arg(long)]
    dump_embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory for source.csv, target.csv, target_truth.txt and spec.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 50)]
    n_source: usize,
    #[arg(long, default_value_t = 50)]
    n_target: usize,
    #[arg(long, default_value_t = 4.0)]
    sep: f64,
    /// Degrees.
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    rotation: f64,
    #[arg(long, default_value_t = 2.0)]
    shift: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// JSON manifest: {"tasks": [{"name", "source", "target", "truth", "overrides"}]}.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for one result file per task and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Select beta or lambda per task over the default grid using the truth labels.
    #[arg(long)]
    grid: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    header: bool,
    /// Defaults for every task before its own overrides.
    #[command(flatten)]
    config: ConfigArgs,
}

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<dmmd::Error> for Failure {
    fn from(e: dmmd::Error) -> Self {
        use dmmd::Error::*;
        match e {
            InvalidArgument(_) | Parse { .. } | Io(_) | Json(_) => Failure::Usage(e.to_string()),
            ClassAbsent { .. } | NumericalFailure(_) | UnusableLabels(_) => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify(a) => commands::verify(a.trials, a.seed, a.tolerance, a.out.as_deref()),
        Command::Adapt(a) => commands::adapt(&a),
        Command::Ablate(a) => commands::ablate(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
    }
}
