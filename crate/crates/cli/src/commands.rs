use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use dmmd::dataio::{load_domain_csv, load_labels, save_domain_csv, save_labeled_csv, save_labels, synth_shifted_gaussians, SynthSpec};
use dmmd::pipeline::{
    adapt_with_embeddings, default_grid, grid_search, run_ablation_suite, AdaptConfig, AdaptResult, GridPoint,
};
use dmmd::statistics::LabeledData;
use dmmd::verify::run_identity_suite;

use crate::manifest::{RunManifest, Task};
use crate::{AblateArgs, AdaptArgs, BenchmarkArgs, DataArgs, Failure, SynthArgs};

/// Bumped whenever a result file changes shape.
pub const SCHEMA_VERSION: u32 = 1;

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("results serialize");
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn percent(a: Option<f64>) -> String {
    a.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v))
}

#[derive(Debug, Clone, Serialize)]
struct Inputs {
    source: PathBuf,
    target: PathBuf,
    truth: Option<PathBuf>,
}

struct Loaded {
    inputs: Inputs,
    source: LabeledData,
    target_x: DMatrix<f64>,
    truth: Option<Vec<usize>>,
}

/// Input errors carry the offending path.
fn with_path(path: &Path) -> impl Fn(dmmd::Error) -> Failure + '_ {
    move |e| match e {
        dmmd::Error::Io(io) => Failure::Usage(format!("{}: {io}", path.display())),
        other => other.into(),
    }
}

fn load(source: &Path, target: &Path, truth: Option<&Path>, header: bool) -> Result<Loaded, Failure> {
    let src = load_domain_csv(source, header).map_err(with_path(source))?;
    if !src.labeled() {
        return Err(Failure::Usage(format!("{}: every source row needs a label", source.display())));
    }
    let tgt = load_domain_csv(target, header).map_err(with_path(target))?;
    let truth_labels = match truth {
        Some(p) => Some(load_labels(p).map_err(with_path(p))?),
        None => None,
    };
    Ok(Loaded {
        inputs: Inputs {
            source: source.to_path_buf(),
            target: target.to_path_buf(),
            truth: truth.map(Path::to_path_buf),
        },
        source: src.into_labeled()?,
        target_x: tgt.x,
        truth: truth_labels,
    })
}

fn load_data(d: &DataArgs) -> Result<Loaded, Failure> {
    load(&d.source, &d.target, d.truth.as_deref(), d.header)
}

pub fn verify(trials: usize, seed: u64, tolerance: f64, out: Option<&Path>) -> Result<(), Failure> {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be >= 1".into()));
    }
    if !(tolerance >= 0.0) {
        return Err(Failure::Usage("--tolerance must be >= 0".into()));
    }
    let report = run_identity_suite(trials, seed)?;
    for w in &report.worst {
        let i = w.instance;
        println!(
            "{:<24} max residual {:.3e}  (seed {}, m={}, n_s={}, n_t={}, C={}, k={})",
            w.check.name(),
            w.residual,
            i.seed,
            i.m,
            i.n_s,
            i.n_t,
            i.classes,
            i.k
        );
    }
    if let Some(p) = out {
        #[derive(Serialize)]
        struct Out<'a> {
            schema_version: u32,
            command: &'static str,
            tolerance: f64,
            report: &'a dmmd::verify::VerifyReport,
        }
        write_json(
            Some(p),
            &Out {
                schema_version: SCHEMA_VERSION,
                command: "verify",
                tolerance,
                report: &report,
            },
        )?;
    }
    let bad = report.violations(tolerance);
    if bad.is_empty() {
        println!("all {} checks within {tolerance:e} over {trials} trials", report.worst.len());
        Ok(())
    } else {
        let w = bad[0];
        let i = w.instance;
        Err(Failure::Runtime(format!(
            "{} residual {:e} exceeds {tolerance:e} (seed {}, m={}, n_s={}, n_t={}, C={})",
            w.check.name(),
            w.residual,
            i.seed,
            i.m,
            i.n_s,
            i.n_t,
            i.classes
        )))
    }
}

#[derive(Serialize)]
struct AdaptOutput<'a> {
    schema_version: u32,
    command: &'static str,
    inputs: &'a Inputs,
    config: &'a AdaptConfig,
    final_accuracy: Option<f64>,
    result: &'a AdaptResult,
}

pub fn adapt(a: &AdaptArgs) -> Result<(), Failure> {
    let data = load_data(&a.data)?;
    let cfg = a.config.apply(AdaptConfig {
        strategy: a.strategy,
        ..AdaptConfig::default()
    });
    let (result, emb) = adapt_with_embeddings(&data.source, &data.target_x, data.truth.as_deref(), &cfg)?;
    if let Some(dir) = &a.dump_embeddings {
        create_dir(dir)?;
        save_labeled_csv(dir.join("z_source.csv"), &emb.z_s, data.source.labels())?;
        save_labeled_csv(dir.join("z_target.csv"), &emb.z_t, &result.final_labels)?;
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(acc) = result.final_accuracy() {
        eprintln!(
            "accuracy {} (1-NN before adaptation {})",
            percent(Some(acc)),
            percent(result.initial_accuracy)
        );
    }
    write_json(
        a.out.as_deref(),
        &AdaptOutput {
            schema_version: SCHEMA_VERSION,
            command: "adapt",
            inputs: &data.inputs,
            config: &cfg,
            final_accuracy: result.final_accuracy(),
            result: &result,
        },
    )
}

pub fn ablate(a: &AblateArgs) -> Result<(), Failure> {
    let data = load_data(&a.data)?;
    let cfg = a.config.apply(AdaptConfig::default());
    let rows = run_ablation_suite(&data.source, &data.target_x, data.truth.as_deref(), &cfg)?;
    let no_adaptation = rows.first().and_then(|r| r.result.initial_accuracy);

    println!("{:<22} accuracy", "row");
    println!("{:<22} {}", "1-NN (no adaptation)", percent(no_adaptation));
    for r in &rows {
        println!("{:<22} {}", r.label, percent(r.accuracy()));
    }

    #[derive(Serialize)]
    struct Row<'a> {
        label: &'a str,
        accuracy: Option<f64>,
        result: &'a AdaptResult,
    }
    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        command: &'static str,
        inputs: &'a Inputs,
        config: &'a AdaptConfig,
        no_adaptation_accuracy: Option<f64>,
        rows: Vec<Row<'a>>,
    }
    if let Some(p) = &a.out {
        write_json(
            Some(p),
            &Out {
                schema_version: SCHEMA_VERSION,
                command: "ablate",
                inputs: &data.inputs,
                config: &cfg,
                no_adaptation_accuracy: no_adaptation,
                rows: rows
                    .iter()
                    .map(|r| Row {
                        label: &r.label,
                        accuracy: r.accuracy(),
                        result: &r.result,
                    })
                    .collect(),
            },
        )?;
    }
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        classes: a.classes,
        m: a.dim,
        n_per_class_source: a.n_source,
        n_per_class_target: a.n_target,
        class_sep: a.sep,
        domain_rotation_deg: a.rotation,
        domain_shift: a.shift,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    let data = synth_shifted_gaussians(&spec)?;
    create_dir(&a.out_dir)?;
    save_labeled_csv(a.out_dir.join("source.csv"), data.source.x(), data.source.labels())?;
    save_domain_csv(a.out_dir.join("target.csv"), &data.target_x, &vec![None; data.target_x.ncols()])?;
    save_labels(a.out_dir.join("target_truth.txt"), &data.target_truth)?;

    #[derive(Serialize)]
    struct Out<'a> {
        schema_version: u32,
        command: &'static str,
        spec: &'a SynthSpec,
    }
    write_json(
        Some(&a.out_dir.join("spec.json")),
        &Out {
            schema_version: SCHEMA_VERSION,
            command: "synth",
            spec: &spec,
        },
    )?;
    eprintln!(
        "wrote {} source and {} target samples to {}",
        data.source.n(),
        data.target_x.ncols(),
        a.out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TaskOutput {
    schema_version: u32,
    command: &'static str,
    task: String,
    inputs: Inputs,
    config: AdaptConfig,
    final_accuracy: Option<f64>,
    grid: Option<Vec<GridPoint>>,
    result: AdaptResult,
}

fn run_task(task: &Task, base: &AdaptConfig, grid: bool, header: bool) -> Result<TaskOutput, Failure> {
    let cfg = task.config(base)?;
    let data = load(&task.source, &task.target, task.truth.as_deref(), header)?;
    let params = default_grid(cfg.strategy);
    let (config, table, result) = match (&data.truth, grid && !params.is_empty()) {
        (Some(truth), true) => {
            let g = grid_search(&data.source, &data.target_x, truth, &cfg, &params)?;
            (g.best, Some(g.table), g.best_result)
        }
        (None, true) => {
            return Err(Failure::Usage(format!("task {:?}: grid search needs truth labels", task.name)));
        }
        _ => {
            let (r, _) = adapt_with_embeddings(&data.source, &data.target_x, data.truth.as_deref(), &cfg)?;
            (cfg, None, r)
        }
    };
    Ok(TaskOutput {
        schema_version: SCHEMA_VERSION,
        command: "benchmark",
        task: task.name.clone(),
        inputs: data.inputs,
        final_accuracy: result.final_accuracy(),
        config,
        grid: table,
        result,
    })
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<(), Failure> {
    let manifest = RunManifest::load(&a.manifest)?;
    let base = a.config.apply(AdaptConfig::default());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let outputs: Vec<Result<TaskOutput, Failure>> = pool.install(|| {
        manifest
            .tasks
            .par_iter()
            .map(|t| run_task(t, &base, a.grid, a.header))
            .collect()
    });
    let outputs = outputs.into_iter().collect::<Result<Vec<_>, _>>()?;

    create_dir(&a.out_dir)?;
    for o in &outputs {
        write_json(Some(&a.out_dir.join(format!("{}.json", o.task))), o)?;
    }

    #[derive(Serialize)]
    struct SummaryRow<'a> {
        name: &'a str,
        accuracy: Option<f64>,
        initial_accuracy: Option<f64>,
        beta: f64,
        lambda: f64,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        schema_version: u32,
        command: &'static str,
        manifest: &'a Path,
        base_config: &'a AdaptConfig,
        grid: bool,
        tasks: Vec<SummaryRow<'a>>,
        mean_accuracy: Option<f64>,
    }
    let scored: Vec<f64> = outputs.iter().filter_map(|o| o.final_accuracy).collect();
    let mean = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: "benchmark",
        manifest: &a.manifest,
        base_config: &base,
        grid: a.grid,
        tasks: outputs
            .iter()
            .map(|o| SummaryRow {
                name: &o.task,
                accuracy: o.final_accuracy,
                initial_accuracy: o.result.initial_accuracy,
                beta: o.config.beta,
                lambda: o.config.lambda,
            })
            .collect(),
        mean_accuracy: mean,
    };
    write_json(Some(&a.out_dir.join("summary.json")), &summary)?;

    for o in &outputs {
        println!("{:<24} {}", o.task, percent(o.final_accuracy));
    }
    println!("{:<24} {}", "average", percent(mean));
    Ok(())
}
