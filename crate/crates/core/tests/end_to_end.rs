use dmmd::dataio::{load_domain_csv, load_labels, save_domain_csv, save_labels, synth_shifted_gaussians, SynthSpec};
use dmmd::pipeline::{adapt, grid_search, run_ablation_suite, AdaptConfig, Param, Strategy};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn final_accuracy(seed: u64, cfg: &AdaptConfig) -> (f64, f64) {
    let d = synth_shifted_gaussians(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
    let r = adapt(&d.source, &d.target_x, Some(&d.target_truth), cfg).unwrap();
    (r.initial_accuracy.unwrap(), r.final_accuracy().unwrap())
}

// With a subspace smaller than the ambient dimension the projection has to
// choose directions, and the discriminative objectives should pick better ones
// than plain class-wise MMD.
#[test]
fn discriminative_objectives_beat_plain_mmd_in_a_reduced_subspace() {
    let at = |strategy| AdaptConfig { strategy, k: 5, ..AdaptConfig::default() };
    let mut no_adapt = Vec::new();
    let mut base = Vec::new();
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for seed in 0..10 {
        let (nn, b) = final_accuracy(seed, &at(Strategy::Baseline));
        no_adapt.push(nn);
        base.push(b);
        s1.push(final_accuracy(seed, &at(Strategy::S1)).1);
        s2.push(final_accuracy(seed, &at(Strategy::S2)).1);
    }
    let (nn, b, s1, s2) = (median(no_adapt), median(base), median(s1), median(s2));
    assert!(s1 >= nn + 0.10, "s1 {s1} vs 1-NN {nn}");
    assert!(s2 >= nn + 0.10, "s2 {s2} vs 1-NN {nn}");
    assert!(s1 > b && s2 > b, "s1 {s1}, s2 {s2}, baseline {b}");
}

#[test]
fn ours_rows_match_or_beat_their_ablation_counterparts_on_most_seeds() {
    let base = AdaptConfig { k: 5, ..AdaptConfig::default() };
    let mut wins = [0usize; 2];
    for seed in 0..10 {
        let d = synth_shifted_gaussians(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let rows = run_ablation_suite(&d.source, &d.target_x, Some(&d.target_truth), &base).unwrap();
        let acc = |label: &str| rows.iter().find(|r| r.label == label).unwrap().accuracy().unwrap();
        if acc("Our-I") >= acc("D_tra") {
            wins[0] += 1;
        }
        if acc("Our-II") >= acc("D_ter") {
            wins[1] += 1;
        }
    }
    assert!(wins[0] >= 6 && wins[1] >= 6, "{wins:?} of 10");
}

#[test]
fn files_on_disk_give_the_same_result_as_memory() {
    let d = synth_shifted_gaussians(&SynthSpec { n_per_class_source: 15, n_per_class_target: 15, ..SynthSpec::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt, truth) = (dir.path().join("s.csv"), dir.path().join("t.csv"), dir.path().join("truth.txt"));
    let src_labels: Vec<Option<usize>> = d.source.labels().iter().map(|&l| Some(l)).collect();
    save_domain_csv(&src, d.source.x(), &src_labels).unwrap();
    save_domain_csv(&tgt, &d.target_x, &vec![None; d.target_x.ncols()]).unwrap();
    save_labels(&truth, &d.target_truth).unwrap();

    let source = load_domain_csv(&src, false).unwrap().into_labeled().unwrap();
    let target = load_domain_csv(&tgt, false).unwrap();
    let truth = load_labels(&truth).unwrap();
    let cfg = AdaptConfig { k: 6, p_neighbors: 10, ..AdaptConfig::default() };
    let mut a = adapt(&d.source, &d.target_x, Some(&d.target_truth), &cfg).unwrap();
    let mut b = adapt(&source, &target.x, Some(&truth), &cfg).unwrap();
    a.timing_secs = 0.0;
    b.timing_secs = 0.0;
    assert_eq!(a, b);
}

#[test]
fn grid_search_over_the_default_beta_grid() {
    let d = synth_shifted_gaussians(&SynthSpec { n_per_class_source: 15, n_per_class_target: 15, ..SynthSpec::default() }).unwrap();
    let base = AdaptConfig { k: 5, p_neighbors: 10, t_iters: 2, ..AdaptConfig::default() };
    let grid = dmmd::pipeline::default_grid(Strategy::S1);
    let g = grid_search(&d.source, &d.target_x, &d.target_truth, &base, &grid).unwrap();
    assert_eq!(g.table.len(), 21);
    assert!(g.table.iter().all(|p| p.accuracy <= g.best_accuracy));
    assert_eq!(g.best_result.final_accuracy(), Some(g.best_accuracy));
    assert_eq!(grid[0].0, Param::Beta);
}
