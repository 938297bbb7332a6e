mod common;

use std::fs;

use rand::Rng;

use common::{gaussian, rng, unit};
use sparse_halfspace::experiment::{
    emit_label_complexity_table, read_runs, run_experiment, ExperimentConfig, RunOptions, CSV_SCHEMA, RUNS_FILE,
    SUMMARY_FILE, TABLE_FILE,
};
use sparse_halfspace::feasible::FeasibleSet;
use sparse_halfspace::learner::build_oracles;
use sparse_halfspace::linalg::normalize;
use sparse_halfspace::mirror::{OmdState, RegretTracker, Regularizer};
use sparse_halfspace::trace::TraceLog;
use sparse_halfspace::{learn, run_seeded, Error, LearnerConfig, OracleSetup, SamplingMode};

fn small_config(dir: &std::path::Path) -> ExperimentConfig {
    let text = format!(
        r#"
seeds = [0, 1]
output_dir = "{}"

[learner]
eval_points = 2000

[sweep]
d = [12]
s = [2]
eta = [0.0, 0.2]
epsilon = [0.2]

[panel]
enabled = false
"#,
        dir.display()
    );
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn report_counters_match_the_schedule_and_the_oracles() {
    let cfg = LearnerConfig::new(30, 3, 0.2, 0.2);
    let init = cfg.init_config().unwrap();
    let mut oracles = build_oracles(&cfg, &OracleSetup::default(), 4).unwrap();
    let mut log = TraceLog::default();
    let report = learn(&cfg, &mut oracles, &mut log).unwrap();

    let stats = oracles.stats();
    assert_eq!(report.label_queries, stats.label_queries);
    assert_eq!(report.ex_calls, stats.ex_calls);
    assert!(report.ex_calls >= report.label_queries);
    assert_eq!(report.labels_init(), (init.m + init.iterations) as u64);
    for (k, phase) in report.phases.iter().enumerate() {
        assert_eq!(phase.labels, cfg.schedule(k + 1).iterations as u64);
    }
    // One trace record per band-sampled label.
    assert_eq!(log.steps.len() as u64, report.label_queries - init.m as u64);
    assert_eq!(log.phase_ends.len(), report.phases.len() + 1);
    assert_eq!(report.angle_path().len(), report.phases.len() + 1);
    let w = report.final_w.unwrap();
    assert!((w.norm2() - 1.0).abs() < 1e-12);
}

#[test]
fn seeded_runs_are_reproducible() {
    let mut cfg = LearnerConfig::new(20, 2, 0.1, 0.2);
    cfg.eval_points = 5000;
    let a = run_seeded(&cfg, &OracleSetup::default(), 9).unwrap();
    let mut b = run_seeded(&cfg, &OracleSetup::default(), 9).unwrap();
    b.wall_ms = a.wall_ms;
    assert_eq!(a, b);
    let c = run_seeded(&cfg, &OracleSetup::default(), 10).unwrap();
    assert_ne!(a.final_w, c.final_w);
}

#[test]
fn passive_mode_labels_every_draw() {
    let mut cfg = LearnerConfig::new(15, 2, 0.0, 0.3);
    cfg.mode = SamplingMode::Passive;
    cfg.eval_points = 1000;
    let passive = run_seeded(&cfg, &OracleSetup::default(), 2).unwrap();
    assert_eq!(passive.label_queries, passive.ex_calls);
    cfg.mode = SamplingMode::Active;
    let active = run_seeded(&cfg, &OracleSetup::default(), 2).unwrap();
    assert!(active.label_queries < passive.label_queries);
}

#[test]
fn mismatched_oracles_are_rejected() {
    let cfg = LearnerConfig::new(10, 2, 0.0, 0.2);
    let other = LearnerConfig::new(11, 2, 0.0, 0.2);
    let mut oracles = build_oracles(&other, &OracleSetup::default(), 0).unwrap();
    assert!(matches!(learn(&cfg, &mut oracles, &mut ()), Err(Error::DimensionMismatch { .. })));
    let mut passive = cfg.clone();
    passive.mode = SamplingMode::Passive;
    let mut oracles = build_oracles(&passive, &OracleSetup::default(), 0).unwrap();
    assert!(matches!(learn(&cfg, &mut oracles, &mut ()), Err(Error::ModeMismatch { .. })));
}

#[test]
fn regret_stays_below_the_mirror_descent_bound() {
    // Σ⟨g_t, w_t − u⟩ ≤ Φ(u)/α + (α/2) Σ‖g_t‖_q² for every u in the set.
    let mut rng = rng(31);
    for trial in 0..20 {
        let d = [5usize, 20, 60][trial % 3];
        let center = unit(&mut rng, d);
        let set = FeasibleSet::phase(&center, rng.random_range(0.1..0.5)).unwrap();
        let reg = Regularizer::for_reference(center.clone());
        let alpha = 10f64.powf(rng.random_range(-2.0..0.0));
        let mut state = OmdState::new(center.clone(), alpha, set.clone(), reg.clone()).unwrap();
        let mut tracker = RegretTracker::new(d, reg.params);
        for _ in 0..200 {
            let g = gaussian(&mut rng, d, 1.0);
            tracker.record(&state.iterate, &g);
            state.step(&g).unwrap();
        }
        for _ in 0..10 {
            let probe = center.add(&gaussian(&mut rng, d, 0.3));
            let u = set.project_euclidean(&probe, 1e-12, 1_000_000).unwrap();
            let bound = reg.value(&u) / alpha + 0.5 * alpha * tracker.dual_norm_sq_sum();
            assert!(tracker.regret(&u) <= bound + 1e-7, "trial {trial}");
        }
    }
}

#[test]
fn sweep_output_is_byte_identical_across_reruns_and_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_experiment(&small_config(a.path()), RunOptions { jobs: 1, profile: None }).unwrap();
    run_experiment(&small_config(b.path()), RunOptions { jobs: 3, profile: None }).unwrap();
    assert_eq!(first.runs, 4);
    assert_eq!(first.points.len(), 2);
    for file in [RUNS_FILE, SUMMARY_FILE] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let rows = read_runs(&a.path().join(RUNS_FILE)).unwrap();
    assert_eq!(rows.iter().map(|r| (r.eta, r.seed)).collect::<Vec<_>>(), vec![(0.0, 0), (0.0, 1), (0.2, 0), (0.2, 1)]);
    assert!(rows.iter().all(|r| r.wall_ms.is_none()));

    let table = emit_label_complexity_table(a.path()).unwrap();
    assert_eq!(table, a.path().join(TABLE_FILE));
    assert!(fs::read_to_string(table).unwrap().lines().count() >= 3);
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "seeds = [0]\noutput_dir = \"{}\"\n[sweep]\nd = []\ns = [2]\neta = [0.0]\nepsilon = [0.1]\n[panel]\nenabled = false\n",
        dir.path().display()
    );
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let summary = run_experiment(&cfg, RunOptions::default()).unwrap();
    assert_eq!(summary.runs, 0);
    let csv = fs::read_to_string(dir.path().join(RUNS_FILE)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_SCHEMA);
    assert!(lines[1].starts_with("seed,d,s,eta,epsilon,labels_total"));
    assert!(read_runs(&dir.path().join(RUNS_FILE)).unwrap().is_empty());
}

#[test]
fn wall_clock_column_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.record_wall_clock = true;
    cfg.sweep.eta = vec![0.0];
    cfg.seeds = vec![0];
    run_experiment(&cfg, RunOptions::default()).unwrap();
    let rows = read_runs(&dir.path().join(RUNS_FILE)).unwrap();
    assert!(rows[0].wall_ms.is_some_and(|ms| ms >= 0.0));
}

#[test]
fn output_direction_beats_a_random_guess() {
    let mut cfg = LearnerConfig::new(40, 3, 0.1, 0.1);
    cfg.eval_points = 20_000;
    let report = run_seeded(&cfg, &OracleSetup::default(), 5).unwrap();
    assert!(report.final_angle.unwrap() < 0.2);
    assert!(report.excess_error.unwrap().mean < 0.1);
    let guess = normalize(&gaussian(&mut rng(1), 40, 1.0)).unwrap();
    let truth = build_oracles(&cfg, &OracleSetup::default(), 5).unwrap().truth().u.clone();
    assert!(guess.dot(&truth).abs() < report.final_w.unwrap().dot(&truth));
}
