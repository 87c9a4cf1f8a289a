use std::fs;

use isabc_core::ao::NoClock;
use isabc_core::benchmarks::Scheme;
use isabc_core::system::SystemConfig;
use isabc_harness::experiment::{run_experiment, run_trials, ExperimentSpec, SweepVar};

fn relaxed() -> SystemConfig {
    SystemConfig {
        tag_rate_min: 0.25,
        randomization_trials: 50,
        ..SystemConfig::default()
    }
}

fn spec(dir: &std::path::Path) -> ExperimentSpec {
    ExperimentSpec {
        name: "t".into(),
        base: relaxed(),
        schemes: vec![Scheme::RsmaIsabc],
        trials: 1,
        seed: 0,
        out: dir.to_path_buf(),
        workers: 1,
        ..ExperimentSpec::default()
    }
}

fn data_lines(path: &std::path::Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count().saturating_sub(1)
}

#[test]
fn one_trial_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(dir.path());
    let run = run_experiment(&s, &NoClock).unwrap();
    assert_eq!(run.records.len(), 1);
    assert!(run.records[0].ok(), "{}", run.records[0].reason);
    assert_eq!(data_lines(&dir.path().join("trials.csv")), 1);
    assert_eq!(data_lines(&dir.path().join("aggregate.csv")), 1);
    assert_eq!(data_lines(&dir.path().join("timing.csv")), 1);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["flagged"], false);
    assert_eq!(manifest["base_config"]["tag_rate_min"], 0.25);
}

#[test]
fn trial_csv_is_byte_identical_across_runs_and_pool_sizes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut s = spec(a.path());
    s.schemes = vec![Scheme::RsmaIsabc, Scheme::SensingOnly];
    s.sweep = SweepVar::Antennas;
    s.values = vec![4.0, 6.0];
    s.trials = 2;
    run_experiment(&s, &NoClock).unwrap();
    s.out = b.path().to_path_buf();
    s.workers = 3;
    run_experiment(&s, &NoClock).unwrap();
    let read = |d: &tempfile::TempDir, f: &str| fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "trials.csv"), read(&b, "trials.csv"));
    assert_eq!(read(&a, "aggregate.csv"), read(&b, "aggregate.csv"));
    assert!(!String::from_utf8(read(&a, "trials.csv")).unwrap().contains("wall_time"));
}

#[test]
fn rows_follow_point_then_trial_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path());
    s.schemes = vec![Scheme::SensingOnly, Scheme::ConvBackcom];
    s.sweep = SweepVar::Tags;
    s.values = vec![1.0, 2.0];
    s.trials = 2;
    let rows = run_trials(&s, &NoClock);
    let keys: Vec<(Option<f64>, String, usize)> = rows.iter().map(|r| (r.sweep_value, r.scheme.clone(), r.trial)).collect();
    assert_eq!(keys.len(), 8);
    assert_eq!(keys[0], (Some(1.0), "SensingOnly".into(), 0));
    assert_eq!(keys[1], (Some(1.0), "SensingOnly".into(), 1));
    assert_eq!(keys[2], (Some(1.0), "ConvBackcom".into(), 0));
    assert_eq!(keys[7], (Some(2.0), "ConvBackcom".into(), 1));
    // matched seeds across points
    assert_eq!(rows[0].seed, rows[4].seed);
    assert_eq!(rows[1].seed, rows[3].seed);
}

#[test]
fn infeasible_defaults_are_flagged_not_aggregated() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path());
    s.base = SystemConfig::default();
    s.trials = 3;
    let run = run_experiment(&s, &NoClock).unwrap();
    assert!(run.aggregates.is_empty());
    assert!(run.manifest.flagged);
    assert_eq!(run.manifest.failure_rate, 1.0);
    assert_eq!(run.manifest.points[0].failed, 3);
    assert!(run.records.iter().all(|r| r.reason.starts_with("structurally_infeasible")));
}

#[test]
fn experiment_files_in_the_repository_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let mut n = 0;
    for e in fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "exp") {
            let s = ExperimentSpec::parse(&fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            assert!(s.trials >= 1);
            n += 1;
        }
    }
    assert!(n >= 5);
}
