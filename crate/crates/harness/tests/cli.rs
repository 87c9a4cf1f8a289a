use std::fs;
use std::process::Command;

use isabc_core::system::SystemConfig;
use isabc_harness::export::ChannelFile;
use isabc_harness::trial::{build_channel, trial_seeds};

fn isabc() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_isabc"));
    c.env("RUST_LOG", "off");
    c
}

#[test]
fn help_lists_subcommands() {
    let out = isabc().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["run", "sweep", "beampattern"] {
        assert!(text.contains(sub), "{text}");
    }
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sweep", "--var", "M", "--values", "40"],
        vec!["sweep", "--var", "colour", "--values", "1"],
        vec!["sweep", "--var", "none", "--set", "nonsense=1"],
        vec!["sweep", "--var", "none", "--trials", "0"],
        vec!["run", "/definitely/not/here.exp"],
    ] {
        let out = isabc().args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("x.exp");
    fs::write(
        &spec,
        format!(
            "name = smoke\nrt_min_bps_hz = 0.25\nrandomization_trials = 50\nschemes = SensingOnly\ntrials = 2\nout = {}\n",
            dir.path().join("o").display()
        ),
    )
    .unwrap();
    let out = isabc().arg("run").arg(&spec).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trials.csv", "aggregate.csv", "timing.csv", "manifest.json"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }
}

#[test]
fn config_file_and_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sys.cfg");
    fs::write(&cfg, "rt_min_bps_hz = 0.25\nrandomization_trials = 50\nantennas = 4\n").unwrap();
    let out = isabc()
        .args(["sweep", "--var", "none", "--schemes", "SensingOnly", "--trials", "1", "--tol", "0.01"])
        .arg("--config")
        .arg(&cfg)
        .args(["--set", "users=2"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trials = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(trials.as_bytes());
    let head = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |k: &str| row[head.iter().position(|h| h == k).unwrap()].to_string();
    assert_eq!(get("m"), "4");
    assert_eq!(get("l"), "2");
    assert_eq!(get("rt_min"), "0.25");
    assert_eq!(get("epsilon"), "0.01");
}

#[test]
fn beampattern_exports_pattern_and_replayable_channel() {
    let dir = tempfile::tempdir().unwrap();
    let out = isabc()
        .args(["beampattern", "--seed", "4", "--scheme", "SensingOnly", "--set", "rt_min_bps_hz=0.25", "--set", "randomization_trials=50"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("beampattern.csv")).unwrap();
    assert_eq!(csv.lines().count(), 362);
    assert!(csv.starts_with("angle_deg,p1,p2,p3,tag_index"));

    let file: ChannelFile = serde_json::from_str(&fs::read_to_string(dir.path().join("channel.json")).unwrap()).unwrap();
    let replay = file.to_channel().unwrap();
    let cfg = SystemConfig {
        tag_rate_min: 0.25,
        ..SystemConfig::default()
    };
    let direct = build_channel(&cfg, trial_seeds(4, 1)[0]).unwrap();
    assert_eq!(replay.f, direct.f);
    assert_eq!(replay.h_tag, direct.h_tag);
    assert_eq!(replay.g_si, direct.g_si);
}
