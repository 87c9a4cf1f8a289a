//! Experiment definitions, the trial pool and on-disk outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use isabc_core::ao::Clock;
use isabc_core::benchmarks::{configure, Scheme};
use isabc_core::system::{db_to_linear, Fading, SystemConfig};
use serde::Serialize;

use crate::aggregate::{aggregate, AggregateRow};
use crate::config_file::{apply_setting, entries, ConfigFileError};
use crate::trial::{solve_trial, trial_seeds, TrialRecord};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    ConfigFile(#[from] ConfigFileError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepVar {
    /// No sweep; one point per scheme.
    None,
    /// M = N.
    Antennas,
    Tags,
    Users,
    /// All three SIC residuals, dB.
    SicDb,
    /// Residual self-interference, dB.
    SiDb,
    /// Link Rician factor, linear; 0 selects Rayleigh.
    Kappa,
}

impl SweepVar {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVar::None => "none",
            SweepVar::Antennas => "M",
            SweepVar::Tags => "K",
            SweepVar::Users => "L",
            SweepVar::SicDb => "delta_db",
            SweepVar::SiDb => "beta_db",
            SweepVar::Kappa => "kappa",
        }
    }

    pub fn apply(&self, cfg: &mut SystemConfig, v: f64) {
        match self {
            SweepVar::None => {}
            SweepVar::Antennas => {
                cfg.tx_antennas = v as usize;
                cfg.rx_antennas = v as usize;
            }
            SweepVar::Tags => cfg.tags = v as usize,
            SweepVar::Users => cfg.users = v as usize,
            SweepVar::SicDb => *cfg = cfg.clone().with_sic(db_to_linear(v)),
            SweepVar::SiDb => cfg.si_residual = db_to_linear(v),
            SweepVar::Kappa => {
                cfg.link_fading = if v == 0.0 { Fading::Rayleigh } else { Fading::Rician { kappa: v } }
            }
        }
    }

    fn check(&self, v: f64) -> Result<(), String> {
        let whole = v.fract() == 0.0;
        let ok = match self {
            SweepVar::None => true,
            SweepVar::Antennas => whole && (2.0..=16.0).contains(&v),
            SweepVar::Tags => whole && (1.0..=8.0).contains(&v),
            SweepVar::Users => whole && (1.0..=8.0).contains(&v),
            SweepVar::SicDb | SweepVar::SiDb => v <= 0.0,
            SweepVar::Kappa => v >= 0.0,
        };
        if ok && v.is_finite() {
            Ok(())
        } else {
            Err(format!("{} = {v} is out of range", self.label()))
        }
    }
}

impl FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "none" | "scheme" => SweepVar::None,
            "m" | "m=n" | "antennas" => SweepVar::Antennas,
            "k" | "tags" => SweepVar::Tags,
            "l" | "users" => SweepVar::Users,
            "delta" | "delta_db" | "sic" => SweepVar::SicDb,
            "beta" | "beta_db" | "si" => SweepVar::SiDb,
            "kappa" | "rician" => SweepVar::Kappa,
            other => return Err(format!("unknown sweep variable `{other}`")),
        })
    }
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    s.split(',').map(|x| x.trim().parse::<Scheme>().map_err(|e| e.to_string())).collect()
}

pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SystemConfig,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            base: SystemConfig::default(),
            sweep: SweepVar::None,
            values: Vec::new(),
            schemes: vec![Scheme::RsmaIsabc],
            trials: 100,
            seed: 0,
            out: PathBuf::from("out"),
            workers: 0,
        }
    }
}

/// One `(sweep value, scheme)` cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: Option<f64>,
    pub scheme: Scheme,
}

impl ExperimentSpec {
    /// Reads an experiment file: the system keys plus `name`, `trials`,
    /// `seed`, `out`, `sweep`, `values`, `schemes` and `workers`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut spec = ExperimentSpec::default();
        for (line, key, value) in entries(text)? {
            let bad = |reason: String| ConfigFileError::BadValue {
                line,
                key: key.clone(),
                value: value.clone(),
                reason,
            };
            match key.as_str() {
                "name" => spec.name = value.clone(),
                "trials" => spec.trials = value.parse().map_err(|_| bad("not a count".into()))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad("not a seed".into()))?,
                "out" => spec.out = PathBuf::from(&value),
                "workers" => spec.workers = value.parse().map_err(|_| bad("not a count".into()))?,
                "sweep" => spec.sweep = value.parse().map_err(bad)?,
                "values" => spec.values = parse_values(&value).map_err(bad)?,
                "schemes" => spec.schemes = parse_schemes(&value).map_err(bad)?,
                _ => match apply_setting(&mut spec.base, &key, &value) {
                    Ok(true) => {}
                    Ok(false) => return Err(ConfigFileError::UnknownKey { line, key }.into()),
                    Err(reason) => return Err(bad(reason).into()),
                },
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        if self.sweep != SweepVar::None && self.values.is_empty() {
            return bad(format!("sweep over {} has no values", self.sweep.label()));
        }
        for &v in &self.values {
            self.sweep.check(v).map_err(HarnessError::Invalid)?;
        }
        for p in self.points() {
            self.config_at(&p)
                .validate()
                .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let values: Vec<Option<f64>> = if self.sweep == SweepVar::None {
            vec![None]
        } else {
            self.values.iter().map(|&v| Some(v)).collect()
        };
        values
            .iter()
            .flat_map(|&value| self.schemes.iter().map(move |&scheme| SweepPoint { value, scheme }))
            .collect()
    }

    pub fn config_at(&self, p: &SweepPoint) -> SystemConfig {
        let mut cfg = configure(p.scheme, &self.base);
        if let Some(v) = p.value {
            self.sweep.apply(&mut cfg, v);
        }
        cfg
    }
}

fn worker_count(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Runs `jobs` on a bounded pool and returns results in job order.
pub fn run_pool<J: Sync, T: Send>(jobs: &[J], workers: usize, f: impl Fn(&J) -> T + Sync) -> Vec<T> {
    let workers = worker_count(workers).min(jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(jobs.len()));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                done.lock().unwrap_or_else(|e| e.into_inner()).push((i, r));
            });
        }
    });
    let mut done = done.into_inner().unwrap_or_else(|e| e.into_inner());
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

/// Every trial of every point, in point-major, trial-minor order.
pub fn run_trials(spec: &ExperimentSpec, clock: &(dyn Clock + Sync)) -> Vec<TrialRecord> {
    let seeds = trial_seeds(spec.seed, spec.trials);
    let jobs: Vec<(SweepPoint, usize)> = spec
        .points()
        .into_iter()
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let label = spec.sweep.label();
    run_pool(&jobs, spec.workers, |&(p, t)| {
        let cfg = spec.config_at(&p);
        let out = solve_trial(&cfg, seeds[t], clock);
        if let Err(e) = &out {
            log::warn!("{} {label}={:?} trial {t}: {e}", p.scheme, p.value);
        }
        TrialRecord::from_outcome(&cfg, t, seeds[t], label, p.value, &out)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PointCount {
    pub scheme: String,
    pub sweep_value: Option<f64>,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub tool_version: String,
    pub seed: u64,
    pub trials: usize,
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    pub schemes: Vec<String>,
    pub base_config: SystemConfig,
    pub points: Vec<PointCount>,
    pub failure_rate: f64,
    /// More than a tenth of all trials failed.
    pub flagged: bool,
    pub files: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
    pub manifest: Manifest,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TimingRow<'a> {
    trial: usize,
    scheme: &'a str,
    sweep_value: Option<f64>,
    wall_time_s: f64,
}

/// Runs every trial and writes `trials.csv`, `aggregate.csv`, `timing.csv`
/// and `manifest.json` under `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec, clock: &(dyn Clock + Sync)) -> Result<RunSummary, HarnessError> {
    spec.validate()?;
    fs::create_dir_all(&spec.out)?;
    let records = run_trials(spec, clock);

    let mut aggregates = Vec::new();
    let mut points = Vec::new();
    for (res, group) in aggregate(&records).into_iter().zip(crate::aggregate::group(&records)) {
        let failed = group.iter().filter(|r| !r.ok()).count();
        points.push(PointCount {
            scheme: group[0].scheme.clone(),
            sweep_value: group[0].sweep_value,
            succeeded: group.len() - failed,
            failed,
        });
        match res {
            Ok(a) => aggregates.push(a),
            Err(e) => log::warn!("{e}"),
        }
    }
    let failures = records.iter().filter(|r| !r.ok()).count();
    let failure_rate = failures as f64 / records.len().max(1) as f64;

    write_csv(&spec.out.join("trials.csv"), &records)?;
    write_csv(&spec.out.join("aggregate.csv"), &aggregates)?;
    let timing: Vec<TimingRow> = records
        .iter()
        .map(|r| TimingRow {
            trial: r.trial,
            scheme: &r.scheme,
            sweep_value: r.sweep_value,
            wall_time_s: r.wall_time_s,
        })
        .collect();
    write_csv(&spec.out.join("timing.csv"), &timing)?;

    let manifest = Manifest {
        name: spec.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: spec.seed,
        trials: spec.trials,
        sweep_var: spec.sweep,
        values: spec.values.clone(),
        schemes: spec.schemes.iter().map(|s| s.name().to_string()).collect(),
        base_config: spec.base.clone(),
        points,
        failure_rate,
        flagged: failure_rate > 0.1,
        files: ["trials.csv", "aggregate.csv", "timing.csv", "manifest.json"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    if manifest.flagged {
        log::warn!("{:.0}% of trials failed", 100.0 * failure_rate);
    }
    fs::write(spec.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary {
        records,
        aggregates,
        manifest,
    })
}
