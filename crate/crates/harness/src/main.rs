use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isabc_core::beampattern;
use isabc_core::benchmarks::{configure, Scheme};
use isabc_harness::clock::WallClock;
use isabc_harness::config_file::{apply_setting, parse_system};
use isabc_harness::experiment::{parse_schemes, parse_values};
use isabc_harness::export::ChannelFile;
use isabc_harness::trial::{solve_trial, trial_seeds};
use isabc_harness::{run_experiment, ExperimentSpec, HarnessError, SweepVar};

#[derive(Parser, Debug)]
#[command(name = "isabc", version, about = "Power-minimization experiments for RSMA backscatter downlinks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Monte-Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Outer-loop relative tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// System-parameter file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single parameter override, `KEY=VALUE`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment file.
    Run { spec: PathBuf },
    /// Sweep one variable across schemes.
    Sweep {
        /// M, K, L, delta_db, beta_db, kappa or none.
        #[arg(long)]
        var: String,
        /// Comma-separated values.
        #[arg(long, default_value = "")]
        values: String,
        /// Comma-separated scheme names or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
    },
    /// Solve one trial and write its beampatterns and channel.
    Beampattern {
        #[arg(long, default_value = "rsma-isabc")]
        scheme: String,
        /// Tag whose angle defines the sensing filter pattern.
        #[arg(long, default_value_t = 0)]
        tag: usize,
        /// Trial index within the master seed's stream.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
}

fn apply_common(spec: &mut ExperimentSpec, c: &Common) -> Result<(), HarnessError> {
    if let Some(path) = &c.config {
        spec.base = parse_system(&fs::read_to_string(path)?, spec.base.clone())?;
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Invalid(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        match apply_setting(&mut spec.base, k.trim(), v.trim()) {
            Ok(true) => {}
            Ok(false) => return Err(HarnessError::Invalid(format!("unknown parameter `{k}`"))),
            Err(e) => return Err(HarnessError::Invalid(format!("{k}: {e}"))),
        }
    }
    if let Some(t) = c.trials {
        spec.trials = t;
    }
    if let Some(s) = c.seed {
        spec.seed = s;
        spec.base.seed = s;
    }
    if let Some(o) = &c.out {
        spec.out = o.clone();
    }
    if let Some(t) = c.tol {
        spec.base.epsilon = t;
    }
    if let Some(w) = c.workers {
        spec.workers = w;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let clock = WallClock::new();
    match cli.cmd {
        Command::Run { spec } => {
            let mut s = ExperimentSpec::parse(&fs::read_to_string(&spec)?)?;
            apply_common(&mut s, &cli.common)?;
            report(&run_experiment(&s, &clock)?, &s);
        }
        Command::Sweep { var, values, schemes } => {
            let mut s = ExperimentSpec {
                name: format!("sweep-{var}"),
                sweep: var.parse::<SweepVar>().map_err(HarnessError::Invalid)?,
                values: parse_values(&values).map_err(HarnessError::Invalid)?,
                schemes: parse_schemes(&schemes).map_err(HarnessError::Invalid)?,
                ..ExperimentSpec::default()
            };
            apply_common(&mut s, &cli.common)?;
            report(&run_experiment(&s, &clock)?, &s);
        }
        Command::Beampattern { scheme, tag, trial } => {
            let mut s = ExperimentSpec::default();
            apply_common(&mut s, &cli.common)?;
            let scheme: Scheme = scheme.parse().map_err(|e| HarnessError::Invalid(format!("{e}")))?;
            let cfg = configure(scheme, &s.base);
            cfg.validate().map_err(|e| HarnessError::Invalid(e.to_string()))?;
            if tag >= cfg.tags {
                return Err(HarnessError::Invalid(format!("tag {tag} out of range (K = {})", cfg.tags)));
            }
            let seed = trial_seeds(s.seed, trial + 1)[trial];
            let solved = solve_trial(&cfg, seed, &clock).map_err(|e| HarnessError::Invalid(e.to_string()))?;
            let pattern = beampattern::sweep(&solved.channel, &solved.solution, &cfg, tag);
            fs::create_dir_all(&s.out)?;
            fs::write(s.out.join("beampattern.csv"), pattern.to_csv())?;
            fs::write(
                s.out.join("channel.json"),
                serde_json::to_string_pretty(&ChannelFile::from_channel(&solved.channel))?,
            )?;
            println!(
                "{scheme}: {:.3} W, tag {tag} at {:.1} deg, written to {}",
                solved.solution.total_power(),
                solved.channel.topology.tag_angles[tag].to_degrees(),
                s.out.display()
            );
        }
    }
    Ok(())
}

fn report(summary: &isabc_harness::experiment::RunSummary, spec: &ExperimentSpec) {
    for a in &summary.aggregates {
        let at = a.sweep_value.map_or(String::new(), |v| format!("{}={v} ", a.sweep_var));
        println!(
            "{at}{:<13} {:>8.3} W ({:>7.2} dBm)  ok {}/{}",
            a.scheme, a.power_w_mean, a.power_dbm_mean, a.succeeded, a.trials
        );
    }
    if summary.manifest.flagged {
        eprintln!("warning: {:.0}% of trials failed", 100.0 * summary.manifest.failure_rate);
    }
    println!("results in {}", spec.out.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
