//! `privsplit`: validate scenarios, run single policies, sweep parameters.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use privsplit_core::scenario::{validate_template, ScenarioError, ScenarioTemplate, SweepAxis};
use privsplit_core::sim::output::{write_atomic, write_bundle};
use privsplit_core::sim::sweep::{aggregate, aggregate_csv, run_sweep, sweep_csv};
use privsplit_core::sim::validate::check_constraints;
use privsplit_core::sim::{run_horizon, Policy, SimError};

#[derive(Debug, Parser)]
#[command(name = "privsplit", version, about = "Privacy-aware collaborative edge inference simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file and print any warnings.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run one policy over the horizon and write an output bundle.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed")]
        policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every (value, policy, seed) combination along one axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "policy", value_delimiter = ',', default_value = "proposed")]
        policies: Vec<Policy>,
        /// First seed of the sweep.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long = "sweep-axis")]
        axis: SweepAxis,
        #[arg(long = "sweep-values", value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Defaults to the scenario's slot count.
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Random switches between exchange attempts.
    #[arg(long = "g-period")]
    g_period: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long = "per-md-queues")]
    per_md_queues: bool,
    #[arg(long = "cold-start")]
    cold_start: bool,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read scenario {path}: {source}")]
    Missing { path: String, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    Scenario(ScenarioError),
    #[error("{0} constraint violations")]
    Violations(usize),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Runtime(SimError),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { path, source } => CliError::Missing { path, source },
            other => CliError::Scenario(other),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Scenario(s) => s.into(),
            other => CliError::Runtime(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Scenario(_) | CliError::Violations(_) => 3,
            CliError::Missing { .. } | CliError::Io(_) => 4,
            CliError::Runtime(_) => 5,
        }
    }
}

impl Common {
    fn template(&self) -> Result<ScenarioTemplate, CliError> {
        let t = ScenarioTemplate::load(&self.scenario)?;
        let mut file = t.file.clone();
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(CliError::Config(format!("--alpha must be positive, got {a}")));
            }
            file.algorithm.alpha = a;
        }
        if let Some(g) = self.g_period {
            if g == 0 {
                return Err(CliError::Config("--g-period must be at least 1".into()));
            }
            file.algorithm.exchange_period = g;
        }
        if self.slots == Some(0) {
            return Err(CliError::Config("--slots must be at least 1".into()));
        }
        file.algorithm.per_device_queues |= self.per_md_queues;
        file.algorithm.cold_start |= self.cold_start;
        Ok(ScenarioTemplate::from_parts(file, t.catalogs().to_vec())?)
    }
}

fn validate(path: &Path) -> Result<(), CliError> {
    let t = ScenarioTemplate::load(path)?;
    let report = validate_template(&t)?;
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!(
        "ok: {} ({} devices, {} servers, {} services, hash {})",
        t.file.name,
        t.device_count(),
        t.server_count(),
        t.library().len(),
        t.hash()
    );
    Ok(())
}

fn run(common: &Common, policy: Policy, seed: u64) -> Result<(), CliError> {
    let t = common.template()?;
    let scenario = t.instantiate(seed)?;
    let slots = common.slots.unwrap_or(scenario.slots);
    let result = run_horizon(&scenario, policy, slots)?;
    let violations = check_constraints(&scenario, &result);
    for v in &violations {
        eprintln!("violation: {v}");
    }
    let paths = write_bundle(&common.out, &result)?;
    log::info!("wrote {}", paths.summary.display());
    let s = &result.summary;
    println!(
        "{policy} seed={seed} slots={slots}: avg delay {:.4} s, privacy loss {:.2}%, final queue {:.3}",
        s.mean_md_delay_s, s.privacy_loss_pct, s.final_queue
    );
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violations(violations.len()))
    }
}

fn sweep(
    common: &Common,
    policies: &[Policy],
    first_seed: u64,
    seeds: u64,
    axis: SweepAxis,
    values: &[String],
) -> Result<(), CliError> {
    if seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let t = common.template()?;
    // reject bad values before spending time on runs
    for v in values {
        t.with_axis(axis, v)?;
    }
    let seed_list: Vec<u64> = (first_seed..first_seed + seeds).collect();
    let slots = common.slots.unwrap_or(t.file.slots);
    let rows = run_sweep(&t, axis, values, policies, &seed_list, slots)?;
    let aggs = aggregate(&rows);
    std::fs::create_dir_all(&common.out)?;
    let stem = format!("{}_sweep_{axis}", t.hash());
    write_atomic(&common.out.join(format!("{stem}.csv")), &sweep_csv(&rows)?)?;
    write_atomic(&common.out.join(format!("{stem}_agg.csv")), &aggregate_csv(&aggs)?)?;
    for a in &aggs {
        println!(
            "{axis}={} {}: avg delay {:.4} s (sd {:.4}), privacy loss {:.2}% over {} runs",
            a.value, a.policy, a.mean_md_delay_s, a.std_md_delay_s, a.privacy_loss_pct, a.runs
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { scenario } => validate(scenario),
        Command::Run { common, policy, seed } => run(common, *policy, *seed),
        Command::Sweep {
            common,
            policies,
            seed,
            seeds,
            axis,
            values,
        } => sweep(common, policies, *seed, *seeds, *axis, values),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
