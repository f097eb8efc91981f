//! `taser-sim` command line: `run`, `sweep` and `validate`.
//!
//! Exit codes: 0 success, 1 runtime or configuration failure, 2 usage error.
//! Sweep run seeds are `mix_seed([root_seed, value_index, seed_index])`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{parse_config, ConfigError, ScenarioConfig};
use crate::events::{fmt_sig9, LogDetail};
use crate::metrics_report::{self, MetricsError, MetricsRow, SummaryRow};
use crate::rng::mix_seed;
use crate::sim_engine;

#[derive(Debug, Parser)]
#[command(name = "taser-sim", version, about = "Trust-based Sybil detection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute one run and write metrics.csv and events.csv.
    Run(RunArgs),
    /// Sweep one parameter over several values and seeds.
    Sweep(SweepArgs),
    /// Check a config file and print its canonical form.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "TASER_SIM_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<f64>,
    /// Seeds per value.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// Root seed; defaults to the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "TASER_SIM_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    #[value(name = "sybil_fraction")]
    SybilFraction,
    #[value(name = "lambda")]
    Lambda,
    #[value(name = "delta")]
    Delta,
    #[value(name = "beta")]
    Beta,
    #[value(name = "alpha")]
    Alpha,
    #[value(name = "seed")]
    Seed,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SybilFraction => "sybil_fraction",
            SweepParam::Lambda => "lambda",
            SweepParam::Delta => "delta",
            SweepParam::Beta => "beta",
            SweepParam::Alpha => "alpha",
            SweepParam::Seed => "seed",
        }
    }

    pub fn apply(self, config: &mut ScenarioConfig, value: f64) {
        match self {
            SweepParam::SybilFraction => config.sybil_fraction = value,
            SweepParam::Lambda => config.trust.lambda = value,
            SweepParam::Delta => config.trust.delta = value,
            SweepParam::Beta => config.trust.beta = value,
            SweepParam::Alpha => config.trust.alpha = value,
            SweepParam::Seed => config.seed = value as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Sorted by (value index, seed index).
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every (value, seed) point of a sweep. Rows do not depend on the
/// worker count.
pub fn sweep(base: &ScenarioConfig, spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepOutput, CliError> {
    if spec.values.is_empty() {
        return Err(CliError::Usage("--values needs at least one value".into()));
    }
    if spec.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let mut points = Vec::new();
    for (vi, &value) in spec.values.iter().enumerate() {
        let mut cfg = base.clone();
        spec.param.apply(&mut cfg, value);
        cfg.validate()?;
        let root = cfg.seed;
        for si in 0..spec.seeds {
            let mut c = cfg.clone();
            c.seed = mix_seed(&[root, vi as u64, si]);
            points.push((vi, si, c));
        }
    }

    let execute = || {
        points
            .par_iter()
            .map(|(vi, si, c)| {
                let out = sim_engine::run_with_detail(c.clone(), LogDetail::Summary)?;
                Ok((*vi, *si, MetricsRow::new(c, out.metrics)))
            })
            .collect::<Result<Vec<_>, ConfigError>>()
    };
    let mut results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(execute)?,
        None => execute()?,
    };
    results.sort_by_key(|(vi, si, _)| (*vi, *si));

    let summary = spec
        .values
        .iter()
        .enumerate()
        .map(|(vi, &value)| {
            let group: Vec<&MetricsRow> = results.iter().filter(|(v, _, _)| *v == vi).map(|(_, _, r)| r).collect();
            SummaryRow::aggregate(spec.param.name(), value, &group)
        })
        .collect();
    Ok(SweepOutput {
        rows: results.into_iter().map(|(_, _, r)| r).collect(),
        summary,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig9).unwrap_or_else(|| "n/a".into())
}

fn summary_line(row: &MetricsRow) -> String {
    let s = &row.metrics.scores;
    let c = &row.metrics.confusion;
    format!(
        "seed={} accuracy={} f1={} specificity={} mean_detection_epochs={} tp={} fp={} tn={} fn={}",
        row.seed,
        opt(s.accuracy),
        opt(s.f1),
        opt(s.specificity),
        opt(row.metrics.mean_detection_epochs()),
        c.tp,
        c.fp,
        c.tn,
        c.fn_
    )
}

pub fn cmd_run(config: &Path, seed: Option<u64>, out: &Path) -> Result<MetricsRow, CliError> {
    let mut cfg = parse_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let run = sim_engine::run(cfg.clone())?;
    let row = MetricsRow::new(&cfg, run.metrics);
    metrics_report::emit_csv(&row, &run.log, out)?;
    println!("{}", summary_line(&row));
    Ok(row)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutput, CliError> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let spec = SweepSpec {
        param: args.param,
        values: args.values.clone(),
        seeds: args.seeds,
    };
    let out = sweep(&cfg, &spec, args.jobs.map(|j| j as usize))?;
    std::fs::create_dir_all(&args.out).map_err(|source| MetricsError::Io {
        path: args.out.clone(),
        source,
    })?;
    metrics_report::write_metrics_csv(&out.rows, &args.out.join("metrics.csv"))?;
    metrics_report::write_summary_csv(&out.summary, &args.out.join("summary.csv"))?;
    for s in &out.summary {
        println!(
            "{}={} runs={} accuracy={} f1={} specificity={} mean_detection_epochs={}",
            s.param,
            fmt_sig9(s.value),
            s.runs,
            opt(s.accuracy),
            opt(s.f1),
            opt(s.specificity),
            opt(s.mean_detection_epochs)
        );
    }
    Ok(out)
}

pub fn cmd_validate(config: &Path) -> Result<ScenarioConfig, CliError> {
    let cfg = parse_config(config)?;
    print!("{}", cfg.to_toml_string());
    Ok(cfg)
}

/// Parses arguments, dispatches, reports errors on stderr and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&a.config, a.seed, &a.out).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
        Command::Validate(a) => cmd_validate(&a.config).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Config(ConfigError::Io { .. })) {
                eprintln!("hint: pass an existing TOML file with --config <path>");
            }
            e.exit_code()
        }
    }
}
