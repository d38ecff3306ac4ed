//! Experiment harness: instance generation, suite orchestration and report
//! persistence behind the `wacpair` binary.

pub mod config;
pub mod generator;
pub mod report;
pub mod suites;

use config::{Config, Suite};
use report::{ExperimentReport, Timestamp, SCHEMA};
use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "WACPAIR_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<generator::GenError> for CliError {
    fn from(e: generator::GenError) -> Self {
        match e {
            generator::GenError::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} = {v:?} is not a positive integer"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn run_experiment(
    config: &Config,
    suites: &[Suite],
    threads: usize,
) -> Result<ExperimentReport, CliError> {
    config.validate().map_err(CliError::Config)?;
    if suites.is_empty() {
        return Err(CliError::Config("no suites to run".into()));
    }
    let runner = suites::Runner { config, threads };
    let mut reports = Vec::with_capacity(suites.len());
    let mut suite_seconds = BTreeMap::new();
    for &s in suites {
        let start = Instant::now();
        reports.push(runner.run(s)?);
        suite_seconds.insert(s.name().to_string(), start.elapsed().as_secs_f64());
    }
    let unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Ok(ExperimentReport {
        schema: SCHEMA,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.experiment.seed,
        config: config.clone(),
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
        timestamp: Timestamp {
            unix_seconds,
            suite_seconds,
        },
    })
}
