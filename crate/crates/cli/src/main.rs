use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wacpair_cli::config::{Config, ConfigLoadError, Suite};
use wacpair_cli::generator::gen_pair;
use wacpair_cli::{run_experiment, threads_from_env, CliError};
use wacpair_core::algebra::{commutator, instance_hash, norm, MatrixJson};
use wacpair_core::Sign;

/// Numerical experiments on weakly anticommuting operator pairs.
#[derive(Parser)]
#[command(name = "wacpair", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the JSON report and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the identity tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write one generated pair as matrix JSON.
    Generate,
    Certify,
    SumConverge,
    Clifford,
    SquareSum,
    Dunford,
    KkCheck,
    Identities,
    /// Run every suite listed in the configuration.
    Report,
}

impl Command {
    fn suite(self) -> Option<Suite> {
        Some(match self {
            Command::Certify => Suite::Certify,
            Command::SumConverge => Suite::SumConverge,
            Command::Clifford => Suite::Clifford,
            Command::SquareSum => Suite::SquareSum,
            Command::Dunford => Suite::Dunford,
            Command::KkCheck => Suite::KkCheck,
            Command::Identities => Suite::Identities,
            Command::Generate | Command::Report => return None,
        })
    }
}

fn load(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| match e {
            ConfigLoadError::Io(m) => CliError::Io(m),
            ConfigLoadError::Parse(m) => CliError::Config(m),
        })?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.experiment.seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.experiment.tol = t;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn generate(cfg: &Config, out: &Path) -> Result<bool, CliError> {
    let mut spec = cfg.generator.clone();
    spec.seed = cfg.experiment.seed;
    let (s, t) = gen_pair(&spec)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write_json(
        &out.join("s.json"),
        &json!(MatrixJson::from_matrix(s.matrix())),
    )?;
    write_json(
        &out.join("t.json"),
        &json!(MatrixJson::from_matrix(t.matrix())),
    )?;
    let k = norm(&commutator(s.matrix(), t.matrix(), Sign::Plus));
    let info = json!({
        "schema": wacpair_cli::report::SCHEMA,
        "seed": spec.seed,
        "generator": spec,
        "instance_hash": instance_hash(&[s.matrix(), t.matrix()], "pair"),
        "anticommutator_norm": k,
    });
    write_json(&out.join("instance.json"), &info)?;
    println!("wrote pair with |[S,T]_+| = {k:.6e} to {}", out.display());
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = load(cli)?;
    let out = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("wacpair-out"));
    if let Command::Generate = cli.command {
        return generate(&cfg, &out);
    }
    let suites = match cli.command.suite() {
        Some(s) => vec![s],
        None => cfg.suites(),
    };
    let report = run_experiment(&cfg, &suites, threads_from_env()?)?;
    let write_result = report
        .write(&out)
        .map_err(|e| CliError::Io(format!("{}: {e}", out.display())));
    for s in &report.suites {
        println!(
            "{:<13} {}",
            s.suite.name(),
            if s.passed { "pass" } else { "FAIL" }
        );
        for c in s.checks.iter().filter(|c| !c.passed) {
            println!("  failed: {} = {:e} (bound {:e})", c.name, c.value, c.bound);
        }
    }
    write_result?;
    println!("report: {}", out.join("report.json").display());
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
