//! `hyperbox`: theory tables, Monte Carlo runs and comparisons.
//!
//! Exit codes: 0 success, 1 comparison verdict failed, 2 invalid
//! configuration, 3 domain or I/O error, 4 sampler error, 5 comparison
//! could not be made.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use config::json_flag;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(hyperbox::Error),
    Io(String),
    Compare(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_sampler() => 4,
            CliError::Core(_) | CliError::Io(_) => 3,
            CliError::Compare(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Compare(m) => write!(f, "compare: {m}"),
        }
    }
}

impl From<hyperbox::Error> for CliError {
    fn from(e: hyperbox::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(name = "hyperbox", version, about = "Hyperuniform point processes: covariance kernels and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a limit covariance kernel to cov_theory.csv.
    Theory(TheoryArgs),
    /// Sample a process and write cov_curve.csv, var_growth.csv, paths.csv.
    Simulate(SimulateArgs),
    /// Check a cov_curve.csv against a limit kernel.
    Compare(CompareArgs),
}

#[derive(Args)]
struct TheoryArgs {
    /// JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// integrable, rv1d or rv2d.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// One or more exponents, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Option<Vec<f64>>,
    /// Model descriptor as JSON (rv2d).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    fit_n: Option<f64>,
    /// min:max:step
    #[arg(long, allow_hyphen_values = true)]
    zgrid: Option<String>,
    /// Integer shifts in [-2, 2]^d.
    #[arg(long)]
    zgrid_lattice: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Process descriptor as JSON.
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zgrid: Option<String>,
    /// Shift vectors as JSON, e.g. [[0.5],[1]].
    #[arg(long, allow_hyphen_values = true)]
    shifts: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<f64>>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    path_var: Option<f64>,
    #[arg(long)]
    z_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cov_curve: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    fit_n: Option<f64>,
    #[arg(long)]
    sigmas: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    expect_config_hash: Option<String>,
    /// Compare even if the sidecar is missing or does not match.
    #[arg(long)]
    force: bool,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default)]
struct Flags(Map<String, Value>);

impl Flags {
    fn set<T: serde::Serialize>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), serde_json::to_value(v).expect("flag serializes"));
        }
    }

    fn set_json(&mut self, key: &str, text: Option<String>) -> Result<(), CliError> {
        if let Some(t) = text {
            self.0.insert(key.to_string(), json_flag(key, &t)?);
        }
        Ok(())
    }

    fn set_true(&mut self, key: &str, on: bool) {
        if on {
            self.0.insert(key.to_string(), Value::Bool(true));
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut f = Flags::default();
    match cli.command {
        Command::Theory(a) => {
            f.set("family", a.family);
            f.set("d", a.d);
            f.set("a", a.a.map(|v| if v.len() == 1 { Value::from(v[0]) } else { Value::from(v) }));
            f.set_json("model", a.model)?;
            f.set("fit_n", a.fit_n);
            f.set("zgrid", a.zgrid);
            f.set_true("zgrid_lattice", a.zgrid_lattice);
            f.set("out", a.out);
            f.set("threads", a.threads);
            let raw = config::merge(a.config.as_ref(), f.0)?;
            commands::theory(raw)
        }
        Command::Simulate(a) => {
            f.set_json("process", a.process)?;
            f.set("seed", a.seed);
            f.set("replicas", a.replicas);
            f.set("n", a.n);
            f.set("zgrid", a.zgrid);
            f.set_json("shifts", a.shifts)?;
            f.set("n_grid", a.n_grid);
            f.set("paths", a.paths);
            f.set("path_var", a.path_var);
            f.set("z_max", a.z_max);
            f.set("out", a.out);
            f.set("threads", a.threads);
            let raw = config::merge(a.config.as_ref(), f.0)?;
            commands::simulate(raw)
        }
        Command::Compare(a) => {
            f.set("cov_curve", a.cov_curve);
            f.set("family", a.family);
            f.set("d", a.d);
            f.set("a", a.a);
            f.set_json("model", a.model)?;
            f.set("fit_n", a.fit_n);
            f.set("sigmas", a.sigmas);
            f.set("abs_tol", a.abs_tol);
            f.set("expect_config_hash", a.expect_config_hash);
            f.set_true("force", a.force);
            f.set("out", a.out);
            let raw = config::merge(a.config.as_ref(), f.0)?;
            commands::compare(raw)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("hyperbox: {e}");
            ExitCode::from(e.code())
        }
    }
}
