//! `solgas`: verification runs and simulations from the command line.
//!
//! Exit codes: 0 when the outcome matches the expectation (PASS unless
//! declared otherwise), 1 when it does not, 2 for usage and configuration
//! errors, 3 for numerical breakdowns.

mod commands;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use solgas_core::error::SolgasError;
use solgas_core::geometry::Verdict;

#[derive(Parser, Debug)]
#[command(
    name = "solgas",
    version,
    about = "Hamiltonian structures of reduced soliton gases"
)]
struct Cli {
    /// Directory of user kernel and family JSON files; overrides SOLGAS_CONFIG_DIR.
    #[arg(long, global = true)]
    config_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List kernels and structure families.
    Catalogue(CatalogueArgs),
    /// Run every check that applies to a family.
    Verify(VerifyArgs),
    /// Decide whether a metric is flat, of constant curvature, or neither.
    Classify(ClassifyArgs),
    /// Evolve the reduced system and track conserved quantities.
    Simulate(SimulateArgs),
    /// Residuals of the algebraic constant-curvature conditions.
    Conditions(ConditionsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Expectation {
    Pass,
    Fail,
}

impl From<Expectation> for Verdict {
    fn from(e: Expectation) -> Verdict {
        match e {
            Expectation::Pass => Verdict::Pass,
            Expectation::Fail => Verdict::Fail,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct Output {
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Constants {
    /// Shorthand for `--const c=VALUE`.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Family constant, repeatable: `--const c1=0.5`.
    #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_pair)]
    constants: Vec<(String, f64)>,
}

impl Constants {
    fn map(&self) -> BTreeMap<String, f64> {
        let mut m: BTreeMap<String, f64> = self.constants.iter().cloned().collect();
        if let Some(c) = self.c {
            m.insert("c".into(), c);
        }
        m
    }
}

fn parse_pair(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad number in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Args, Debug, Clone, Serialize)]
struct Sampling {
    /// Number of seeded sample points.
    #[arg(long, default_value_t = 30)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CatalogueArgs {
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    family: String,
    /// Component count; fixed-n families ignore a matching value and reject others.
    #[arg(long)]
    n: Option<usize>,
    /// Swap in another kernel by name.
    #[arg(long)]
    kernel: Option<String>,
    #[command(flatten)]
    constants: Constants,
    #[command(flatten)]
    sampling: Sampling,
    /// Override the family's declared expectation.
    #[arg(long, value_enum)]
    expect: Option<Expectation>,
    /// Tolerance override, repeatable: `--tol flat=1e-8`.
    #[arg(long = "tol", value_name = "CHECK=VALUE", value_parser = parse_pair)]
    tolerances: Vec<(String, f64)>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Clone, Serialize)]
struct InlineAnsatz {
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    s: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    phi: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    chi: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    psi: String,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ClassifyArgs {
    /// Take kernel and metric from a family.
    #[arg(long, conflicts_with = "kernel")]
    family: Option<String>,
    /// Kernel for an inline metric given by --s/--phi/--chi/--psi.
    #[arg(long)]
    kernel: Option<String>,
    #[command(flatten)]
    ansatz: InlineAnsatz,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[command(flatten)]
    constants: Constants,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, value_enum)]
    expect: Option<Expectation>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    UEta,
    REta,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    /// Simulation config JSON `{grid, cfl, t_max, kernel, initial, ...}`.
    #[arg(long, conflicts_with_all = ["kernel", "n", "grid", "tmax", "x_min", "x_max", "cfl", "mode", "outflow", "output_every", "family"])]
    config: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Cell count.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Zero-gradient outflow boundaries instead of periodic ones.
    #[arg(long)]
    outflow: bool,
    /// Keep a snapshot every this many steps.
    #[arg(long)]
    output_every: Option<usize>,
    /// Family whose density is integrated.
    #[arg(long)]
    family: Option<String>,
    /// Directory for CSV snapshots and report.json.
    #[arg(long, default_value = "solgas-simulation")]
    out_dir: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConditionsArgs {
    #[arg(long, conflicts_with = "kernel")]
    family: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[command(flatten)]
    ansatz: InlineAnsatz,
    /// Fit the polynomial constant-curvature template instead of using --s/--chi.
    #[arg(long, conflicts_with = "family")]
    fit: bool,
    #[arg(long, default_value_t = solgas_core::structures::TEMPLATE_DEGREE)]
    degree: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[command(flatten)]
    constants: Constants,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value_t = solgas_core::structures::ALGEBRAIC_TOL)]
    tol: f64,
    #[arg(long, value_enum)]
    expect: Option<Expectation>,
    #[command(flatten)]
    output: Output,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SolgasError>() {
        Some(e) if e.is_numerical_breakdown() || matches!(e, SolgasError::CrossCheck(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
