//! `ncpick`: feasibility, NP norms, column–row search and self-verification
//! from the command line.
//!
//! Exit codes: 0 ok, 2 parse/config error, 10 infeasible, 11 not in alg_X,
//! 12 ANP preconditions unmet, 20 search budget exhausted, 30 verify failure.

mod commands;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 10;
pub const EXIT_NOT_IN_ALGEBRA: u8 = 11;
pub const EXIT_ANP: u8 = 12;
pub const EXIT_BUDGET: u8 = 20;
pub const EXIT_VERIFY: u8 = 30;

#[derive(Parser)]
#[command(name = "ncpick", version, about = "Nevanlinna–Pick interpolation in the noncommutative row ball")]
struct Cli {
    /// Worker threads for searches and verification suites (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a target admits an interpolant of norm at most 1.
    Feasible(FeasibleArgs),
    /// NP norm of a target, optionally preconditioned or along a t-grid.
    Npnorm(NpnormArgs),
    /// Column–row search (randomized, or the deterministic E_1i construction).
    Search(SearchArgs),
    /// Run the identity suites.
    Verify(VerifyArgs),
    /// Write a model node as tuple JSON.
    Examples(ExamplesArgs),
    /// Decide whether a matrix lies in the algebra generated by the node.
    AlgMember(AlgMemberArgs),
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TolArgs {
    /// Relative eigenvalue cutoff for the rank of P_X.
    #[arg(long, default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Relative slack for PSD decisions.
    #[arg(long, default_value_t = 1e-9)]
    pub psd_tol: f64,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FeasibleArgs {
    /// Node: tuple JSON or node-spec JSON.
    #[arg(long)]
    pub node: PathBuf,
    /// Target: block JSON.
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub tol: TolArgs,
    /// Write the verdict here (plus a manifest) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NpnormArgs {
    #[arg(long)]
    pub node: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Commutant element D (matrix JSON, n²×n²): use (D P D^*)^{1/2}.
    #[arg(long)]
    pub precondition: Option<PathBuf>,
    /// Trace ‖Y‖_NP(tX) along --t-grid; the node must be an irreducible co-isometry.
    #[arg(long)]
    pub anp: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.99, 0.999])]
    pub t_grid: Vec<f64>,
    /// Cross-check against the closed-form Pick matrix of t·(Choi point).
    #[arg(long)]
    pub choi_t: Option<f64>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchArgs {
    /// Search config JSON (or a manifest from an earlier search run).
    #[arg(long, required_unless_present = "deterministic")]
    pub config: Option<PathBuf>,
    /// Evaluate Y_i = E_1i on t·(shift, phase) instead of searching.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, requires = "deterministic")]
    pub n: Option<usize>,
    #[arg(long, requires = "deterministic")]
    pub t: Option<f64>,
    /// Directory for search.csv, best.json and manifest.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyArgs {
    #[arg(value_parser = ["quick", "full"], default_value = "quick")]
    pub level: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Negative control: run with a deliberately broken ψ.
    #[arg(long, hide = true)]
    pub corrupt_psi: bool,
    /// Write the JSON report here (plus a manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExamplesArgs {
    /// shift-dft | weighted-unitaries | choi-point | random-normalized
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: Option<usize>,
    /// JSON list of [re, im] weights (weighted-unitaries).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgMemberArgs {
    #[arg(long)]
    pub node: PathBuf,
    /// Matrix JSON (n×n).
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A command that could not produce its normal output.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ncpick::Error> for Failure {
    fn from(e: ncpick::Error) -> Self {
        use ncpick::Error as E;
        let code = match e {
            E::NotInAlgebra(_) => EXIT_NOT_IN_ALGEBRA,
            E::NotCoisometry { .. } | E::NotIrreducible { .. } | E::DegenerateGap { .. } => EXIT_ANP,
            E::BudgetExhausted => EXIT_BUDGET,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Feasible(a) => commands::feasible(a),
        Command::Npnorm(a) => commands::npnorm(a),
        Command::Search(a) => commands::search(a, cli.jobs),
        Command::Verify(a) => commands::verify(a),
        Command::Examples(a) => commands::examples(a),
        Command::AlgMember(a) => commands::alg_member(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
