//! Argument surface and entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::error::LabError;

#[derive(Parser)]
#[command(
    name = "semigroup-lab",
    version,
    about = "Numerical laboratory for dynamical semigroups: extract generators, \
             evolve states, unravel jump processes, count events, and run \
             interferometer scenarios",
    after_help = "Exit codes: 0 success, 1 validation failure, 2 input error, \
                  3 numerical (resonance/conditioning) error.\n\
                  SEMIGROUP_LAB_THREADS caps the trajectory-sampling thread pool.\n\
                  File schemas are documented in docs/formats.md."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a generator bundle from a model description.
    Extract(ExtractArgs),
    /// Propagate a density matrix on a time grid.
    Evolve(EvolveArgs),
    /// Sample jump trajectories and compare against exact counting weights.
    Unravel(UnravelArgs),
    /// Answer one counting question: probability, effect, repreparation.
    Count(CountArgs),
    /// Run the which-way interferometer scenario.
    Interfere(InterfereArgs),
    /// Run the invariant check battery and write a report.
    Validate(ValidateArgs),
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Model description JSON (see docs/formats.md).
    #[arg(long, value_name = "FILE", required_unless_present = "demo", conflicts_with = "demo")]
    pub model: Option<PathBuf>,
    /// Use the built-in demonstration model instead of a file.
    #[arg(long)]
    pub demo: bool,
    /// Inverse temperature of the Gibbs bath (overrides the model file's
    /// beta field; default 1.0).
    #[arg(long, value_name = "BETA")]
    pub beta: Option<f64>,
    /// Regularizer; overrides both the scan plateau and the spacing
    /// heuristic.
    #[arg(long, value_name = "ETA")]
    pub eta: Option<f64>,
    /// Scan the regularizer grid, write eta_scan.csv, and default eta to
    /// the plateau.
    #[arg(long)]
    pub eta_scan: bool,
    /// Lower end of the scan grid.
    #[arg(long, value_name = "ETA", default_value_t = 0.05)]
    pub eta_lo: f64,
    /// Upper end of the scan grid.
    #[arg(long, value_name = "ETA", default_value_t = 3.0)]
    pub eta_hi: f64,
    /// Number of scan grid points.
    #[arg(long, value_name = "N", default_value_t = 16)]
    pub eta_points: usize,
    /// Loss-operator convention: trace_enforced or raw.
    #[arg(long, default_value = "trace_enforced")]
    pub mode: String,
    /// Directory for bundle.json, diagnostics.json, and eta_scan.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct EvolveArgs {
    /// Generator bundle JSON (from extract).
    #[arg(long, value_name = "FILE")]
    pub bundle: PathBuf,
    /// Initial density matrix JSON.
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    /// Comma-separated list of times, e.g. "0,0.5,1".
    #[arg(long, value_name = "LIST")]
    pub t_grid: String,
    /// Propagation method: exp (dense exponential) or rk4.
    #[arg(long, default_value = "exp")]
    pub method: String,
    /// Step count per time for --method rk4.
    #[arg(long, value_name = "N", default_value_t = 400)]
    pub steps: usize,
    /// Directory for evolved.json and evolve.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct UnravelArgs {
    /// Generator bundle JSON (from extract).
    #[arg(long, value_name = "FILE")]
    pub bundle: PathBuf,
    /// Initial pure state JSON (normalized on load).
    #[arg(long, value_name = "FILE")]
    pub ket: PathBuf,
    /// Length of the observation window.
    #[arg(long, value_name = "T")]
    pub t: f64,
    /// Number of trajectories.
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub trajectories: usize,
    /// Master seed; every run with the same seed is byte-identical.
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    pub seed: u64,
    /// Truncation of the exact counting table in counts.csv.
    #[arg(long, value_name = "N", default_value_t = 12)]
    pub n_max: usize,
    /// Directory for trajectories.csv, counts.csv, averaged_state.json,
    /// and summary.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct CountArgs {
    /// Generator bundle JSON (from extract).
    #[arg(long, value_name = "FILE")]
    pub bundle: PathBuf,
    /// Density matrix at the start of the counting window.
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    /// Counting question JSON (see docs/formats.md).
    #[arg(long, value_name = "FILE")]
    pub query: PathBuf,
    /// Directory for count.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct InterfereArgs {
    /// Which-way event rate on the arms.
    #[arg(long, value_name = "RATE")]
    pub gamma_w: f64,
    /// Real part of the arm-2 potential.
    #[arg(long, value_name = "V", default_value_t = 0.0)]
    pub v2_re: f64,
    /// Imaginary part of the arm-2 potential (>= 0 absorbs).
    #[arg(long, value_name = "V", default_value_t = 0.0)]
    pub v2_im: f64,
    /// Transit time through the arms.
    #[arg(long, value_name = "T")]
    pub t: f64,
    /// Number of phase-plate settings on the scan grid.
    #[arg(long, value_name = "N", default_value_t = 64)]
    pub phi_steps: usize,
    /// Directory for pattern.csv and summary.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Only run checks whose module name contains this substring.
    #[arg(long, value_name = "MODULE")]
    pub filter: Option<String>,
    /// Multiply every bound by this factor (forces failures when tiny).
    #[arg(long, value_name = "SCALE", default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Directory for report.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// Cap the global thread pool when SEMIGROUP_LAB_THREADS is set. Calling
/// this more than once is harmless: the pool is built on first use only.
fn configure_threads() {
    if let Ok(raw) = std::env::var("SEMIGROUP_LAB_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("warning: SEMIGROUP_LAB_THREADS={raw:?} is not a positive integer; ignored");
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    match &cli.command {
        Command::Extract(args) => commands::cmd_extract(args),
        Command::Evolve(args) => commands::cmd_evolve(args),
        Command::Unravel(args) => commands::cmd_unravel(args),
        Command::Count(args) => commands::cmd_count(args),
        Command::Interfere(args) => commands::cmd_interfere(args),
        Command::Validate(args) => commands::cmd_validate(args),
    }
}

/// Parse and run; returns the process exit code. Usable from tests with a
/// synthetic argument list.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here with a zero status.
            let code = if err.exit_code() == 0 { 0 } else { 2 };
            let _ = err.print();
            return code;
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
