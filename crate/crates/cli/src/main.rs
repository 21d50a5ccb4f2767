use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod resolve;

use resolve::Format;

/// Small periodic waves of the b-KP equation and their transverse stability.
///
/// Any flag can also come from `--config FILE` (key = value lines, or an artifact
/// written by this tool) or from a `BKP_<FLAG>` environment variable. Command-line
/// flags win over the file, the file wins over the environment.
#[derive(Parser, Debug)]
#[command(name = "bkp", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the periodic wave (Stokes expansion or Newton-refined).
    Wave(WaveArgs),
    /// Spectrum of the linearized operator at one (ell, xi).
    Spectrum(SpectrumArgs),
    /// Locate the transverse instability threshold in ell^2 by bisection.
    Threshold(ThresholdArgs),
    /// Scan ell^2 for the unstable band opened by a Bloch collision.
    Band(BandArgs),
    /// Closed-form stability map over a (b, k^2) grid.
    Region(RegionArgs),
    /// Run tasks over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Defaults to 2.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, conflicts_with = "k2")]
    pub k: Option<f64>,
    /// Give k^2 directly, kept exact.
    #[arg(long)]
    pub k2: Option<f64>,
    /// -1 (KP-I, default) or +1 (KP-II).
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// Fourier truncation N; defaults to 32.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Newton residual tolerance; defaults to 1e-12.
    #[arg(long)]
    pub tol: Option<f64>,
    /// newton (default) or stokes.
    #[arg(long)]
    pub wave: Option<String>,
    /// Read defaults from a key-value file or an earlier artifact.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; repeat for several formats. The extension picks the format.
    #[arg(long)]
    pub out: Vec<PathBuf>,
    /// Format for stdout, or for `--out` paths without a known extension.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct WaveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub ell: Option<f64>,
    /// Bloch parameter in (-1/2, 1/2]; defaults to 0.
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Also compare against a run with twice the modes.
    #[arg(long)]
    pub check: bool,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Bracket in ell^2; defaults to (0.1, 3) times the predicted threshold.
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Bisection stops when the bracket is narrower than this; defaults to 1e-10.
    #[arg(long)]
    pub bisect_tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BandArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// Scan range in ell^2; defaults to [ell_0^2, ell_-^2].
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Scan points before edge refinement; defaults to 121.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: Common,
    /// Amplitude used when verifying cells; defaults to 0.05 (periodic) or 0.02 (bloch).
    #[arg(long)]
    pub a: Option<f64>,
    /// periodic (default) or bloch.
    #[arg(long)]
    pub mode: Option<String>,
    /// Required in bloch mode.
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub b_steps: Option<usize>,
    #[arg(long)]
    pub k2_min: Option<f64>,
    #[arg(long)]
    pub k2_max: Option<f64>,
    #[arg(long)]
    pub k2_steps: Option<usize>,
    /// Eigen-validate this many random cells.
    #[arg(long)]
    pub verify: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi: Option<f64>,
    /// name:lo:hi:steps with name in b, kappa, k, a, ell, xi. Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub axis: Vec<String>,
    /// spectrum, threshold, band or region. Repeatable.
    #[arg(long)]
    pub task: Vec<String>,
    /// Defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Record wall time per row (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<bkp_core::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Wave(a) => commands::wave(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Band(a) => commands::band(a),
        Command::Region(a) => commands::region(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
