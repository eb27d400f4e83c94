//! Command-line front end for the phaseobs toolkit.
//!
//! Every subcommand starts from a default run config, overlays an optional
//! JSON config file, then overlays the flags given on the command line.
//! The effective config is echoed to stderr on every run and can be dumped
//! with `--dump-config` for an exact re-run.  Artifacts are CSV (with a
//! header row) and JSON; numbers carry 17 significant digits, so outputs
//! of identical configs are bitwise identical.  Files are written
//! atomically (write-then-rename).  Exit codes: 0 success, 1 numerical
//! contract violation, 2 usage.

mod artifacts;
mod config;
mod inputs;
mod run;

use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

/// Errors split by exit code: usage mistakes exit 2, everything that went
/// wrong while computing or writing exits 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(phaseobs::ModelError),
    Io(std::io::Error),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Failed(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<phaseobs::ModelError> for CliError {
    fn from(e: phaseobs::ModelError) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phaseobs",
    version,
    about = "Phase-space observation toolkit: transforms, densities, kernels, diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Lift a state to its averaged amplitude; report norms and the round trip
    Transform(Opts),
    /// Nonnegative phase-space density of a state, optionally next to Wigner
    Density(Opts),
    /// Observable kernel by direct quadrature or by smoothed symbol moments
    Operator(Opts),
    /// Eigenvalues of an observable kernel
    Spectrum(Opts),
    /// Diffusion of the fiber modes, with optional decay-rate fits
    Diffuse(Opts),
    /// Hydrogen 2S calibration: measured level shift to intensity ratio
    Lamb(Opts),
    /// Run the invariant suite and print a pass/fail table
    Verify(Opts),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Transform(_) => "transform",
            Cmd::Density(_) => "density",
            Cmd::Operator(_) => "operator",
            Cmd::Spectrum(_) => "spectrum",
            Cmd::Diffuse(_) => "diffuse",
            Cmd::Lamb(_) => "lamb",
            Cmd::Verify(_) => "verify",
        }
    }

    fn into_opts(self) -> Opts {
        match self {
            Cmd::Transform(o)
            | Cmd::Density(o)
            | Cmd::Operator(o)
            | Cmd::Spectrum(o)
            | Cmd::Diffuse(o)
            | Cmd::Lamb(o)
            | Cmd::Verify(o) => o,
        }
    }
}

/// Flags shared by every subcommand.  Each set flag overrides the matching
/// config-file entry; unset flags leave the entry alone.
#[derive(Debug, Args)]
pub struct Opts {
    /// JSON run config to start from
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Print the effective config as JSON to stdout and exit without running
    #[arg(long)]
    dump_config: bool,

    /// Action scale h
    #[arg(long)]
    h: Option<f64>,
    /// Position diffusion intensity a
    #[arg(long)]
    a: Option<f64>,
    /// Momentum diffusion intensity b
    #[arg(long)]
    b: Option<f64>,
    /// Grid half width: positions cover [-W, W)
    #[arg(long, value_name = "W")]
    half_width: Option<f64>,
    /// Grid point count (even); momentum resolution follows conjugately
    #[arg(long, value_name = "N")]
    points: Option<usize>,

    /// State: gaussian | hermite-N | coherent:Q,P | random | file:PATH
    #[arg(long)]
    state: Option<String>,
    /// Seed for the random state
    #[arg(long)]
    seed: Option<u64>,

    /// Observable: q | p | q^2 | p^2 | q^2+p^2 | harmonic:M,W | coulomb:E2 |
    /// poly:C,I,J[;C,I,J...]
    #[arg(long)]
    symbol: Option<String>,
    /// Operator route: quadrature | symbol-exact | symbol-zero.
    /// Spectrum route: dense | tagged | oscillator
    #[arg(long)]
    route: Option<String>,
    /// Operator artifact: kernel (CSV) | tag (closed differential form, JSON)
    #[arg(long)]
    emit: Option<String>,
    /// Number of eigenvalues to report
    #[arg(long)]
    count: Option<usize>,
    /// Report the oscillator spectrum with its recorded constant shift removed
    #[arg(long, action = ArgAction::SetTrue)]
    remove_shift: Option<bool>,

    /// Initial data for diffuse: kK-ground | kK-mM | any state spec (lifted)
    #[arg(long)]
    mode: Option<String>,
    /// Integrator: spectral | finite-difference
    #[arg(long)]
    integrator: Option<String>,
    /// Time step for the finite-difference integrator
    #[arg(long)]
    delta_tau: Option<f64>,
    /// Diffusion horizon
    #[arg(long)]
    tau_end: Option<f64>,
    /// Number of equally spaced sample times up to the horizon
    #[arg(long)]
    samples: Option<usize>,
    /// Hermite levels kept per mode by the spectral integrator (0 = default)
    #[arg(long)]
    hermite_count: Option<usize>,
    /// Fit per-mode exponential decay rates from the sampled norms
    #[arg(long, action = ArgAction::SetTrue)]
    fit_rate: Option<bool>,

    /// Measured 2S level shift in MHz
    #[arg(long = "dE2-mhz", value_name = "MHZ")]
    de2_mhz: Option<f64>,
    /// Principal quantum number of the calibrated s state
    #[arg(long)]
    level: Option<u32>,

    /// Fail unless the density integrates to the state norm within 1e-6
    #[arg(long, action = ArgAction::SetTrue)]
    check_normalization: Option<bool>,
    /// Also emit the Wigner transform for comparison
    #[arg(long, action = ArgAction::SetTrue)]
    wigner: Option<bool>,

    /// CSV artifact path (stdout when absent)
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// JSON artifact path (stdout when absent)
    #[arg(long, value_name = "PATH")]
    json_out: Option<String>,
    /// Wigner CSV path (stdout when absent; used with --wigner)
    #[arg(long, value_name = "PATH")]
    wigner_out: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    let name = cli.command.name();
    let opts = cli.command.into_opts();
    let dump = opts.dump_config;
    let cfg = config::effective(name, opts)?;
    if dump {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        println!("{text}");
        return Ok(());
    }
    let echo = serde_json::to_string(&cfg).expect("config serializes");
    eprintln!("config: {echo}");
    match name {
        "transform" => run::transform(&cfg),
        "density" => run::density(&cfg),
        "operator" => run::operator(&cfg),
        "spectrum" => run::spectrum(&cfg),
        "diffuse" => run::diffuse(&cfg),
        "lamb" => run::lamb(&cfg),
        "verify" => run::verify(&cfg),
        _ => unreachable!("clap only admits the listed subcommands"),
    }
}

/// Honors PHASEOBS_THREADS before any parallel work starts.  Results do
/// not depend on the pool size; this only bounds resource use.
fn init_thread_pool() -> Result<(), CliError> {
    match std::env::var("PHASEOBS_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| {
                CliError::Usage(format!(
                    "PHASEOBS_THREADS must be a positive integer, got {v:?}"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Usage(
                    "PHASEOBS_THREADS must be a positive integer, got 0".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Failed(format!("thread pool setup failed: {e}")))
        }
    }
}
