//! Command-line front end: argument parsing, sweeps and structured output.

pub mod commands;
pub mod output;
pub mod range;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use output::Format;

/// Exit status when arguments are invalid.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when every row of a run failed.
pub const EXIT_ALL_FAILED: i32 = 3;
/// Exit status for I/O and other runtime failures.
pub const EXIT_RUNTIME: i32 = 1;

/// Environment variable giving the default worker count.
pub const THREADS_ENV: &str = "SPIKEGAP_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] spikegap::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Parser)]
#[command(name = "spikegap", version, about = "Spectral gaps of bit-symmetric spike Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output format; defaults to CSV for sweeps and JSON for single results.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = THREADS_ENV, default_value_t = 0, global = true)]
    pub threads: usize,
    /// Starting precision in bits for exact gaps.
    #[arg(long, default_value_t = spikegap::NATIVE_BITS, global = true)]
    pub precision_bits: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SpikeArgs {
    /// System sizes (multiples of 4).
    #[arg(long)]
    pub n: String,
    /// Spike height exponents.
    #[arg(long)]
    pub alpha: String,
    /// Spike width exponents; the width-one spike is used when absent.
    #[arg(long, conflicts_with = "width_one")]
    pub beta: Option<String>,
    /// Width-one spike at n/4.
    #[arg(long)]
    pub width_one: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact gap along a grid of s values.
    GapCurve {
        #[command(flatten)]
        spike: SpikeArgs,
        /// Adiabatic parameter values.
        #[arg(long)]
        s: String,
        /// Spacing E_level - E_(level-1) to report.
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Minimum exact gap over s.
    MinGap {
        #[command(flatten)]
        spike: SpikeArgs,
        /// Coarse search grid in s.
        #[arg(long, default_value = "0.30:0.45:0.0025")]
        s: String,
        /// Width of the refined bracket.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Slope of log gap against log n at the critical point, per height exponent.
    SlopeVsAlpha {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value = "500:860:4")]
        n: String,
        #[command(flatten)]
        common: Common,
    },
    /// Variational lower and stoquastic upper bounds at the critical point.
    Bounds {
        #[arg(long)]
        n: String,
        #[arg(long)]
        alpha: String,
        /// Also report the exact gap.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Instanton action at the degenerate double well.
    Instanton {
        #[arg(long)]
        n: String,
        #[arg(long, required_unless_present = "cubic")]
        alpha: Option<String>,
        #[arg(long, required_unless_present = "cubic")]
        beta: Option<String>,
        /// Use the cubic cost with this shape parameter instead of a spike.
        #[arg(long, conflicts_with_all = ["alpha", "beta"])]
        cubic: Option<f64>,
        /// Starting point for the degeneracy search.
        #[arg(long)]
        s_hint: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Discrete WKB estimate.
    Wkb {
        #[arg(long)]
        n: String,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        #[command(flatten)]
        common: Common,
    },
    /// Node-crossing predictions for the width-one spike.
    Crossings {
        #[arg(long)]
        n: String,
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Highest level considered.
        #[arg(long, default_value_t = 5)]
        t_max: usize,
        /// Predict every node, not only the first.
        #[arg(long)]
        all_nodes: bool,
        /// Locate the actual dips with the exact solver.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Classify the decay of the minimum gap with n.
    Classify {
        #[command(flatten)]
        spike: SpikeArgs,
        /// Curvature threshold of the classifier.
        #[arg(long, default_value_t = spikegap::scaling::DEFAULT_CONCAVITY_THRESHOLD)]
        threshold: f64,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GapCurve { .. } => "gap-curve",
            Command::MinGap { .. } => "min-gap",
            Command::SlopeVsAlpha { .. } => "slope-vs-alpha",
            Command::Bounds { .. } => "bounds",
            Command::Instanton { .. } => "instanton",
            Command::Wkb { .. } => "wkb",
            Command::Crossings { .. } => "crossings",
            Command::Classify { .. } => "classify",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::GapCurve { common, .. }
            | Command::MinGap { common, .. }
            | Command::SlopeVsAlpha { common, .. }
            | Command::Bounds { common, .. }
            | Command::Instanton { common, .. }
            | Command::Wkb { common, .. }
            | Command::Crossings { common, .. }
            | Command::Classify { common, .. } => common,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Bounds { .. } | Command::Classify { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(status) => status,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Runs one command, writing its output; returns the exit status.
pub fn run(command: &Command) -> Result<i32, CliError> {
    let common = command.common();
    spikegap::check_precision(common.precision_bits)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build()?;
    let report = pool.install(|| commands::execute(command))?;
    let format = common.format.unwrap_or_else(|| command.default_format());
    let mut sink: Box<dyn Write> = match &common.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    output::write(&mut *sink, format, command.name(), &report.rows, report.summary.as_ref())?;
    sink.flush()?;
    let failed = report.rows.iter().filter(|r| r.is_failure()).count();
    for row in report.rows.iter().filter(|r| r.is_failure()) {
        eprintln!("warning: {} failed: {}", row.describe(), row.error.as_deref().unwrap_or(""));
    }
    Ok(if !report.rows.is_empty() && failed == report.rows.len() { EXIT_ALL_FAILED } else { 0 })
}
