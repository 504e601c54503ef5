//! `ladderkit` command-line tool.
//!
//! Errors are reported as a single line on stderr, prefixed `error[input]:`
//! (exit 2) or `error[no-result]:` (exit 3).

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unusable input: bad flags, configuration or files.
    Input(String),
    /// Valid input that yields nothing to report (no passband, no resonance).
    NoResult(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NoResult(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, msg) = match self {
            CliError::Input(m) => ("input", m),
            CliError::NoResult(m) => ("no-result", m),
        };
        // Keep the message on one line for callers that parse it.
        write!(f, "error[{tag}]: {}", msg.replace(['\n', '\r'], " "))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ladderkit", version, about = "Acoustic-resonator ladder filter synthesis and characterization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a ladder (optimizing C0 when ranges are given), write its
    /// S-parameters and metrics.
    Synth(DesignArgs),
    /// Sweep a ladder with fixed C0 values and write its S-parameters.
    Simulate(DesignArgs),
    /// Fit an MBVD model to a one-port measurement.
    Fit(FitArgs),
    /// Compute filter metrics of a two-port file.
    Metrics(MetricsArgs),
    /// Convert a two-port file to CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// JSON design configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path stem; extensions are appended.
    #[arg(long)]
    output: PathBuf,
    /// Reference impedance in ohms, overriding the configuration.
    #[arg(long)]
    z0: Option<f64>,
    /// Number of sweep points, overriding the configuration.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightingArg {
    Uniform,
    MagnitudeNormalized,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// One-port Touchstone file (.s1p).
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also fit the series routing resistance and inductance.
    #[arg(long)]
    fit_parasitics: bool,
    #[arg(long, default_value_t = 40)]
    max_iterations: usize,
    /// Relative objective decrease below which the fit stops.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, value_enum, default_value_t = WeightingArg::MagnitudeNormalized)]
    weighting: WeightingArg,
    /// Restrict the fit to `F_MIN,F_MAX` in Hz.
    #[arg(long, value_delimiter = ',', value_name = "F_MIN,F_MAX")]
    window_hz: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Two-port Touchstone file (.s2p).
    #[arg(long)]
    input: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Rejection is measured at fc·(1 ± offset).
    #[arg(long, default_value_t = 0.5)]
    rejection_offset: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Two-port Touchstone file (.s2p).
    #[arg(long)]
    input: PathBuf,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
    format: ExportFormat,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(&a.config, &a.output, a.z0, a.grid_points),
        Command::Simulate(a) => commands::simulate(&a.config, &a.output, a.z0, a.grid_points),
        Command::Fit(a) => {
            let window = match a.window_hz.as_deref() {
                None => None,
                Some(&[lo, hi]) => Some((lo, hi)),
                Some(_) => return Err(CliError::Input("--window-hz takes F_MIN,F_MAX".into())),
            };
            let opts = ladderkit::fitting::FitOptions {
                max_iterations: a.max_iterations,
                tolerance: a.tolerance,
                weighting: match a.weighting {
                    WeightingArg::Uniform => ladderkit::fitting::Weighting::Uniform,
                    WeightingArg::MagnitudeNormalized => ladderkit::fitting::Weighting::MagnitudeNormalized,
                },
                fit_parasitics: a.fit_parasitics,
                window,
            };
            commands::fit(&a.input, a.output.as_deref(), &opts)
        }
        Command::Metrics(a) => commands::metrics(&a.input, a.output.as_deref(), a.rejection_offset),
        Command::Export(a) => match a.format {
            ExportFormat::Csv => commands::export_csv(&a.input, a.output.as_deref()),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::Input(msg.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
