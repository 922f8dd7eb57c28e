//! `tsgov`: generate traces, run frequency policies, calibrate tables and
//! compare runs.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tsgov", version, about = "Timeslice DVFS policy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic trace from a preset or a phase-spec file.
    Generate(GenerateArgs),
    /// Apply a policy to a trace and write the run report.
    Run(RunArgs),
    /// Compare a policy report against a reference report, or run the
    /// preset suite.
    Compare(CompareArgs),
    /// Derive a MAPI policy table from profiling data.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Processor config (TOML); defaults to the built-in quad-core preset.
    #[arg(long)]
    processor: Option<PathBuf>,
    /// Policy table config (TOML); defaults to the reference four-band table.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct GenerateArgs {
    /// One of cg, ft, mg, sp.
    #[arg(long, group = "source")]
    preset: Option<String>,
    /// Workload phase-spec file (TOML).
    #[arg(long, group = "source")]
    phases: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format; inferred from the --out extension when omitted.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Trace format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// governor | static:<freq> | oracle[:<max_slowdown>]
    #[arg(long, default_value = "governor")]
    policy: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Governor history window (slices averaged by the predictor).
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Governor re-selects the frequency every this many slices.
    #[arg(long, default_value_t = 1)]
    decision_interval: usize,
    /// Amplitude of uniform measurement noise added to observed MAPI.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed for the measurement noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Policy run report (JSON).
    #[arg(required_unless_present = "suite", conflicts_with = "suite")]
    policy_report: Option<PathBuf>,
    /// Reference run report (JSON).
    #[arg(required_unless_present = "suite", conflicts_with = "suite")]
    reference_report: Option<PathBuf>,
    /// Label used for the trace_id column of the CSV row.
    #[arg(long, default_value = "trace")]
    trace_id: String,
    /// Run the governor against static f_max on all four presets.
    #[arg(long)]
    suite: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    /// Worker threads for --suite.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Optional CSV summary path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true))]
struct CalibrateArgs {
    /// Profile CSV (mapi,frequency_hz,slowdown).
    #[arg(long, group = "input")]
    profile: Option<PathBuf>,
    /// Profile the built-in ramp and presets on the model instead.
    #[arg(long, group = "input")]
    simulate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = tsgov::calibration::DEFAULT_MAX_LOSS)]
    max_loss: f64,
    #[arg(long)]
    processor: Option<PathBuf>,
    /// Also write the simulated profile points here.
    #[arg(long, requires = "simulate")]
    profile_out: Option<PathBuf>,
    /// Table path (TOML).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Calibrate(a) => commands::calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
