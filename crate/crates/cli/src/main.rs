//! Command-line front end: design filters, run denoising experiments and
//! fault campaigns, emit resource comparisons and netlist exports.
//!
//! Every command is deterministic given its flags; all randomness flows
//! from `--seed`. A `--config-file` holds `key = value` lines mirroring
//! the long flags, with explicit flags taking precedence.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "redfir",
    version,
    about = "Fault-tolerant FIR filter simulator: five 5MR voter configurations, \
             gate-level fault campaigns, and ECG denoising experiments",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Design lowpass coefficients and write a coefficient file.
    Design(DesignArgs),
    /// Run the ECG denoising experiment for one or all configurations.
    Denoise(DenoiseArgs),
    /// Run a fault-injection campaign against a replicated FIR system.
    Inject(InjectArgs),
    /// Emit the structural resource comparison table.
    Resources(ResourcesArgs),
    /// Export a built netlist as structured data or a render graph.
    Export(ExportArgs),
}

impl Command {
    fn config_file(&self) -> Option<&PathBuf> {
        match self {
            Command::Design(a) => a.config_file.as_ref(),
            Command::Denoise(a) => a.config_file.as_ref(),
            Command::Inject(a) => a.config_file.as_ref(),
            Command::Resources(a) => a.config_file.as_ref(),
            Command::Export(a) => a.config_file.as_ref(),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowArg {
    Hamming,
    Kaiser,
    Rectangular,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigArg {
    Majority5,
    Xor5,
    Xnor5,
    Cascaded,
    Mux41,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseArg {
    White,
    Powerline,
    Baseline,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionArg {
    Bitwise,
    Median5,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CampaignModeArg {
    ExhaustiveSingle,
    ExhaustiveDouble,
    MonteCarlo,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureArg {
    ForcedWrong,
    NetFlip,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Json,
    Dot,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportConfigArg {
    Fir,
    Majority5,
    Xor5,
    Xnor5,
    Cascaded,
    Mux41,
}

/// Filter design flags shared by every command that builds a datapath.
/// `--taps` defaults per command (51 for design/denoise, 7 for the
/// structural commands).
#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Tap count (odd).
    #[arg(long)]
    pub taps: Option<usize>,
    #[arg(long, default_value_t = 45.0)]
    pub cutoff_hz: f64,
    #[arg(long = "fs-hz", default_value_t = 360.0)]
    pub fs_hz: f64,
    #[arg(long, value_enum, default_value_t = WindowArg::Hamming)]
    pub window: WindowArg,
    /// Kaiser window shape parameter (used with --window kaiser).
    #[arg(long, default_value_t = 8.6)]
    pub kaiser_beta: f64,
    /// Fractional bits of the 16-bit coefficient format.
    #[arg(long = "fixed-frac", default_value_t = 15)]
    pub fixed_frac: u8,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Coefficient file to write (sidecar `<out>.meta` and structured
    /// `<out>.json` ride along).
    #[arg(long, default_value = "coeffs.txt")]
    pub out: PathBuf,
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Voter configuration, or `all` for the full experiment matrix.
    #[arg(long, value_enum, default_value_t = ConfigArg::All)]
    pub config: ConfigArg,
    #[arg(long, value_enum, default_value_t = NoiseArg::White)]
    pub noise: NoiseArg,
    /// Frequency of powerline/baseline noise (defaults: 50 Hz / 0.3 Hz).
    #[arg(long)]
    pub noise_freq_hz: Option<f64>,
    #[arg(long = "snr-db", default_value_t = 10.0)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Input trace CSV; omit to use the synthetic generator.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Allow the synthetic generator when no --in is given.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_parser = clap::value_parser!(bool))]
    pub synthetic: bool,
    #[arg(long, value_enum, default_value_t = FusionArg::Bitwise)]
    pub fusion: FusionArg,
    /// Synthetic trace length in seconds.
    #[arg(long = "duration-s", default_value_t = 10.0)]
    pub duration_s: f64,
    #[arg(long = "heart-rate-bpm", default_value_t = 60.0)]
    pub heart_rate_bpm: f64,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InjectArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long, value_enum, default_value_t = ConfigArg::All)]
    pub config: ConfigArg,
    #[arg(long, value_enum, default_value_t = CampaignModeArg::ExhaustiveSingle)]
    pub mode: CampaignModeArg,
    /// Injection cycle for the exhaustive modes.
    #[arg(long, default_value_t = 8)]
    pub cycle: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Per-replica failure probability for monte-carlo mode.
    #[arg(long, default_value_t = 0.1)]
    pub prob: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Adversarial output patterns for exhaustive-double mode.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_parser = clap::value_parser!(bool))]
    pub adversarial: bool,
    /// Replica failure model for monte-carlo mode.
    #[arg(long, value_enum, default_value_t = FailureArg::ForcedWrong)]
    pub failure: FailureArg,
    /// Stimulus length in cycles (seeded random 16-bit samples).
    #[arg(long = "stimulus-len", default_value_t = 64)]
    pub stimulus_len: usize,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ResourcesArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Census every configuration (the comparison table needs all five).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_parser = clap::value_parser!(bool))]
    pub all_configs: bool,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub filter: FilterArgs,
    /// What to export: the base datapath or a full 5MR system.
    #[arg(long, value_enum, default_value_t = ExportConfigArg::Fir)]
    pub config: ExportConfigArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[arg(long, default_value = "netlist.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&raw);
    let cli = match cli.command.config_file() {
        Some(path) => {
            let file_args = match commands::config_file_args(path) {
                Ok(args) => args,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            // prog + subcommand, then file values, then the explicit flags
            // (which win because args_override_self is set).
            let mut argv = vec![raw[0].clone(), raw[1].clone()];
            argv.extend(file_args);
            argv.extend(raw[2..].iter().cloned());
            Cli::parse_from(argv)
        }
        None => cli,
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
