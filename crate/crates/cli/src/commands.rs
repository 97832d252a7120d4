//! Command bodies and the output-file plumbing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use redfir::circuit::{export_netlist, ExportFormat};
use redfir::ecg::{
    denoise_with_system, gen_ecg, load_trace, save_trace, Fusion, NoiseKind, NoiseSpec,
    SignalTrace,
};
use redfir::fir::{
    build_fir, design_lowpass, magnitude_response, save_coefficients, FilterSpec, Window,
};
use redfir::redundancy::{
    enumerate_double_faults, enumerate_single_faults, monte_carlo_campaign, replicate,
    FailureMode, MaskingReport,
};
use redfir::resources::{census, compare_with_reference};
use redfir::rng::SplitMix64;
use redfir::voters::VoterKind;

use crate::{
    CampaignModeArg, Command, ConfigArg, DenoiseArgs, DesignArgs, ExportArgs, ExportConfigArg,
    FailureArg, FilterArgs, FormatArg, FusionArg, InjectArgs, NoiseArg, ResourcesArgs, WindowArg,
};

pub type CliError = Box<dyn std::error::Error>;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Design(args) => design(args),
        Command::Denoise(args) => denoise(args),
        Command::Inject(args) => inject(args),
        Command::Resources(args) => resources(args),
        Command::Export(args) => export(args),
    }
}

/// Reads a `key = value` config file into `--key value` tokens. Unknown
/// keys are rejected later by the regular flag parser.
pub fn config_file_args(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("config file {}: {e}", path.display()))?;
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config file line {}: expected key = value", i + 1))?;
        args.push(format!("--{}", key.trim()));
        args.push(value.trim().to_string());
    }
    Ok(args)
}

impl FilterArgs {
    fn to_spec(&self, default_taps: usize) -> FilterSpec {
        FilterSpec {
            num_taps: self.taps.unwrap_or(default_taps),
            cutoff_hz: self.cutoff_hz,
            sample_rate_hz: self.fs_hz,
            window: match self.window {
                WindowArg::Hamming => Window::Hamming,
                WindowArg::Kaiser => Window::Kaiser {
                    beta: self.kaiser_beta,
                },
                WindowArg::Rectangular => Window::Rectangular,
            },
            frac_bits: self.fixed_frac,
        }
    }

    fn manifest(&self, spec: &FilterSpec, out: &mut Vec<(String, String)>) {
        out.push(("taps".into(), spec.num_taps.to_string()));
        out.push(("cutoff_hz".into(), spec.cutoff_hz.to_string()));
        out.push(("fs_hz".into(), spec.sample_rate_hz.to_string()));
        out.push(("window".into(), spec.window.id()));
        out.push(("fixed_frac".into(), spec.frac_bits.to_string()));
    }
}

impl ConfigArg {
    fn voters(self) -> Vec<VoterKind> {
        match self {
            ConfigArg::Majority5 => vec![VoterKind::Majority5],
            ConfigArg::Xor5 => vec![VoterKind::Xor5],
            ConfigArg::Xnor5 => vec![VoterKind::Xnor5],
            ConfigArg::Cascaded => vec![VoterKind::CascadedTmr5],
            ConfigArg::Mux41 => vec![VoterKind::Mux41_5],
            ConfigArg::All => VoterKind::ALL.to_vec(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            ConfigArg::Majority5 => "majority5",
            ConfigArg::Xor5 => "xor5",
            ConfigArg::Xnor5 => "xnor5",
            ConfigArg::Cascaded => "cascaded",
            ConfigArg::Mux41 => "mux41",
            ConfigArg::All => "all",
        }
    }
}

fn write_manifest(dir: &Path, command: &str, entries: &[(String, String)]) -> Result<(), CliError> {
    let mut sorted: Vec<&(String, String)> = entries.iter().collect();
    sorted.sort();
    let mut s = format!("command={command}\n");
    for (k, v) in sorted {
        let _ = writeln!(s, "{k}={v}");
    }
    fs::write(dir.join("run_manifest.txt"), s)?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| format!("output dir {}: {e}", dir.display()))?;
    Ok(())
}

// ---- design ---------------------------------------------------------------

fn design(args: DesignArgs) -> Result<(), CliError> {
    let spec = args.filter.to_spec(51);
    let coeffs = design_lowpass(&spec)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    save_coefficients(&coeffs, &args.out)?;
    let mut json_path = args.out.as_os_str().to_owned();
    json_path.push(".json");
    fs::write(PathBuf::from(json_path), coeffs.to_json())?;
    let dc = magnitude_response(&coeffs.real, 0.0, spec.sample_rate_hz);
    println!(
        "wrote {} coefficients to {} (dc gain {:.6}, sum of fixed taps {})",
        coeffs.num_taps(),
        args.out.display(),
        dc,
        coeffs.dc_gain_fixed()
    );
    Ok(())
}

// ---- denoise --------------------------------------------------------------

fn denoise(args: DenoiseArgs) -> Result<(), CliError> {
    let spec = args.filter.to_spec(51);
    let noise_kind = match args.noise {
        NoiseArg::White => NoiseKind::WhiteGaussian,
        NoiseArg::Powerline => NoiseKind::Powerline {
            freq_hz: args.noise_freq_hz.unwrap_or(50.0),
        },
        NoiseArg::Baseline => NoiseKind::BaselineWander {
            freq_hz: args.noise_freq_hz.unwrap_or(0.3),
        },
    };
    let clean: SignalTrace = match &args.input {
        Some(path) => load_trace(path)?,
        None if args.synthetic => gen_ecg(
            spec.sample_rate_hz,
            args.duration_s,
            args.heart_rate_bpm,
            args.seed,
        )?,
        None => return Err("no input: pass --in <trace.csv> or --synthetic true".into()),
    };
    let noise = NoiseSpec {
        kind: noise_kind,
        target_snr_db: args.snr_db,
        seed: args.seed,
    };
    let fusion = match args.fusion {
        FusionArg::Bitwise => Fusion::BitwiseVote,
        FusionArg::Median5 => Fusion::Median5,
    };

    ensure_dir(&args.out_dir)?;
    let coeffs = design_lowpass(&spec)?;
    let datapath = build_fir(&coeffs)?;
    let mut metrics_csv = String::from(redfir::ecg::DenoiseMetrics::csv_header());
    metrics_csv.push('\n');
    let mut first = true;
    for voter in args.config.voters() {
        let system = replicate(&datapath.netlist, voter)?;
        let result = denoise_with_system(&clean, &noise, &datapath, &system, fusion, &[])?;
        if first {
            save_trace(&result.clean, &args.out_dir.join("clean.csv"))?;
            save_trace(&result.noisy, &args.out_dir.join("noisy.csv"))?;
            first = false;
        }
        save_trace(
            &result.denoised,
            &args.out_dir.join(format!("denoised_{}.csv", voter.id())),
        )?;
        metrics_csv.push_str(&result.metrics.csv_row());
        metrics_csv.push('\n');
        println!(
            "{}: snr_in {:.2} dB -> snr_out {:.2} dB (improvement {:.2} dB)",
            voter.id(),
            result.metrics.snr_in_db,
            result.metrics.snr_out_db,
            result.metrics.improvement_db
        );
    }
    fs::write(args.out_dir.join("metrics.csv"), metrics_csv)?;

    let mut manifest = Vec::new();
    args.filter.manifest(&spec, &mut manifest);
    manifest.push(("config".into(), args.config.label().into()));
    manifest.push(("noise".into(), noise_kind.label()));
    manifest.push(("snr_db".into(), args.snr_db.to_string()));
    manifest.push(("seed".into(), args.seed.to_string()));
    manifest.push(("fusion".into(), fusion.label().into()));
    manifest.push((
        "input".into(),
        args.input
            .as_ref()
            .map_or("synthetic".into(), |p| p.display().to_string()),
    ));
    manifest.push(("duration_s".into(), args.duration_s.to_string()));
    manifest.push(("heart_rate_bpm".into(), args.heart_rate_bpm.to_string()));
    write_manifest(&args.out_dir, "denoise", &manifest)?;
    Ok(())
}

// ---- inject --------------------------------------------------------------

fn inject(args: InjectArgs) -> Result<(), CliError> {
    let spec = args.filter.to_spec(7);
    let coeffs = design_lowpass(&spec)?;
    let datapath = build_fir(&coeffs)?;
    // Seeded random 16-bit stimulus; substream 0 is reserved for it.
    let mut rng = SplitMix64::substream(args.seed, 0);
    let stimulus: Vec<u64> = (0..args.stimulus_len)
        .map(|_| rng.next_below(1 << 16))
        .collect();

    ensure_dir(&args.out_dir)?;
    for voter in args.config.voters() {
        let system = replicate(&datapath.netlist, voter)?;
        let report: MaskingReport = match args.mode {
            CampaignModeArg::ExhaustiveSingle => {
                enumerate_single_faults(&system, &stimulus, args.cycle)?
            }
            CampaignModeArg::ExhaustiveDouble => {
                enumerate_double_faults(&system, &stimulus, args.cycle, args.adversarial)?
            }
            CampaignModeArg::MonteCarlo => {
                let mode = match args.failure {
                    FailureArg::ForcedWrong => FailureMode::ForcedWrong,
                    FailureArg::NetFlip => FailureMode::NetFlip,
                };
                monte_carlo_campaign(&system, &stimulus, args.prob, args.trials, args.seed, mode)?
            }
        };
        let base = args.out_dir.join(format!("masking_{}", voter.id()));
        fs::write(base.with_extension("csv"), report.to_csv())?;
        fs::write(base.with_extension("json"), report.to_json())?;
        if let Some(pairs) = report.pairs_csv() {
            fs::write(
                args.out_dir.join(format!("masking_{}_pairs.csv", voter.id())),
                pairs,
            )?;
        }
        println!(
            "{}: {}/{} masked (rate {:.6})",
            voter.id(),
            report.masked,
            report.total,
            report.masking_rate()
        );
    }

    let mut manifest = Vec::new();
    args.filter.manifest(&spec, &mut manifest);
    manifest.push(("config".into(), args.config.label().into()));
    manifest.push((
        "mode".into(),
        match args.mode {
            CampaignModeArg::ExhaustiveSingle => "exhaustive-single".into(),
            CampaignModeArg::ExhaustiveDouble => {
                format!("exhaustive-double(adversarial={})", args.adversarial)
            }
            CampaignModeArg::MonteCarlo => format!(
                "monte-carlo(trials={},prob={},failure={})",
                args.trials,
                args.prob,
                match args.failure {
                    FailureArg::ForcedWrong => "forced-wrong",
                    FailureArg::NetFlip => "net-flip",
                }
            ),
        },
    ));
    manifest.push(("cycle".into(), args.cycle.to_string()));
    manifest.push(("seed".into(), args.seed.to_string()));
    manifest.push(("stimulus_len".into(), args.stimulus_len.to_string()));
    write_manifest(&args.out_dir, "inject", &manifest)?;
    Ok(())
}

// ---- resources -------------------------------------------------------------

fn resources(args: ResourcesArgs) -> Result<(), CliError> {
    if !args.all_configs {
        return Err("the comparison table needs --all-configs true".into());
    }
    let spec = args.filter.to_spec(7);
    let coeffs = design_lowpass(&spec)?;
    let datapath = build_fir(&coeffs)?;
    let base = census(&datapath.netlist);
    let systems = VoterKind::ALL
        .iter()
        .map(|&voter| {
            let sys = replicate(&datapath.netlist, voter)?;
            Ok((voter, census(&sys.netlist)))
        })
        .collect::<Result<_, CliError>>()?;
    let table = compare_with_reference(&base, &systems)?;
    ensure_dir(&args.out_dir)?;
    fs::write(args.out_dir.join("resources.csv"), table.to_csv())?;
    println!(
        "wrote resource comparison for 5 configurations (relations hold: {})",
        table.relations_hold()
    );

    let mut manifest = Vec::new();
    args.filter.manifest(&spec, &mut manifest);
    manifest.push(("all_configs".into(), "true".into()));
    write_manifest(&args.out_dir, "resources", &manifest)?;
    Ok(())
}

// ---- export ---------------------------------------------------------------

fn export(args: ExportArgs) -> Result<(), CliError> {
    let spec = args.filter.to_spec(7);
    let coeffs = design_lowpass(&spec)?;
    let datapath = build_fir(&coeffs)?;
    let format = match args.format {
        FormatArg::Json => ExportFormat::StructuredData,
        FormatArg::Dot => ExportFormat::GraphDescription,
    };
    let text = match args.config {
        ExportConfigArg::Fir => export_netlist(&datapath.netlist, format),
        other => {
            let voter = match other {
                ExportConfigArg::Majority5 => VoterKind::Majority5,
                ExportConfigArg::Xor5 => VoterKind::Xor5,
                ExportConfigArg::Xnor5 => VoterKind::Xnor5,
                ExportConfigArg::Cascaded => VoterKind::CascadedTmr5,
                ExportConfigArg::Mux41 => VoterKind::Mux41_5,
                ExportConfigArg::Fir => unreachable!(),
            };
            let system = replicate(&datapath.netlist, voter)?;
            export_netlist(&system.netlist, format)
        }
    };
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    fs::write(&args.out, text)?;
    println!("wrote netlist export to {}", args.out.display());
    Ok(())
}
