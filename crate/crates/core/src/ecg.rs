//! Synthetic ECG traces, noise injection, denoising metrics, and the
//! end-to-end denoising pipeline over a replicated FIR system.
//!
//! The generator is a seeded sum of five Gaussian bumps per beat, so every
//! experiment is hermetic; recorded data comes in through the trace CSV
//! format instead.

use std::path::Path;

use thiserror::Error;

use crate::fir::{build_fir, design_lowpass, FilterSpec, FirDatapath, FirError};
use crate::redundancy::{replicate, FaultSpec, RedundancyError, ReplicaSystem};
use crate::rng::SplitMix64;
use crate::voters::{median5, VoterKind};

/// Fixed-point position used for 16-bit samples: full scale 1.0 = 2^15.
pub const SAMPLE_FRAC_BITS: u8 = 15;

/// Sample storage of a [`SignalTrace`].
#[derive(Debug, Clone, PartialEq)]
pub enum TraceData {
    Real(Vec<f64>),
    Fixed16 { samples: Vec<i16>, frac_bits: u8 },
}

/// A sampled signal with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub data: TraceData,
    pub sample_rate_hz: f64,
}

impl SignalTrace {
    pub fn real(samples: Vec<f64>, sample_rate_hz: f64) -> Self {
        Self {
            data: TraceData::Real(samples),
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            TraceData::Real(v) => v.len(),
            TraceData::Fixed16 { samples, .. } => samples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples as reals (fixed-point traces are dequantized).
    pub fn as_real(&self) -> Vec<f64> {
        match &self.data {
            TraceData::Real(v) => v.clone(),
            TraceData::Fixed16 { samples, frac_bits } => {
                let scale = (1i64 << frac_bits) as f64;
                samples.iter().map(|&s| s as f64 / scale).collect()
            }
        }
    }
}

/// Additive noise description; `target_snr_db` of `f64::INFINITY` means
/// no noise at all.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub target_snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    WhiteGaussian,
    Powerline { freq_hz: f64 },
    BaselineWander { freq_hz: f64 },
}

impl NoiseKind {
    pub fn label(&self) -> String {
        match self {
            NoiseKind::WhiteGaussian => "white".into(),
            NoiseKind::Powerline { freq_hz } => format!("powerline({freq_hz})"),
            NoiseKind::BaselineWander { freq_hz } => format!("baseline({freq_hz})"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EcgError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace too short: {len} samples, need more than {need}")]
    TraceTooShort { len: usize, need: usize },
    #[error("trace lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference trace is all zeros; SNR undefined")]
    ZeroReference,
    #[error("noise frequency {freq_hz} Hz must be below half the sample rate {sample_rate_hz} Hz")]
    BadNoiseFrequency { freq_hz: f64, sample_rate_hz: f64 },
    #[error("sample {value} at index {index} overflows fixed16({frac_bits})")]
    SampleOverflow {
        value: f64,
        index: usize,
        frac_bits: u8,
    },
    #[error("degenerate generator parameters: {0}")]
    DegenerateParams(String),
    #[error("trace file line {line}: {message}")]
    TraceParse { line: usize, message: String },
    #[error(transparent)]
    Fir(#[from] FirError),
    #[error(transparent)]
    Redundancy(#[from] RedundancyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---- synthetic ECG -----------------------------------------------------------

/// (amplitude, offset from the R peak in seconds, Gaussian sigma in
/// seconds) for the P, Q, R, S, T waves of one beat.
const BEAT_BUMPS: [(f64, f64, f64); 5] = [
    (0.12, -0.20, 0.025),
    (-0.15, -0.032, 0.010),
    (1.00, 0.0, 0.012),
    (-0.25, 0.032, 0.010),
    (0.30, 0.28, 0.045),
];

/// Fraction of fixed-point full scale the peak amplitude is normalized to.
const PEAK_FRACTION: f64 = 0.9;

/// Periodic synthetic ECG: five Gaussian bumps per beat with a seeded
/// +/-3% beat-interval jitter, peak normalized to 0.9 of full scale.
pub fn gen_ecg(
    sample_rate_hz: f64,
    duration_s: f64,
    heart_rate_bpm: f64,
    seed: u64,
) -> Result<SignalTrace, EcgError> {
    if sample_rate_hz <= 0.0 || heart_rate_bpm <= 0.0 {
        return Err(EcgError::DegenerateParams(
            "sample rate and heart rate must be positive".into(),
        ));
    }
    let beat_s = 60.0 / heart_rate_bpm;
    if duration_s <= beat_s {
        return Err(EcgError::DegenerateParams(format!(
            "duration {duration_s} s must exceed one beat ({beat_s} s)"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut beats = Vec::new();
    let mut t = 0.4 * beat_s;
    while t < duration_s + beat_s {
        beats.push(t);
        let jitter = 0.03 * (2.0 * rng.next_f64() - 1.0);
        t += beat_s * (1.0 + jitter);
    }
    let n = (duration_s * sample_rate_hz).round() as usize;
    let mut samples = vec![0.0f64; n];
    for (i, s) in samples.iter_mut().enumerate() {
        let ti = i as f64 / sample_rate_hz;
        for &beat in &beats {
            for &(amp, off, sigma) in &BEAT_BUMPS {
                let d = ti - beat - off;
                if d.abs() < 6.0 * sigma {
                    *s += amp * (-d * d / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }
    let peak = samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
    if peak > 0.0 {
        let scale = PEAK_FRACTION / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }
    Ok(SignalTrace::real(samples, sample_rate_hz))
}

// ---- noise -----------------------------------------------------------------

/// Adds noise of the requested kind, rescaled so the realized SNR equals
/// `target_snr_db` exactly (up to float rounding). Deterministic per seed.
pub fn add_noise(trace: &SignalTrace, spec: &NoiseSpec) -> Result<SignalTrace, EcgError> {
    if trace.is_empty() {
        return Err(EcgError::EmptyTrace);
    }
    let signal = trace.as_real();
    if spec.target_snr_db.is_infinite() && spec.target_snr_db > 0.0 {
        return Ok(SignalTrace::real(signal, trace.sample_rate_hz));
    }
    let signal_power: f64 = signal.iter().map(|s| s * s).sum::<f64>() / signal.len() as f64;
    if signal_power == 0.0 {
        return Err(EcgError::ZeroReference);
    }
    if let NoiseKind::Powerline { freq_hz } | NoiseKind::BaselineWander { freq_hz } = spec.kind {
        if freq_hz >= trace.sample_rate_hz / 2.0 || freq_hz <= 0.0 {
            return Err(EcgError::BadNoiseFrequency {
                freq_hz,
                sample_rate_hz: trace.sample_rate_hz,
            });
        }
    }
    let mut rng = SplitMix64::new(spec.seed);
    let n = signal.len();
    let noise: Vec<f64> = match spec.kind {
        NoiseKind::WhiteGaussian => (0..n).map(|_| rng.next_gaussian()).collect(),
        NoiseKind::Powerline { freq_hz } | NoiseKind::BaselineWander { freq_hz } => {
            let phase = rng.next_f64() * 2.0 * std::f64::consts::PI;
            (0..n)
                .map(|i| {
                    let t = i as f64 / trace.sample_rate_hz;
                    (2.0 * std::f64::consts::PI * freq_hz * t + phase).sin()
                })
                .collect()
        }
    };
    let noise_power: f64 = noise.iter().map(|s| s * s).sum::<f64>() / n as f64;
    let gain = (signal_power / (noise_power * 10f64.powf(spec.target_snr_db / 10.0))).sqrt();
    let noisy: Vec<f64> = signal
        .iter()
        .zip(&noise)
        .map(|(&s, &w)| s + gain * w)
        .collect();
    Ok(SignalTrace::real(noisy, trace.sample_rate_hz))
}

// ---- metrics ------------------------------------------------------------------

/// `10 log10(sum ref^2 / sum (ref - test)^2)`; +infinity when identical.
pub fn snr_db(reference: &SignalTrace, test: &SignalTrace) -> Result<f64, EcgError> {
    let r = reference.as_real();
    let t = test.as_real();
    snr_db_slices(&r, &t)
}

fn snr_db_slices(r: &[f64], t: &[f64]) -> Result<f64, EcgError> {
    if r.len() != t.len() {
        return Err(EcgError::LengthMismatch(r.len(), t.len()));
    }
    if r.is_empty() {
        return Err(EcgError::EmptyTrace);
    }
    let ref_power: f64 = r.iter().map(|x| x * x).sum();
    if ref_power == 0.0 {
        return Err(EcgError::ZeroReference);
    }
    let err_power: f64 = r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
    if err_power == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (ref_power / err_power).log10())
}

/// Mean squared error between two traces.
pub fn mse(reference: &SignalTrace, test: &SignalTrace) -> Result<f64, EcgError> {
    let r = reference.as_real();
    let t = test.as_real();
    mse_slices(&r, &t)
}

fn mse_slices(r: &[f64], t: &[f64]) -> Result<f64, EcgError> {
    if r.len() != t.len() {
        return Err(EcgError::LengthMismatch(r.len(), t.len()));
    }
    if r.is_empty() {
        return Err(EcgError::EmptyTrace);
    }
    Ok(r.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / r.len() as f64)
}

// ---- quantization ----------------------------------------------------------

/// Real trace to fixed16; errors if any sample leaves the representable
/// range.
pub fn quantize_trace(trace: &SignalTrace, frac_bits: u8) -> Result<SignalTrace, EcgError> {
    quantize_impl(trace, frac_bits, false)
}

/// Real trace to fixed16, clamping out-of-range samples to the rails.
/// Noisy traces can exceed full scale, so the pipeline uses this form.
pub fn quantize_trace_saturating(trace: &SignalTrace, frac_bits: u8) -> SignalTrace {
    quantize_impl(trace, frac_bits, true).expect("saturating quantization cannot fail")
}

fn quantize_impl(
    trace: &SignalTrace,
    frac_bits: u8,
    saturate: bool,
) -> Result<SignalTrace, EcgError> {
    let scale = (1i64 << frac_bits) as f64;
    let samples = trace
        .as_real()
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            let q = (value * scale).round();
            if q > i16::MAX as f64 || q < i16::MIN as f64 {
                if saturate {
                    Ok(if q > 0.0 { i16::MAX } else { i16::MIN })
                } else {
                    Err(EcgError::SampleOverflow {
                        value,
                        index,
                        frac_bits,
                    })
                }
            } else {
                Ok(q as i16)
            }
        })
        .collect::<Result<Vec<i16>, EcgError>>()?;
    Ok(SignalTrace {
        data: TraceData::Fixed16 {
            samples,
            frac_bits,
        },
        sample_rate_hz: trace.sample_rate_hz,
    })
}

// ---- denoising pipeline ---------------------------------------------------

/// How the five measurement channels are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fusion {
    /// One noisy channel into the replicated system; the word voter does
    /// the masking.
    BitwiseVote,
    /// Five independently noise-perturbed channels, median-fused sample by
    /// sample before filtering.
    Median5,
}

impl Fusion {
    pub fn label(self) -> &'static str {
        match self {
            Fusion::BitwiseVote => "bitwise-vote",
            Fusion::Median5 => "median5",
        }
    }
}

/// Quality numbers of one pipeline run, measured on group-delay-aligned
/// windows against the clean reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseMetrics {
    pub config: String,
    pub fusion: String,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    pub improvement_db: f64,
    pub mse: f64,
}

impl DenoiseMetrics {
    pub fn csv_header() -> &'static str {
        "config,fusion,snr_in_db,snr_out_db,improvement_db,mse"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.config, self.fusion, self.snr_in_db, self.snr_out_db, self.improvement_db, self.mse
        )
    }
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub clean: SignalTrace,
    pub noisy: SignalTrace,
    pub denoised: SignalTrace,
    pub metrics: DenoiseMetrics,
}

/// Full pipeline: perturb, quantize, run through the replicated FIR
/// system under the chosen voter (optionally with injected faults),
/// dequantize, and score against the clean reference.
pub fn denoise_pipeline(
    clean: &SignalTrace,
    noise: &NoiseSpec,
    filter: &FilterSpec,
    voter: VoterKind,
    fusion: Fusion,
    faults: &[FaultSpec],
) -> Result<PipelineResult, EcgError> {
    let coeffs = design_lowpass(filter)?;
    let datapath = build_fir(&coeffs)?;
    let system = replicate(&datapath.netlist, voter)?;
    denoise_with_system(clean, noise, &datapath, &system, fusion, faults)
}

/// Pipeline core over prebuilt datapath and replica system, so callers
/// running many seeds or fault lists build the netlists once.
pub fn denoise_with_system(
    clean: &SignalTrace,
    noise: &NoiseSpec,
    datapath: &FirDatapath,
    system: &ReplicaSystem,
    fusion: Fusion,
    faults: &[FaultSpec],
) -> Result<PipelineResult, EcgError> {
    let len = clean.len();
    let taps = datapath.coeffs.num_taps();
    if len <= 2 * taps {
        return Err(EcgError::TraceTooShort {
            len,
            need: 2 * taps,
        });
    }

    // Noisy measurement channel(s).
    let channels: Vec<SignalTrace> = match fusion {
        Fusion::BitwiseVote => vec![add_noise(clean, noise)?],
        Fusion::Median5 => (0..5)
            .map(|ch| {
                let mut spec = noise.clone();
                spec.seed = SplitMix64::substream(noise.seed, ch).next_u64();
                add_noise(clean, &spec)
            })
            .collect::<Result<_, _>>()?,
    };
    let fixed: Vec<Vec<i16>> = channels
        .iter()
        .map(|c| match quantize_trace_saturating(c, SAMPLE_FRAC_BITS).data {
            TraceData::Fixed16 { samples, .. } => samples,
            TraceData::Real(_) => unreachable!(),
        })
        .collect();
    let fused: Vec<i16> = match fusion {
        Fusion::BitwiseVote => fixed[0].clone(),
        Fusion::Median5 => (0..len)
            .map(|i| median5([0, 1, 2, 3, 4].map(|c| fixed[c][i] as i64)) as i16)
            .collect(),
    };
    let noisy = SignalTrace {
        data: TraceData::Fixed16 {
            samples: fused.clone(),
            frac_bits: SAMPLE_FRAC_BITS,
        },
        sample_rate_hz: clean.sample_rate_hz,
    };

    // Through the replicated gate-level system.
    let mut stimulus: Vec<u64> = fused.iter().map(|&s| s as u16 as u64).collect();
    stimulus.extend(std::iter::repeat(0).take(datapath.latency));
    let words = system.run(&stimulus, faults)?;
    let out_scale = (1i64 << (SAMPLE_FRAC_BITS + datapath.coeffs.frac_bits)) as f64;
    let denoised_real: Vec<f64> = words[datapath.latency..datapath.latency + len]
        .iter()
        .map(|&w| crate::arith::sign_extend_value(w, system.output_width) as f64 / out_scale)
        .collect();

    // Score on the group-delay-aligned overlap.
    let gd = (taps - 1) / 2;
    let clean_real = clean.as_real();
    let noisy_real = noisy.as_real();
    let window = gd..len - gd;
    let clean_win = &clean_real[window.clone()];
    let noisy_win = &noisy_real[window.clone()];
    let denoised_win: Vec<f64> = window.clone().map(|m| denoised_real[m + gd]).collect();
    let snr_in = snr_db_slices(clean_win, noisy_win)?;
    let snr_out = snr_db_slices(clean_win, &denoised_win)?;
    let metrics = DenoiseMetrics {
        config: system.voter.id().into(),
        fusion: fusion.label().into(),
        snr_in_db: snr_in,
        snr_out_db: snr_out,
        improvement_db: snr_out - snr_in,
        mse: mse_slices(clean_win, &denoised_win)?,
    };
    Ok(PipelineResult {
        clean: clean.clone(),
        noisy,
        denoised: SignalTrace::real(denoised_real, clean.sample_rate_hz),
        metrics,
    })
}

// ---- trace files -----------------------------------------------------------

/// Writes a trace CSV: a `sample_rate_hz=<v>[,format=...]` header line,
/// then one sample per line. Fixed16 traces store integers and round-trip
/// losslessly.
pub fn save_trace(trace: &SignalTrace, path: &Path) -> Result<(), EcgError> {
    let mut s = String::new();
    match &trace.data {
        TraceData::Real(samples) => {
            s.push_str(&format!("sample_rate_hz={}\n", trace.sample_rate_hz));
            for v in samples {
                s.push_str(&format!("{v:.17e}\n"));
            }
        }
        TraceData::Fixed16 { samples, frac_bits } => {
            s.push_str(&format!(
                "sample_rate_hz={},format=fixed16({frac_bits})\n",
                trace.sample_rate_hz
            ));
            for v in samples {
                s.push_str(&format!("{v}\n"));
            }
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a trace CSV. The header line is optional: without one the trace
/// is real-valued at 360 Hz. Malformed lines are reported by number.
pub fn load_trace(path: &Path) -> Result<SignalTrace, EcgError> {
    let text = std::fs::read_to_string(path)?;
    parse_trace(&text)
}

fn parse_trace(text: &str) -> Result<SignalTrace, EcgError> {
    let mut sample_rate_hz = 360.0;
    let mut frac_bits: Option<u8> = None;
    let mut reals = Vec::new();
    let mut fixed = Vec::new();
    let mut saw_header = false;

    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 && line.contains('=') {
            for field in line.split(',') {
                let (key, value) = field.split_once('=').ok_or(EcgError::TraceParse {
                    line: 1,
                    message: format!("malformed header field '{field}'"),
                })?;
                match key.trim() {
                    "sample_rate_hz" => {
                        sample_rate_hz = value.trim().parse().map_err(|e| EcgError::TraceParse {
                            line: 1,
                            message: format!("bad sample rate: {e}"),
                        })?;
                    }
                    "format" => {
                        let v = value.trim();
                        if v == "real" {
                            frac_bits = None;
                        } else if let Some(rest) = v.strip_prefix("fixed16(") {
                            let bits = rest.strip_suffix(')').ok_or(EcgError::TraceParse {
                                line: 1,
                                message: format!("bad format '{v}'"),
                            })?;
                            frac_bits =
                                Some(bits.parse().map_err(|e| EcgError::TraceParse {
                                    line: 1,
                                    message: format!("bad format '{v}': {e}"),
                                })?);
                        } else {
                            return Err(EcgError::TraceParse {
                                line: 1,
                                message: format!("unknown format '{v}'"),
                            });
                        }
                    }
                    other => {
                        return Err(EcgError::TraceParse {
                            line: 1,
                            message: format!("unknown header key '{other}'"),
                        })
                    }
                }
            }
            saw_header = true;
            continue;
        }
        let lineno = i + 1;
        if frac_bits.is_some() {
            fixed.push(line.parse::<i16>().map_err(|e| EcgError::TraceParse {
                line: lineno,
                message: format!("bad fixed16 sample '{line}': {e}"),
            })?);
        } else {
            reals.push(line.parse::<f64>().map_err(|e| EcgError::TraceParse {
                line: lineno,
                message: format!("bad sample '{line}': {e}"),
            })?);
        }
    }
    let _ = saw_header;
    match frac_bits {
        Some(bits) => {
            if fixed.is_empty() {
                return Err(EcgError::EmptyTrace);
            }
            Ok(SignalTrace {
                data: TraceData::Fixed16 {
                    samples: fixed,
                    frac_bits: bits,
                },
                sample_rate_hz,
            })
        }
        None => {
            if reals.is_empty() {
                return Err(EcgError::EmptyTrace);
            }
            Ok(SignalTrace::real(reals, sample_rate_hz))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_ecg() -> SignalTrace {
        gen_ecg(360.0, 10.0, 60.0, 1).unwrap()
    }

    /// Threshold-based R-peak counter used as the generator oracle.
    fn count_r_peaks(trace: &SignalTrace) -> usize {
        let x = trace.as_real();
        let max = x.iter().cloned().fold(0.0f64, f64::max);
        let threshold = 0.5 * max;
        let refractory = (0.4 * trace.sample_rate_hz) as usize;
        let mut peaks = 0;
        let mut last: Option<usize> = None;
        for i in 1..x.len() {
            let rising = x[i - 1] < threshold && x[i] >= threshold;
            if rising && last.is_none_or(|l| i - l > refractory) {
                peaks += 1;
                last = Some(i);
            }
        }
        peaks
    }

    #[test]
    fn generator_produces_expected_beat_count() {
        let trace = default_ecg();
        let peaks = count_r_peaks(&trace);
        assert!((9..=11).contains(&peaks), "found {peaks} R peaks");
    }

    #[test]
    fn generator_respects_amplitude_bound_and_seed() {
        let trace = default_ecg();
        let max = trace.as_real().iter().fold(0.0f64, |m, &s| m.max(s.abs()));
        assert!(max <= 0.9 + 1e-12, "peak {max}");
        assert!((max - 0.9).abs() < 1e-9, "normalized to 0.9, got {max}");
        assert_eq!(default_ecg(), trace);
        let other = gen_ecg(360.0, 10.0, 60.0, 2).unwrap();
        assert_ne!(other, trace);
    }

    #[test]
    fn generator_rejects_degenerate_durations() {
        assert!(matches!(
            gen_ecg(360.0, 0.5, 60.0, 1),
            Err(EcgError::DegenerateParams(_))
        ));
    }

    #[test]
    fn noise_hits_target_snr() {
        let clean = default_ecg();
        for kind in [
            NoiseKind::WhiteGaussian,
            NoiseKind::Powerline { freq_hz: 50.0 },
            NoiseKind::BaselineWander { freq_hz: 0.3 },
        ] {
            let noisy = add_noise(
                &clean,
                &NoiseSpec {
                    kind,
                    target_snr_db: 10.0,
                    seed: 3,
                },
            )
            .unwrap();
            let measured = snr_db(&clean, &noisy).unwrap();
            assert!(
                (measured - 10.0).abs() < 0.1,
                "{} realized {measured} dB",
                kind.label()
            );
        }
    }

    #[test]
    fn infinite_target_snr_is_identity() {
        let clean = default_ecg();
        let noisy = add_noise(
            &clean,
            &NoiseSpec {
                kind: NoiseKind::WhiteGaussian,
                target_snr_db: f64::INFINITY,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(noisy.as_real(), clean.as_real());
    }

    #[test]
    fn powerline_noise_peaks_at_its_frequency() {
        let clean = SignalTrace::real(vec![0.01; 1024], 360.0);
        let noisy = add_noise(
            &clean,
            &NoiseSpec {
                kind: NoiseKind::Powerline { freq_hz: 50.0 },
                target_snr_db: 0.0,
                seed: 5,
            },
        )
        .unwrap();
        // Naive DFT magnitude over 0..180 Hz in 1024-point resolution.
        let x = noisy.as_real();
        let n = x.len();
        let mut best = (0.0f64, 0.0f64);
        for bin in 1..n / 2 {
            let f = bin as f64 * 360.0 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &v) in x.iter().enumerate() {
                let w = 2.0 * std::f64::consts::PI * f * i as f64 / 360.0;
                re += v * w.cos();
                im -= v * w.sin();
            }
            let mag = (re * re + im * im).sqrt();
            if mag > best.1 {
                best = (f, mag);
            }
        }
        assert!((best.0 - 50.0).abs() < 1.0, "spectral peak at {} Hz", best.0);
    }

    #[test]
    fn noise_rejects_zero_trace_and_bad_frequency() {
        let zero = SignalTrace::real(vec![0.0; 100], 360.0);
        assert!(matches!(
            add_noise(
                &zero,
                &NoiseSpec {
                    kind: NoiseKind::WhiteGaussian,
                    target_snr_db: 10.0,
                    seed: 0,
                }
            ),
            Err(EcgError::ZeroReference)
        ));
        let clean = default_ecg();
        assert!(matches!(
            add_noise(
                &clean,
                &NoiseSpec {
                    kind: NoiseKind::Powerline { freq_hz: 200.0 },
                    target_snr_db: 10.0,
                    seed: 0,
                }
            ),
            Err(EcgError::BadNoiseFrequency { .. })
        ));
    }

    #[test]
    fn snr_examples() {
        let reference = SignalTrace::real(vec![1.0, -2.0, 3.0], 360.0);
        assert_eq!(snr_db(&reference, &reference).unwrap(), f64::INFINITY);
        let zero = SignalTrace::real(vec![0.0; 3], 360.0);
        assert!((snr_db(&reference, &zero).unwrap()).abs() < 1e-12);
        // Noise power = 0.1 x signal power -> exactly 10 dB.
        let scaled: Vec<f64> = reference
            .as_real()
            .iter()
            .map(|&v| v * (1.0 + (0.1f64).sqrt()))
            .collect();
        let test = SignalTrace::real(scaled, 360.0);
        assert!((snr_db(&reference, &test).unwrap() - 10.0).abs() < 1e-9);
        let short = SignalTrace::real(vec![1.0], 360.0);
        assert!(matches!(
            snr_db(&reference, &short),
            Err(EcgError::LengthMismatch(3, 1))
        ));
    }

    #[test]
    fn mse_examples_and_snr_identity() {
        let reference = default_ecg();
        assert_eq!(mse(&reference, &reference).unwrap(), 0.0);
        let offset = SignalTrace::real(
            reference.as_real().iter().map(|v| v + 0.25).collect(),
            360.0,
        );
        assert!((mse(&reference, &offset).unwrap() - 0.0625).abs() < 1e-12);
        // SNR = 10 log10(meansq(ref) / mse).
        let noisy = add_noise(
            &reference,
            &NoiseSpec {
                kind: NoiseKind::WhiteGaussian,
                target_snr_db: 7.0,
                seed: 11,
            },
        )
        .unwrap();
        let r = reference.as_real();
        let meansq = r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64;
        let via_mse = 10.0 * (meansq / mse(&reference, &noisy).unwrap()).log10();
        assert!((via_mse - snr_db(&reference, &noisy).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn quantize_dequantize_error_is_bounded() {
        let trace = default_ecg();
        let q = quantize_trace(&trace, SAMPLE_FRAC_BITS).unwrap();
        let step = 1.0 / (1i64 << SAMPLE_FRAC_BITS) as f64;
        for (a, b) in trace.as_real().iter().zip(q.as_real()) {
            assert!((a - b).abs() <= step / 2.0 + 1e-15);
        }
        let loud = SignalTrace::real(vec![2.0], 360.0);
        assert!(matches!(
            quantize_trace(&loud, 15),
            Err(EcgError::SampleOverflow { .. })
        ));
        let saturated = quantize_trace_saturating(&loud, 15);
        assert_eq!(
            saturated.data,
            TraceData::Fixed16 {
                samples: vec![i16::MAX],
                frac_bits: 15
            }
        );
    }

    #[test]
    fn trace_files_round_trip_and_report_errors() {
        let dir = std::env::temp_dir().join("redfir_ecg_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let real_path = dir.join("real.csv");
        let trace = default_ecg();
        save_trace(&trace, &real_path).unwrap();
        assert_eq!(load_trace(&real_path).unwrap(), trace);

        let fixed = quantize_trace(&trace, 15).unwrap();
        let fixed_path = dir.join("fixed.csv");
        save_trace(&fixed, &fixed_path).unwrap();
        assert_eq!(load_trace(&fixed_path).unwrap(), fixed);

        // Headerless numeric files load at the default rate.
        std::fs::write(dir.join("raw.csv"), "0.5\n-0.25\n").unwrap();
        let raw = load_trace(&dir.join("raw.csv")).unwrap();
        assert_eq!(raw.sample_rate_hz, 360.0);
        assert_eq!(raw.as_real(), vec![0.5, -0.25]);

        // Garbage lines are named.
        std::fs::write(dir.join("bad.csv"), "sample_rate_hz=360\n0.5\nwat\n").unwrap();
        match load_trace(&dir.join("bad.csv")) {
            Err(EcgError::TraceParse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
        std::fs::write(dir.join("badheader.csv"), "sample_rate=360\n1\n").unwrap();
        match load_trace(&dir.join("badheader.csv")) {
            Err(EcgError::TraceParse { line: 1, .. }) => {}
            other => panic!("expected header error, got {other:?}"),
        }
        std::fs::write(dir.join("empty.csv"), "sample_rate_hz=360\n").unwrap();
        assert!(matches!(
            load_trace(&dir.join("empty.csv")),
            Err(EcgError::EmptyTrace)
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn pipeline_is_identical_across_voters_when_fault_free() {
        let clean = gen_ecg(360.0, 2.0, 60.0, 21).unwrap();
        let noise = NoiseSpec {
            kind: NoiseKind::WhiteGaussian,
            target_snr_db: 10.0,
            seed: 4,
        };
        let filter = FilterSpec {
            num_taps: 7,
            ..FilterSpec::default()
        };
        let mut reference: Option<Vec<f64>> = None;
        for voter in VoterKind::ALL {
            let result = denoise_pipeline(
                &clean,
                &noise,
                &filter,
                voter,
                Fusion::BitwiseVote,
                &[],
            )
            .unwrap();
            let denoised = result.denoised.as_real();
            match &reference {
                None => reference = Some(denoised),
                Some(r) => assert_eq!(r, &denoised, "{voter:?} differs"),
            }
        }
    }

    #[test]
    fn pipeline_improves_out_of_band_noise_and_masks_a_fault() {
        let clean = gen_ecg(360.0, 2.0, 60.0, 33).unwrap();
        let noise = NoiseSpec {
            kind: NoiseKind::Powerline { freq_hz: 120.0 },
            target_snr_db: 10.0,
            seed: 6,
        };
        let filter = FilterSpec {
            num_taps: 21,
            ..FilterSpec::default()
        };
        let coeffs = design_lowpass(&filter).unwrap();
        let datapath = build_fir(&coeffs).unwrap();
        let system = replicate(&datapath.netlist, VoterKind::Majority5).unwrap();
        let fault_free = denoise_with_system(
            &clean,
            &noise,
            &datapath,
            &system,
            Fusion::BitwiseVote,
            &[],
        )
        .unwrap();
        assert!(
            fault_free.metrics.improvement_db > 3.0,
            "improvement {} dB",
            fault_free.metrics.improvement_db
        );
        // One injected replica fault leaves the metrics untouched.
        let fault = FaultSpec {
            replica: 2,
            net: system.universe()[system.universe_size() / 2],
            mode: crate::circuit::FaultMode::Flip,
            window: 0..clean.len() as u64,
        };
        let faulted = denoise_with_system(
            &clean,
            &noise,
            &datapath,
            &system,
            Fusion::BitwiseVote,
            &[fault],
        )
        .unwrap();
        assert_eq!(faulted.metrics, fault_free.metrics);
        assert_eq!(faulted.denoised.as_real(), fault_free.denoised.as_real());
    }

    #[test]
    fn median_fusion_runs_and_reports_its_label() {
        let clean = gen_ecg(360.0, 1.5, 60.0, 41).unwrap();
        let noise = NoiseSpec {
            kind: NoiseKind::WhiteGaussian,
            target_snr_db: 8.0,
            seed: 9,
        };
        let filter = FilterSpec {
            num_taps: 7,
            ..FilterSpec::default()
        };
        let result = denoise_pipeline(
            &clean,
            &noise,
            &filter,
            VoterKind::Majority5,
            Fusion::Median5,
            &[],
        )
        .unwrap();
        assert_eq!(result.metrics.fusion, "median5");
        assert!(result.metrics.snr_in_db > 8.0, "median fusion should help");
    }
}
