//! FIR filter design and the gate-level FIR datapath.
//!
//! Design is windowed-sinc with unity DC gain; coefficients quantize to
//! 16-bit fixed point (Q1.15 by default). The datapath is a 16-bit delay
//! line feeding one signed Vedic multiplier per tap, a carry-save
//! reduction tree, and a registered full-width accumulator. Its clocked
//! simulation must match [`filter_behavioral`] bit for bit; that golden
//! model is the central correctness property of the crate.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    self, ceil_log2, constant_word, input_word, output_word, register_word, sign_extend,
    sign_extend_value, ArithError, Signedness, Word,
};
use crate::circuit::{BatchSim, CircuitError, Netlist};

/// Window applied to the ideal sinc impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Window {
    Hamming,
    Kaiser { beta: f64 },
    Rectangular,
}

impl Window {
    pub fn id(&self) -> String {
        match self {
            Window::Hamming => "hamming".into(),
            Window::Kaiser { beta } => format!("kaiser({beta})"),
            Window::Rectangular => "rectangular".into(),
        }
    }
}

/// Lowpass design parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    /// Odd, so the filter is symmetric (linear-phase, type I).
    pub num_taps: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
    pub window: Window,
    /// Fractional bits of the 16-bit coefficient format.
    pub frac_bits: u8,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            num_taps: 51,
            cutoff_hz: 45.0,
            sample_rate_hz: 360.0,
            window: Window::Hamming,
            frac_bits: 15,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), FirError> {
        if self.num_taps == 0 || self.num_taps % 2 == 0 {
            return Err(FirError::EvenTaps(self.num_taps));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < self.sample_rate_hz / 2.0) {
            return Err(FirError::BadCutoff {
                cutoff_hz: self.cutoff_hz,
                sample_rate_hz: self.sample_rate_hz,
            });
        }
        if self.frac_bits > 15 {
            return Err(FirError::BadFracBits(self.frac_bits));
        }
        Ok(())
    }
}

/// Designed coefficients: the real values and their fixed-point images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedCoeffs {
    pub real: Vec<f64>,
    pub fixed: Vec<i16>,
    pub frac_bits: u8,
}

impl QuantizedCoeffs {
    pub fn num_taps(&self) -> usize {
        self.fixed.len()
    }

    /// Exact DC gain of the fixed-point filter.
    pub fn dc_gain_fixed(&self) -> i64 {
        self.fixed.iter().map(|&c| c as i64).sum()
    }

    /// Structured-data form of the coefficient set.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("coeffs serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum FirError {
    #[error("tap count must be odd and positive, got {0}")]
    EvenTaps(usize),
    #[error("cutoff {cutoff_hz} Hz must lie in (0, {sample_rate_hz}/2) Hz")]
    BadCutoff { cutoff_hz: f64, sample_rate_hz: f64 },
    #[error("fractional bits {0} exceed the 16-bit coefficient format")]
    BadFracBits(u8),
    #[error(
        "coefficient {index} ({value}) overflows 16-bit fixed point at {frac_bits} fractional bits"
    )]
    CoeffOverflow {
        index: usize,
        value: f64,
        frac_bits: u8,
    },
    #[error("coefficient file line {line}: {message}")]
    CoeffParse { line: usize, message: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---- design --------------------------------------------------------------

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn window_values(window: Window, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| match window {
            Window::Rectangular => 1.0,
            Window::Hamming => 0.54 - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / m).cos(),
            Window::Kaiser { beta } => {
                let t = 2.0 * k as f64 / m - 1.0;
                bessel_i0(beta * (1.0 - t * t).sqrt()) / bessel_i0(beta)
            }
        })
        .collect()
}

/// Windowed-sinc lowpass design, normalized to exactly unity DC gain
/// before quantization. Coefficients are symmetric by construction.
pub fn design_lowpass(spec: &FilterSpec) -> Result<QuantizedCoeffs, FirError> {
    spec.validate()?;
    let n = spec.num_taps;
    let mid = (n - 1) as f64 / 2.0;
    let ft = 2.0 * spec.cutoff_hz / spec.sample_rate_hz;
    let win = window_values(spec.window, n);
    let mut real: Vec<f64> = (0..n)
        .map(|k| ft * sinc(ft * (k as f64 - mid)) * win[k])
        .collect();
    let sum: f64 = real.iter().sum();
    for c in &mut real {
        *c /= sum;
    }
    // Mirror so the stored reals are exactly symmetric despite float noise.
    for k in 0..n / 2 {
        let avg = (real[k] + real[n - 1 - k]) / 2.0;
        real[k] = avg;
        real[n - 1 - k] = avg;
    }
    quantize(&real, spec.frac_bits)
}

/// Quantizes symmetric real coefficients to 16-bit fixed point with
/// round-half-away-from-zero; the first half is quantized and mirrored so
/// symmetry is exact.
pub fn quantize(real: &[f64], frac_bits: u8) -> Result<QuantizedCoeffs, FirError> {
    if frac_bits > 15 {
        return Err(FirError::BadFracBits(frac_bits));
    }
    let n = real.len();
    let scale = (1i64 << frac_bits) as f64;
    let mut fixed = vec![0i16; n];
    for i in 0..(n + 1) / 2 {
        let q = (real[i] * scale).round();
        if q.abs() > i16::MAX as f64 {
            return Err(FirError::CoeffOverflow {
                index: i,
                value: real[i],
                frac_bits,
            });
        }
        fixed[i] = q as i16;
        fixed[n - 1 - i] = q as i16;
    }
    Ok(QuantizedCoeffs {
        real: real.to_vec(),
        fixed,
        frac_bits,
    })
}

/// Magnitude of the frequency response of real coefficients at `freq_hz`.
pub fn magnitude_response(coeffs: &[f64], freq_hz: f64, sample_rate_hz: f64) -> f64 {
    let omega = 2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz;
    let (mut re, mut im) = (0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate() {
        re += c * (omega * k as f64).cos();
        im -= c * (omega * k as f64).sin();
    }
    (re * re + im * im).sqrt()
}

// ---- behavioral golden model ----------------------------------------------

/// Exact integer convolution `y[n] = sum_k c[k] * x[n-k]` with `x[<0] = 0`
/// and full precision. The netlist must match this output bit for bit.
pub fn filter_behavioral(coeffs: &QuantizedCoeffs, samples: &[i16]) -> Vec<i64> {
    let taps = &coeffs.fixed;
    (0..samples.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, &c)| c as i64 * samples[n - k] as i64)
                .sum()
        })
        .collect()
}

/// Arithmetic shift right by `frac_bits` (truncation toward negative
/// infinity): the explicit post-step that rescales full-width filter
/// output back toward the input format.
pub fn downscale_by_frac(value: i64, frac_bits: u8) -> i64 {
    value >> frac_bits
}

// ---- gate-level datapath ----------------------------------------------------

/// A built FIR netlist plus the metadata needed to run and check it.
#[derive(Debug, Clone)]
pub struct FirDatapath {
    pub netlist: Netlist,
    pub coeffs: QuantizedCoeffs,
    /// Accumulator width: 32 + ceil(log2 taps); wide enough that the full
    /// sum of products never wraps.
    pub output_width: usize,
    /// Clock cycles between a sample entering and its output appearing.
    pub latency: usize,
}

/// Input port name of the datapath.
pub const FIR_INPUT: &str = "x_in";
/// Output port name of the datapath.
pub const FIR_OUTPUT: &str = "y_out";

/// Builds the datapath: 16-bit register delay line, one signed Vedic
/// 16x16 multiplier per tap with the coefficient wired as a constant, a
/// carry-save reduction tree, and a registered full-width output.
pub fn build_fir(coeffs: &QuantizedCoeffs) -> Result<FirDatapath, FirError> {
    let n = coeffs.num_taps();
    let w_out = 32 + ceil_log2(n);
    let mut nl = Netlist::new();
    let x = input_word(&mut nl, FIR_INPUT, 16, Signedness::Signed)?;

    let mut taps = Vec::with_capacity(n);
    let mut prev = x;
    for k in 0..n {
        prev = register_word(&mut nl, &prev, &format!("dl{k}"))?;
        taps.push(prev.clone());
    }

    let mut products: Vec<Vec<crate::circuit::NetId>> = Vec::with_capacity(n);
    for (k, tap) in taps.iter().enumerate() {
        let coeff = constant_word(
            &mut nl,
            coeffs.fixed[k] as u16 as u64,
            16,
            Signedness::Signed,
        )?;
        let product = arith::build_signed_multiplier_16x16(&mut nl, tap, &coeff)?;
        // Sign-extension to the accumulator width makes two's-complement
        // summation exact under the modulo-2^w reduction.
        products.push(sign_extend(&product, w_out)?.bits().to_vec());
    }
    let acc = arith::reduce_sum_mod(&mut nl, products)?;
    let acc_word = Word::new(acc, Signedness::Signed)?;
    let y = register_word(&mut nl, &acc_word, "y_reg")?;
    output_word(&mut nl, FIR_OUTPUT, &y)?;
    nl.validate()?;

    Ok(FirDatapath {
        netlist: nl,
        coeffs: coeffs.clone(),
        output_width: w_out,
        latency: 2,
    })
}

impl FirDatapath {
    /// Clocked simulation of one sample stream; output aligned by
    /// discarding the fixed pipeline latency, so it matches
    /// [`filter_behavioral`] exactly.
    pub fn run(&self, samples: &[i16]) -> Result<Vec<i64>, FirError> {
        Ok(self.run_multi(&[samples])?.pop().unwrap())
    }

    /// Runs up to 64 equal-length streams in parallel simulator lanes.
    pub fn run_multi(&self, streams: &[&[i16]]) -> Result<Vec<Vec<i64>>, FirError> {
        assert!(!streams.is_empty() && streams.len() <= 64);
        let len = streams[0].len();
        assert!(streams.iter().all(|s| s.len() == len), "equal lengths");
        let mut sim = BatchSim::new(&self.netlist)?;
        let mut outputs: Vec<Vec<i64>> = vec![Vec::with_capacity(len); streams.len()];
        for t in 0..len + self.latency {
            let mut inputs = vec![0u64; 16];
            if t < len {
                for (lane, stream) in streams.iter().enumerate() {
                    let raw = stream[t] as u16 as u64;
                    for (bit, input) in inputs.iter_mut().enumerate() {
                        *input |= ((raw >> bit) & 1) << lane;
                    }
                }
            }
            let out = sim.step(&inputs)?;
            if t >= self.latency {
                for (lane, collected) in outputs.iter_mut().enumerate() {
                    let mut word = 0u64;
                    for (bit, lanes) in out.iter().enumerate() {
                        word |= ((lanes >> lane) & 1) << bit;
                    }
                    collected.push(sign_extend_value(word, self.output_width));
                }
            }
        }
        Ok(outputs)
    }
}

// ---- coefficient files --------------------------------------------------------

/// Writes one real coefficient per line plus a `<path>.meta` sidecar
/// describing the fixed-point format.
pub fn save_coefficients(coeffs: &QuantizedCoeffs, path: &Path) -> Result<(), FirError> {
    let mut body = String::new();
    for c in &coeffs.real {
        body.push_str(&format!("{c:.17e}\n"));
    }
    std::fs::write(path, body)?;
    let mut meta = std::fs::File::create(sidecar_path(path))?;
    writeln!(meta, "taps={}", coeffs.num_taps())?;
    writeln!(meta, "frac_bits={}", coeffs.frac_bits)?;
    writeln!(meta, "format=fixed16")?;
    Ok(())
}

/// Reads a coefficient file written by [`save_coefficients`] (or any text
/// file with one real per line) and quantizes at `frac_bits`.
pub fn load_coefficients(path: &Path, frac_bits: u8) -> Result<QuantizedCoeffs, FirError> {
    let text = std::fs::read_to_string(path)?;
    let mut real = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|e| FirError::CoeffParse {
            line: i + 1,
            message: format!("{e}"),
        })?;
        real.push(value);
    }
    quantize(&real, frac_bits)
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    std::path::PathBuf::from(os)
}
