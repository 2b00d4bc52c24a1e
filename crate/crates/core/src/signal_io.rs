//! Record ingestion: PhysioNet format-212 binary and plain-text signals.

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 360.0;
pub const DEFAULT_ADC_BITS: u32 = 11;

/// A sampled signal held as 64-bit reals. Raw ADC units are kept as-is;
/// integer handling happens only inside the codec.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub adc_bits: u32,
    pub record_id: String,
}

impl Signal {
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        adc_bits: u32,
        record_id: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParam("signal must be non-empty".into()));
        }
        if !(8..=32).contains(&adc_bits) {
            return Err(Error::InvalidParam(format!(
                "adc_bits {adc_bits} outside [8, 32]"
            )));
        }
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(Error::InvalidParam("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            adc_bits,
            record_id: record_id.into(),
        })
    }

    /// Convenience constructor with the MIT-BIH defaults (360 Hz, 11 bits).
    pub fn with_defaults(samples: Vec<f64>, record_id: impl Into<String>) -> Result<Self> {
        Self::new(samples, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_ADC_BITS, record_id)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Euclidean norm of the sample vector.
    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Decode `n_samples` of one channel from format-212 bytes.
///
/// Each 3-byte frame packs a two-channel sample pair: low byte of s0;
/// high nibble of s1 | high nibble of s0; low byte of s1. Samples are
/// 12-bit two's complement.
pub fn read_format212(bytes: &[u8], channel: usize, n_samples: usize) -> Result<Signal> {
    if channel > 1 {
        return Err(Error::ChannelOutOfRange(channel));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParam("n_samples must be positive".into()));
    }
    let needed = n_samples * 3;
    if bytes.len() < needed {
        return Err(Error::ShortRead {
            needed,
            got: bytes.len(),
        });
    }
    let mut samples = Vec::with_capacity(n_samples);
    for frame in bytes[..needed].chunks_exact(3) {
        let raw: u16 = if channel == 0 {
            (u16::from(frame[1] & 0x0F) << 8) | u16::from(frame[0])
        } else {
            (u16::from(frame[1] & 0xF0) << 4) | u16::from(frame[2])
        };
        samples.push(f64::from(sign_extend_12(raw)));
    }
    Signal::new(samples, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_ADC_BITS, "")
}

fn sign_extend_12(raw: u16) -> i32 {
    if raw & 0x800 != 0 {
        i32::from(raw) - 4096
    } else {
        i32::from(raw)
    }
}

/// Pack a two-channel sample pair sequence back into format-212 bytes.
/// Values must be integers in the 12-bit two's complement range.
pub fn write_format212(ch0: &[f64], ch1: &[f64]) -> Result<Vec<u8>> {
    if ch0.len() != ch1.len() {
        return Err(Error::InvalidParam("channel lengths differ".into()));
    }
    let mut bytes = Vec::with_capacity(ch0.len() * 3);
    for (&a, &b) in ch0.iter().zip(ch1) {
        let a = to_12bit(a)?;
        let b = to_12bit(b)?;
        bytes.push((a & 0xFF) as u8);
        bytes.push((((b >> 8) & 0x0F) << 4) as u8 | ((a >> 8) & 0x0F) as u8);
        bytes.push((b & 0xFF) as u8);
    }
    Ok(bytes)
}

fn to_12bit(x: f64) -> Result<u16> {
    if x.fract() != 0.0 || !(-2048.0..=2047.0).contains(&x) {
        return Err(Error::InvalidParam(format!(
            "sample {x} not a 12-bit integer"
        )));
    }
    Ok((x as i32 & 0xFFF) as u16)
}

/// Parse a plain-text record: one sample per line, optional '#'-prefixed
/// `key=value` header lines (`fs`, `adc_bits`, `record`).
pub fn read_text(text: &str) -> Result<Signal> {
    let mut samples = Vec::new();
    let mut fs = DEFAULT_SAMPLE_RATE_HZ;
    let mut adc_bits = DEFAULT_ADC_BITS;
    let mut record_id = String::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = header.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "fs" | "sample_rate_hz" => {
                        fs = value.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            reason: format!("bad sample rate {value:?}"),
                        })?
                    }
                    "adc_bits" => {
                        adc_bits = value.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            reason: format!("bad adc_bits {value:?}"),
                        })?
                    }
                    "record" => record_id = value.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("expected a number, got {trimmed:?}"),
        })?;
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            line: 0,
            reason: "no samples in input".into(),
        });
    }
    Signal::new(samples, fs, adc_bits, record_id)
}

/// Write samples as a plain-text record readable by `read_text`.
pub fn write_text(signal: &Signal) -> String {
    let mut out = String::new();
    out.push_str(&format!("# fs={}\n", signal.sample_rate_hz));
    out.push_str(&format!("# adc_bits={}\n", signal.adc_bits));
    if !signal.record_id.is_empty() {
        out.push_str(&format!("# record={}\n", signal.record_id));
    }
    for s in &signal.samples {
        out.push_str(&format!("{s}\n"));
    }
    out
}

/// Subtract a constant baseline from every sample; metadata unchanged.
pub fn subtract_baseline(s: &Signal, baseline: f64) -> Signal {
    Signal {
        samples: s.samples.iter().map(|x| x - baseline).collect(),
        sample_rate_hz: s.sample_rate_hz,
        adc_bits: s.adc_bits,
        record_id: s.record_id.clone(),
    }
}
