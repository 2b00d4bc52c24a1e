//! Compression core: coefficient selection, mid-tread quantization, zero
//! elimination, sign/magnitude split, index delta coding, and the full
//! encoder/decoder pair.

use crate::dwt::{self, WaveletCoeffs};
use crate::error::{Error, Result};
use crate::signal_io::Signal;

/// Selection strategy ahead of quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Energy-threshold selection of the largest coefficients, then quantize.
    A,
    /// Quantize everything; zero-mapped coefficients drop out.
    B,
}

pub const DEFAULT_LEVELS: usize = 4;

/// Encoder parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecParams {
    pub mode: Mode,
    /// Quantization step Δ.
    pub delta: f64,
    /// Target pre-quantization PRD in percent; drives the selection
    /// threshold in mode A, ignored in mode B.
    pub prd0_percent: f64,
    /// Decomposition levels.
    pub levels: usize,
}

impl CodecParams {
    pub fn mode_a(delta: f64, prd0_percent: f64) -> Self {
        Self {
            mode: Mode::A,
            delta,
            prd0_percent,
            levels: DEFAULT_LEVELS,
        }
    }

    pub fn mode_b(delta: f64) -> Self {
        Self {
            mode: Mode::B,
            delta,
            prd0_percent: 0.0,
            levels: DEFAULT_LEVELS,
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.levels == 0 {
            return Err(Error::InvalidParam("levels must be >= 1".into()));
        }
        if self.prd0_percent < 0.0 {
            return Err(Error::InvalidParam("prd0 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Selected coefficients with their 1-based positions in the flat
/// coefficient array, ordered by ascending magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoeffs {
    pub values: Vec<f64>,
    pub indices: Vec<u32>,
}

/// The decoder-sufficient tuple: everything the recovery procedure needs.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSet {
    /// Length of the analyzed (possibly padded) signal.
    pub n: u32,
    pub levels: u8,
    pub delta: f64,
    /// Quantized coefficient magnitudes, index-sorted; every entry >= 1.
    pub magnitudes: Vec<u64>,
    /// true = +, false = -.
    pub signs: Vec<bool>,
    /// First entry is the first 1-based index, then consecutive differences.
    pub index_deltas: Vec<u32>,
    /// Signal length before padding.
    pub original_length: u32,
}

impl QuantizedSet {
    pub fn k(&self) -> usize {
        self.magnitudes.len()
    }

    /// Check the structural invariants; violations map to corrupt-archive
    /// errors because they can only come from bad stored data.
    pub fn validate(&self) -> Result<()> {
        let k = self.magnitudes.len();
        if self.signs.len() != k || self.index_deltas.len() != k {
            return Err(Error::CorruptArchive(format!(
                "array lengths disagree: {} magnitudes, {} signs, {} deltas",
                k,
                self.signs.len(),
                self.index_deltas.len()
            )));
        }
        if self.n == 0 {
            return Err(Error::CorruptArchive("n must be positive".into()));
        }
        if self.levels == 0 {
            return Err(Error::CorruptArchive("levels must be >= 1".into()));
        }
        if !(self.n as u64).is_multiple_of(1u64 << self.levels.min(63)) {
            return Err(Error::CorruptArchive(format!(
                "n={} not divisible by 2^{}",
                self.n, self.levels
            )));
        }
        if self.original_length == 0 || self.original_length > self.n {
            return Err(Error::CorruptArchive(format!(
                "original_length {} outside [1, {}]",
                self.original_length, self.n
            )));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 {
            return Err(Error::CorruptArchive(format!(
                "delta {} not a positive finite value",
                self.delta
            )));
        }
        if self.magnitudes.contains(&0) {
            return Err(Error::CorruptArchive("zero magnitude stored".into()));
        }
        let mut position: u64 = 0;
        for &d in &self.index_deltas {
            if d == 0 {
                return Err(Error::CorruptArchive("zero index delta".into()));
            }
            position += u64::from(d);
            if position > u64::from(self.n) {
                return Err(Error::CorruptArchive(format!(
                    "recovered index {position} exceeds n={}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// Keep the largest-magnitude coefficients: sort |w| ascending (ties keep
/// original order), then discard the maximal prefix whose cumulative energy
/// stays below `tol^2`.
pub fn select_largest(coeffs: &[f64], tol: f64) -> SparseCoeffs {
    let mut order: Vec<u32> = (0..coeffs.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        coeffs[a as usize]
            .abs()
            .total_cmp(&coeffs[b as usize].abs())
            .then(a.cmp(&b))
    });
    let threshold = tol * tol;
    let mut cumulative = 0.0;
    let mut first_kept = order.len();
    for (pos, &idx) in order.iter().enumerate() {
        cumulative += coeffs[idx as usize] * coeffs[idx as usize];
        if cumulative >= threshold {
            first_kept = pos;
            break;
        }
    }
    let kept = &order[first_kept..];
    SparseCoeffs {
        values: kept.iter().map(|&i| coeffs[i as usize]).collect(),
        indices: kept.iter().map(|&i| i + 1).collect(),
    }
}

/// Mid-tread uniform quantizer: floor(c/Δ + 1/2) element-wise.
pub fn quantize(values: &[f64], delta: f64) -> Vec<i64> {
    debug_assert!(delta > 0.0);
    values
        .iter()
        .map(|c| (c / delta + 0.5).floor() as i64)
        .collect()
}

/// Remove positions quantized to zero, in parallel from both arrays.
pub fn drop_zeros(quantized: &[i64], indices: &[u32]) -> (Vec<i64>, Vec<u32>) {
    debug_assert_eq!(quantized.len(), indices.len());
    quantized
        .iter()
        .zip(indices)
        .filter(|(&q, _)| q != 0)
        .map(|(&q, &i)| (q, i))
        .unzip()
}

/// Sort indices ascending and difference them: output is
/// `(l1, l2-l1, ..., lK-lK-1)` plus the sort permutation so callers can
/// reorder companion arrays identically.
pub fn delta_encode_indices(indices: &[u32]) -> Result<(Vec<u32>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..indices.len()).collect();
    perm.sort_unstable_by_key(|&i| indices[i]);
    let mut deltas = Vec::with_capacity(indices.len());
    let mut previous = 0u32;
    for &p in &perm {
        let index = indices[p];
        if index == 0 {
            return Err(Error::InvalidParam("indices are 1-based".into()));
        }
        if index == previous {
            return Err(Error::DuplicateIndex(index));
        }
        deltas.push(index - previous);
        previous = index;
    }
    Ok((deltas, perm))
}

/// Prefix-sum recovery of the sorted 1-based indices.
pub fn delta_decode_indices(deltas: &[u32]) -> Result<Vec<u32>> {
    let mut indices = Vec::with_capacity(deltas.len());
    let mut position: u64 = 0;
    for &d in deltas {
        if d == 0 {
            return Err(Error::CorruptArchive("zero index delta".into()));
        }
        position += u64::from(d);
        if position > u64::from(u32::MAX) {
            return Err(Error::CorruptArchive("index overflow".into()));
        }
        indices.push(position as u32);
    }
    Ok(indices)
}

/// Full compression procedure: pad, transform, select (mode A), quantize,
/// drop zeros, split signs, delta-code indices.
pub fn encode(signal: &Signal, params: &CodecParams) -> Result<QuantizedSet> {
    params.validate()?;
    let (padded, original_length) = dwt::pad_to_multiple(&signal.samples, params.levels);
    let w = dwt::forward(&padded, params.levels)?;

    let selected = match params.mode {
        Mode::A => {
            let norm = padded.iter().map(|x| x * x).sum::<f64>().sqrt();
            let tol = params.prd0_percent / 100.0 * norm;
            select_largest(w.coeffs(), tol)
        }
        Mode::B => SparseCoeffs {
            values: w.coeffs().to_vec(),
            indices: (1..=w.len() as u32).collect(),
        },
    };

    let quantized = quantize(&selected.values, params.delta);
    let (quantized, indices) = drop_zeros(&quantized, &selected.indices);
    if quantized.is_empty() {
        log::warn!(
            "record {:?}: every coefficient quantized to zero; archive stores silence",
            signal.record_id
        );
    }

    let (index_deltas, perm) = delta_encode_indices(&indices)?;
    let magnitudes = perm.iter().map(|&p| quantized[p].unsigned_abs()).collect();
    let signs = perm.iter().map(|&p| quantized[p] > 0).collect();

    let set = QuantizedSet {
        n: w.len() as u32,
        levels: params.levels as u8,
        delta: params.delta,
        magnitudes,
        signs,
        index_deltas,
        original_length: original_length as u32,
    };
    debug_assert!(set.validate().is_ok());
    Ok(set)
}

/// Signal recovery: rebuild the coefficient vector from the quantized set
/// and invert the wavelet transform, truncating any padding.
pub fn decode(set: &QuantizedSet) -> Result<Signal> {
    set.validate()?;
    let indices = delta_decode_indices(&set.index_deltas)?;
    let mut coeffs = vec![0.0; set.n as usize];
    for ((&index, &magnitude), &positive) in indices.iter().zip(&set.magnitudes).zip(&set.signs) {
        let sign = if positive { 1.0 } else { -1.0 };
        coeffs[index as usize - 1] = sign * set.delta * magnitude as f64;
    }
    let w = WaveletCoeffs::from_flat(coeffs, set.levels as usize)?;
    let mut samples = dwt::inverse(&w)?;
    samples.truncate(set.original_length as usize);
    Signal::with_defaults(samples, "")
}
