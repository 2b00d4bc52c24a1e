//! Quality and rate measures: PRD, PRDN, CR, QS, local prd statistics,
//! relative gain, and the worst-distortion segment.

use crate::error::{Error, Result};
use crate::signal_io::Signal;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff_norm(f: &[f64], fr: &[f64]) -> f64 {
    f.iter()
        .zip(fr)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn check_lengths(f: &[f64], fr: &[f64]) -> Result<()> {
    if f.len() != fr.len() {
        return Err(Error::InvalidParam(format!(
            "signal lengths differ: {} vs {}",
            f.len(),
            fr.len()
        )));
    }
    Ok(())
}

/// Percent root-mean-square difference: 100 ||f - fr|| / ||f||.
pub fn prd(f: &[f64], fr: &[f64]) -> Result<f64> {
    check_lengths(f, fr)?;
    let denom = norm(f);
    if denom == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    Ok(100.0 * diff_norm(f, fr) / denom)
}

/// Baseline-independent PRD: normalized by the mean-removed signal norm.
pub fn prdn(f: &[f64], fr: &[f64]) -> Result<f64> {
    check_lengths(f, fr)?;
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let denom = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(Error::ConstantSignal);
    }
    Ok(100.0 * diff_norm(f, fr) / denom)
}

/// Uncompressed-over-compressed size ratio. The uncompressed size is
/// ceil(n_samples * adc_bits / 8) bytes.
pub fn compression_ratio(n_samples: usize, adc_bits: u32, archive_bytes: usize) -> f64 {
    debug_assert!(archive_bytes > 0);
    let raw_bytes = (n_samples * adc_bits as usize).div_ceil(8);
    raw_bytes as f64 / archive_bytes as f64
}

/// QS = CR / PRD.
pub fn quality_score(cr: f64, prd: f64) -> f64 {
    cr / prd
}

/// Relative CR gain of approach 1 over approach 2, in percent.
pub fn gain(cr1: f64, cr2: f64) -> f64 {
    debug_assert!(cr2 > 0.0);
    100.0 * (cr1 - cr2) / cr2
}

/// Local prd over disjoint consecutive segments of length `segment_length`.
#[derive(Debug, Clone)]
pub struct LocalPrd {
    /// prd(q) per segment, `None` when the segment has zero norm.
    pub per_segment: Vec<Option<f64>>,
    /// Mean over the valid segments.
    pub mean: f64,
    /// Sample standard deviation over the valid segments (0 when fewer
    /// than two are valid).
    pub std: f64,
    /// `(q*, prd(q*))` with 1-based q*, smallest index on ties; `None`
    /// when no segment is valid.
    pub worst: Option<(usize, f64)>,
    pub segment_length: usize,
    /// Q = floor(N / L); a trailing partial segment is excluded.
    pub segment_count: usize,
    /// 1-based indices of zero-norm segments excluded from the statistics.
    pub excluded: Vec<usize>,
}

pub fn local_prd(f: &[f64], fr: &[f64], segment_length: usize) -> Result<LocalPrd> {
    check_lengths(f, fr)?;
    if segment_length == 0 {
        return Err(Error::InvalidParam("segment length must be >= 1".into()));
    }
    let q_count = f.len() / segment_length;
    if q_count == 0 {
        return Err(Error::InvalidParam(format!(
            "segment length {} exceeds signal length {}",
            segment_length,
            f.len()
        )));
    }

    let mut per_segment = Vec::with_capacity(q_count);
    let mut excluded = Vec::new();
    for q in 0..q_count {
        let range = q * segment_length..(q + 1) * segment_length;
        let seg_f = &f[range.clone()];
        let seg_fr = &fr[range];
        let denom = norm(seg_f);
        if denom == 0.0 {
            excluded.push(q + 1);
            per_segment.push(None);
        } else {
            per_segment.push(Some(100.0 * diff_norm(seg_f, seg_fr) / denom));
        }
    }

    let valid: Vec<(usize, f64)> = per_segment
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|v| (i + 1, v)))
        .collect();
    let mean = if valid.is_empty() {
        0.0
    } else {
        valid.iter().map(|&(_, v)| v).sum::<f64>() / valid.len() as f64
    };
    let std = if valid.len() < 2 {
        0.0
    } else {
        let ss: f64 = valid.iter().map(|&(_, v)| (v - mean) * (v - mean)).sum();
        (ss / (valid.len() - 1) as f64).sqrt()
    };
    let worst = valid
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, f64)>, (q, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((q, v)),
        });

    Ok(LocalPrd {
        per_segment,
        mean,
        std,
        worst,
        segment_length,
        segment_count: q_count,
        excluded,
    })
}

/// The segment of maximum distortion: `(q*, prd(q*))`, 1-based.
pub fn worst_segment(f: &[f64], fr: &[f64], segment_length: usize) -> Result<(usize, f64)> {
    local_prd(f, fr, segment_length)?
        .worst
        .ok_or_else(|| Error::InvalidParam("no segment with nonzero norm".into()))
}

/// Everything the result tables report for one record.
#[derive(Debug, Clone)]
pub struct QualityReport {
    pub record_id: String,
    pub prd: f64,
    pub prdn: f64,
    pub cr: f64,
    pub qs: f64,
    pub local_mean: f64,
    pub local_std: f64,
    pub worst_segment_index: usize,
    pub worst_segment_prd: f64,
    pub segment_length: usize,
    pub segment_count: usize,
}

impl QualityReport {
    pub fn csv_header() -> &'static str {
        "record_id,prd,prdn,cr,qs,local_mean,local_std,q_star"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.record_id,
            self.prd,
            self.prdn,
            self.cr,
            self.qs,
            self.local_mean,
            self.local_std,
            self.worst_segment_index
        )
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "record={}\nprd={:.6}\nprdn={:.6}\ncr={:.6}\nqs={:.6}\nlocal_mean={:.6}\nlocal_std={:.6}\nq_star={}\nq_star_prd={:.6}\nsegment_length={}\nsegment_count={}\n",
            self.record_id,
            self.prd,
            self.prdn,
            self.cr,
            self.qs,
            self.local_mean,
            self.local_std,
            self.worst_segment_index,
            self.worst_segment_prd,
            self.segment_length,
            self.segment_count
        )
    }
}

/// Assemble the full report for a record and its reconstruction.
pub fn quality_report(
    original: &Signal,
    reconstructed: &Signal,
    archive_bytes: usize,
    segment_length: usize,
) -> Result<QualityReport> {
    let f = &original.samples;
    let fr = &reconstructed.samples;
    let prd_value = prd(f, fr)?;
    let prdn_value = prdn(f, fr)?;
    let cr = compression_ratio(f.len(), original.adc_bits, archive_bytes);
    let local = local_prd(f, fr, segment_length.min(f.len()))?;
    let (q_star, q_star_prd) = local
        .worst
        .ok_or_else(|| Error::InvalidParam("no segment with nonzero norm".into()))?;
    Ok(QualityReport {
        record_id: original.record_id.clone(),
        prd: prd_value,
        prdn: prdn_value,
        cr,
        qs: quality_score(cr, prd_value),
        local_mean: local.mean,
        local_std: local.std,
        worst_segment_index: q_star,
        worst_segment_prd: q_star_prd,
        segment_length: local.segment_length,
        segment_count: local.segment_count,
    })
}
