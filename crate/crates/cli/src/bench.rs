//! Batch benchmark: per-record quality/rate/timing rows as CSV.

use std::time::Instant;

use rayon::prelude::*;
use wecg::codec::CodecParams;
use wecg::container::ArchiveOptions;
use wecg::metrics;
use wecg::signal_io::Signal;

pub const CSV_HEADER: &str =
    "record,prd_local_mean,prd_local_std,prd,prdn,cr,qs,qstar,t_compress_s,t_recover_s";

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub record_id: String,
    pub values: [f64; 9],
}

impl BenchRow {
    pub fn to_csv(&self) -> String {
        let v = &self.values;
        format!(
            "{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{},{:.6},{:.6}",
            self.record_id, v[0], v[1], v[2], v[3], v[4], v[5], v[6] as usize, v[7], v[8]
        )
    }
}

/// Compress/recover one record `repeat` times, averaging the wall-clock
/// timings; quality metrics come from the first run (they are identical
/// across runs and the archive bytes are deterministic).
pub fn bench_record(
    signal: &Signal,
    params: &CodecParams,
    options: &ArchiveOptions,
    repeat: usize,
    segment_length: usize,
) -> Result<BenchRow, wecg::Error> {
    let repeat = repeat.max(1);
    let mut archive = Vec::new();
    let mut decoded = None;
    let mut t_compress = 0.0;
    let mut t_recover = 0.0;
    for _ in 0..repeat {
        let started = Instant::now();
        archive = wecg::compress(signal, params, options)?;
        t_compress += started.elapsed().as_secs_f64();

        let started = Instant::now();
        decoded = Some(wecg::decompress(&archive)?);
        t_recover += started.elapsed().as_secs_f64();
    }
    let decoded = decoded.expect("repeat >= 1");
    let report = metrics::quality_report(signal, &decoded, archive.len(), segment_length)?;
    Ok(BenchRow {
        record_id: signal.record_id.clone(),
        values: [
            report.local_mean,
            report.local_std,
            report.prd,
            report.prdn,
            report.cr,
            report.qs,
            report.worst_segment_index as f64,
            t_compress / repeat as f64,
            t_recover / repeat as f64,
        ],
    })
}

/// Bench every record, optionally in parallel; rows come back ordered by
/// record id regardless of completion order.
pub fn bench_corpus(
    signals: &[Signal],
    params: &CodecParams,
    options: &ArchiveOptions,
    repeat: usize,
    segment_length: usize,
    jobs: usize,
) -> Result<Vec<BenchRow>, wecg::Error> {
    let mut rows = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| wecg::Error::InvalidParam(e.to_string()))?;
        pool.install(|| {
            signals
                .par_iter()
                .map(|s| bench_record(s, params, options, repeat, segment_length))
                .collect::<Result<Vec<_>, _>>()
        })?
    } else {
        signals
            .iter()
            .map(|s| bench_record(s, params, options, repeat, segment_length))
            .collect::<Result<Vec<_>, _>>()?
    };
    rows.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    Ok(rows)
}

/// Unweighted column means and sample standard deviations for the footer.
pub fn footer_rows(rows: &[BenchRow]) -> (BenchRow, BenchRow) {
    let n = rows.len().max(1) as f64;
    let mut mean = [0.0; 9];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(&row.values) {
            *m += v / n;
        }
    }
    let mut std = [0.0; 9];
    if rows.len() > 1 {
        for row in rows {
            for ((s, v), m) in std.iter_mut().zip(&row.values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / (rows.len() as f64 - 1.0)).sqrt();
        }
    }
    (
        BenchRow {
            record_id: "mean".into(),
            values: mean,
        },
        BenchRow {
            record_id: "std".into(),
            values: std,
        },
    )
}
