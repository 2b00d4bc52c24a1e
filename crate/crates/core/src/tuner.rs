//! Parameter search: find the quantization step (and selection threshold)
//! that hits a target PRD for one record or a whole corpus.

use crate::codec::{self, CodecParams, Mode, DEFAULT_LEVELS};
use crate::error::{Error, Result};
use crate::metrics;
use crate::signal_io::Signal;

/// Search configuration. PRD is empirically non-decreasing in the
/// quantization step, so a bracketed bisection applies.
#[derive(Debug, Clone, Copy)]
pub struct TuneSpec {
    pub target_prd: f64,
    pub mode: Mode,
    /// Mode A sets prd0 = prd0_fraction * target_prd.
    pub prd0_fraction: f64,
    /// Accepted |achieved - target| as a fraction of the target.
    pub tolerance: f64,
    pub max_iters: usize,
    pub delta_bracket: (f64, f64),
    pub levels: usize,
}

impl TuneSpec {
    pub fn new(target_prd: f64, mode: Mode) -> Self {
        Self {
            target_prd,
            mode,
            prd0_fraction: 0.75,
            tolerance: 0.005,
            max_iters: 40,
            delta_bracket: (1e-3, 1e4),
            levels: DEFAULT_LEVELS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.target_prd.is_finite() || self.target_prd <= 0.0 {
            return Err(Error::InvalidParam("target PRD must be positive".into()));
        }
        let (lo, hi) = self.delta_bracket;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::InvalidParam(format!(
                "bad delta bracket ({lo}, {hi})"
            )));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParam("tolerance must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.prd0_fraction) {
            return Err(Error::InvalidParam("prd0 fraction outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Result of a search; `achieved_prd` always equals a fresh encode/decode
/// with `params`, so callers can reproduce it exactly.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub params: CodecParams,
    /// Mean PRD across the corpus (the record's PRD for a single record).
    pub achieved_prd: f64,
    pub per_record_prd: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Tune one record.
pub fn tune_record(signal: &Signal, spec: &TuneSpec) -> Result<TuneOutcome> {
    tune_corpus(std::slice::from_ref(signal), spec)
}

/// Find one shared (delta, prd0) so the unweighted mean of per-record PRDs
/// meets the target within tolerance, or the best bisection point after
/// `max_iters` with a warning.
pub fn tune_corpus(records: &[Signal], spec: &TuneSpec) -> Result<TuneOutcome> {
    spec.validate()?;
    if records.is_empty() {
        return Err(Error::InvalidParam("corpus is empty".into()));
    }

    let prd0_percent = match spec.mode {
        Mode::A => spec.prd0_fraction * spec.target_prd,
        Mode::B => 0.0,
    };
    let params_for = |delta: f64| CodecParams {
        mode: spec.mode,
        delta,
        prd0_percent,
        levels: spec.levels,
    };
    let evaluate = |delta: f64| -> Result<(f64, Vec<f64>)> {
        let mut per_record = Vec::with_capacity(records.len());
        for record in records {
            let set = codec::encode(record, &params_for(delta))?;
            let decoded = codec::decode(&set)?;
            per_record.push(metrics::prd(&record.samples, &decoded.samples)?);
        }
        let mean = per_record.iter().sum::<f64>() / per_record.len() as f64;
        Ok((mean, per_record))
    };

    let tolerance = spec.tolerance * spec.target_prd;
    let (mut lo, mut hi) = spec.delta_bracket;

    // Probe the bracket ends, stretching each a decade at a time (up to 3)
    // until the target is enclosed.
    let mut lo_eval = evaluate(lo)?;
    let mut expansions = 0;
    while lo_eval.0 > spec.target_prd && expansions < 3 {
        lo /= 10.0;
        lo_eval = evaluate(lo)?;
        expansions += 1;
    }
    let mut hi_eval = evaluate(hi)?;
    expansions = 0;
    while hi_eval.0 < spec.target_prd && expansions < 3 {
        hi *= 10.0;
        hi_eval = evaluate(hi)?;
        expansions += 1;
    }

    let mut best = Candidate::new(lo, lo_eval);
    best.offer(hi, hi_eval, spec.target_prd);

    let mut iterations = 0;
    while iterations < spec.max_iters && best.distance(spec.target_prd) > tolerance {
        // geometric midpoint: delta lives on a log scale
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break; // bracket collapsed onto a quantization plateau edge
        }
        let mid_eval = evaluate(mid)?;
        if mid_eval.0 < spec.target_prd {
            lo = mid;
        } else {
            hi = mid;
        }
        best.offer(mid, mid_eval, spec.target_prd);
        iterations += 1;
    }

    let converged = best.distance(spec.target_prd) <= tolerance;
    if !converged {
        log::warn!(
            "tuner stopped after {iterations} iterations at PRD {:.4} (target {:.4})",
            best.mean,
            spec.target_prd
        );
    }
    Ok(TuneOutcome {
        params: params_for(best.delta),
        achieved_prd: best.mean,
        per_record_prd: best.per_record,
        converged,
        iterations,
    })
}

struct Candidate {
    delta: f64,
    mean: f64,
    per_record: Vec<f64>,
}

impl Candidate {
    fn new(delta: f64, (mean, per_record): (f64, Vec<f64>)) -> Self {
        Self {
            delta,
            mean,
            per_record,
        }
    }

    fn distance(&self, target: f64) -> f64 {
        (self.mean - target).abs()
    }

    fn offer(&mut self, delta: f64, (mean, per_record): (f64, Vec<f64>), target: f64) {
        if (mean - target).abs() < self.distance(target) {
            *self = Self {
                delta,
                mean,
                per_record,
            };
        }
    }
}
