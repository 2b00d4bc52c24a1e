//! Multi-level CDF 9/7 wavelet analysis and synthesis via the lifting scheme.
//!
//! The transform operates on flat coefficient vectors laid out coarse-first:
//! `[approx_lv | detail_lv | detail_lv-1 | ... | detail_1]`, so a coefficient
//! position is a single index into one array. Boundaries use whole-point
//! symmetric extension inside each lifting step, which keeps every step
//! exactly invertible.

use crate::error::{Error, Result};

// CDF 9/7 lifting factorization constants. Correctness is established by the
// perfect-reconstruction tests, not by trusting the digits.
const ALPHA: f64 = -1.586_134_342_059_924;
const BETA: f64 = -0.052_980_118_572_961;
const GAMMA: f64 = 0.882_911_075_530_934;
const DELTA: f64 = 0.443_506_852_043_971;
const ZETA: f64 = 1.149_604_398_860_241_8;

/// Flat wavelet coefficient vector with its band layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    coeffs: Vec<f64>,
    levels: usize,
    band_bounds: Vec<(usize, usize)>,
}

impl WaveletCoeffs {
    /// Wrap an existing flat coefficient vector, validating the layout.
    pub fn from_flat(coeffs: Vec<f64>, levels: usize) -> Result<Self> {
        let band_bounds = band_layout(coeffs.len(), levels)?;
        Ok(Self {
            coeffs,
            levels,
            band_bounds,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `(offset, length)` per band, ordered coarse to fine.
    pub fn band_bounds(&self) -> &[(usize, usize)] {
        &self.band_bounds
    }
}

/// Compute the coarse-first band layout for a length-`n` vector at `levels`.
pub fn band_layout(n: usize, levels: usize) -> Result<Vec<(usize, usize)>> {
    if levels == 0 {
        return Err(Error::InvalidParam("levels must be >= 1".into()));
    }
    if n == 0 || !n.is_multiple_of(1 << levels) {
        return Err(Error::NotDivisible { n, levels });
    }
    let mut bounds = Vec::with_capacity(levels + 1);
    bounds.push((0, n >> levels));
    for level in (1..=levels).rev() {
        bounds.push((n >> level, n >> level));
    }
    Ok(bounds)
}

/// Forward multi-level transform. `samples.len()` must be divisible by
/// `2^levels`; pad with [`pad_to_multiple`] otherwise.
pub fn forward(samples: &[f64], levels: usize) -> Result<WaveletCoeffs> {
    let n = samples.len();
    let band_bounds = band_layout(n, levels)?;
    let mut out = vec![0.0; n];
    let mut current = samples.to_vec();
    for _ in 0..levels {
        let (approx, detail) = analyze_level(&current);
        out[detail.len()..2 * detail.len()].copy_from_slice(&detail);
        current = approx;
    }
    out[..current.len()].copy_from_slice(&current);
    Ok(WaveletCoeffs {
        coeffs: out,
        levels,
        band_bounds,
    })
}

/// Inverse transform; exact inverse of [`forward`] up to floating round-off.
pub fn inverse(w: &WaveletCoeffs) -> Result<Vec<f64>> {
    let expected = band_layout(w.coeffs.len(), w.levels)?;
    if expected != w.band_bounds {
        return Err(Error::BandLayout(format!(
            "bounds {:?} do not match a {}-level layout of length {}",
            w.band_bounds,
            w.levels,
            w.coeffs.len()
        )));
    }
    let (off, len) = w.band_bounds[0];
    let mut current = w.coeffs[off..off + len].to_vec();
    for &(off, len) in &w.band_bounds[1..] {
        current = synthesize_level(&current, &w.coeffs[off..off + len]);
    }
    Ok(current)
}

/// Pad with tail whole-point reflection to the next multiple of `2^levels`.
/// Returns the padded samples and the original length.
pub fn pad_to_multiple(samples: &[f64], levels: usize) -> (Vec<f64>, usize) {
    let n = samples.len();
    let block = 1usize << levels;
    let target = n.div_ceil(block) * block;
    let mut padded = samples.to_vec();
    for p in n..target {
        padded.push(samples[mirror_index(p as isize, n)]);
    }
    (padded, n)
}

/// Whole-point symmetric index fold: ..., x2, x1, | x0 .. x(n-1) |, x(n-2), ...
fn mirror_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let i = i.rem_euclid(period);
    if i < n as isize {
        i as usize
    } else {
        (period - i) as usize
    }
}

/// One analysis split: even/odd deinterleave, four lifting steps, scaling.
fn analyze_level(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(x.len() >= 2 && x.len().is_multiple_of(2));
    let half = x.len() / 2;
    let mut approx: Vec<f64> = (0..half).map(|i| x[2 * i]).collect();
    let mut detail: Vec<f64> = (0..half).map(|i| x[2 * i + 1]).collect();
    predict(&mut detail, &approx, ALPHA);
    update(&mut approx, &detail, BETA);
    predict(&mut detail, &approx, GAMMA);
    update(&mut approx, &detail, DELTA);
    for a in &mut approx {
        *a *= ZETA;
    }
    for d in &mut detail {
        *d /= ZETA;
    }
    (approx, detail)
}

/// One synthesis merge: undoes [`analyze_level`] step by step in reverse.
fn synthesize_level(approx: &[f64], detail: &[f64]) -> Vec<f64> {
    debug_assert_eq!(approx.len(), detail.len());
    let half = approx.len();
    let mut approx: Vec<f64> = approx.iter().map(|a| a / ZETA).collect();
    let mut detail: Vec<f64> = detail.iter().map(|d| d * ZETA).collect();
    update(&mut approx, &detail, -DELTA);
    predict(&mut detail, &approx, -GAMMA);
    update(&mut approx, &detail, -BETA);
    predict(&mut detail, &approx, -ALPHA);
    let mut x = vec![0.0; 2 * half];
    for i in 0..half {
        x[2 * i] = approx[i];
        x[2 * i + 1] = detail[i];
    }
    x
}

/// d[i] += c * (s[i] + s[i+1]); the right edge folds s[half] to s[half-1].
fn predict(detail: &mut [f64], approx: &[f64], c: f64) {
    let half = approx.len();
    for i in 0..half {
        let right = approx[(i + 1).min(half - 1)];
        detail[i] += c * (approx[i] + right);
    }
}

/// s[i] += c * (d[i-1] + d[i]); the left edge folds d[-1] to d[0].
fn update(approx: &mut [f64], detail: &[f64], c: f64) {
    for i in 0..approx.len() {
        let left = detail[i.saturating_sub(1)];
        approx[i] += c * (detail[i] + left);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn constant_signal_has_vanishing_details() {
        let c = 123.456;
        let signal = vec![c; 256];
        for lv in 1..=5 {
            let w = forward(&signal, lv).unwrap();
            let approx_len = w.band_bounds()[0].1;
            let details = &w.coeffs()[approx_len..];
            assert!(
                max_abs(details) < 1e-9 * c.abs(),
                "lv={lv}: detail magnitude {}",
                max_abs(details)
            );
        }
    }

    #[test]
    fn approx_band_carries_sqrt2_gain_per_level() {
        // pins the standard cdf97 normalization: quantizer steps are only
        // comparable across implementations if the scale convention matches
        let c = 100.0;
        for lv in 1..=4usize {
            let w = forward(&vec![c; 256], lv).unwrap();
            let approx = &w.coeffs()[..256 >> lv];
            let expected = c * 2.0f64.powf(lv as f64 / 2.0);
            for a in approx {
                assert!(
                    (a - expected).abs() < 1e-6 * expected,
                    "lv={lv}: approx {a}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn transform_is_nearly_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = forward(&x, 4).unwrap();
        let ratio = w.coeffs().iter().map(|v| v * v).sum::<f64>()
            / x.iter().map(|v| v * v).sum::<f64>();
        assert!((0.9..=1.1).contains(&ratio), "energy ratio {ratio}");
    }

    #[test]
    fn roundtrip_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for &n in &[16usize, 256, 4096] {
            for lv in 1..=4usize {
                if n % (1 << lv) != 0 {
                    continue;
                }
                let signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-2048.0..2048.0)).collect();
                let w = forward(&signal, lv).unwrap();
                let back = inverse(&w).unwrap();
                let err: f64 = signal
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err <= 1e-9 * max_abs(&signal), "n={n} lv={lv} err={err}");
            }
        }
    }

    #[test]
    fn synthesis_then_analysis_restores_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let coeffs: Vec<f64> = (0..512).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let w = WaveletCoeffs::from_flat(coeffs.clone(), 3).unwrap();
        let signal = inverse(&w).unwrap();
        let back = forward(&signal, 3).unwrap();
        let scale = max_abs(&coeffs);
        for (a, b) in coeffs.iter().zip(back.coeffs()) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn band_lengths_for_mitbih_record() {
        let w = forward(&vec![0.0; 650000], 4).unwrap();
        let lengths: Vec<usize> = w.band_bounds().iter().map(|&(_, l)| l).collect();
        assert_eq!(lengths, vec![40625, 40625, 81250, 162500, 325000]);
    }

    #[test]
    fn forward_rejects_non_divisible_length() {
        assert!(matches!(
            forward(&[1.0; 6], 2),
            Err(Error::NotDivisible { n: 6, levels: 2 })
        ));
    }

    #[test]
    fn zero_coeffs_invert_to_zero_signal() {
        let w = WaveletCoeffs::from_flat(vec![0.0; 64], 3).unwrap();
        let s = inverse(&w).unwrap();
        assert_eq!(s, vec![0.0; 64]);
    }

    #[test]
    fn approx_impulse_has_energy() {
        let mut coeffs = vec![0.0; 64];
        coeffs[2] = 1.0; // inside the approx band at lv=3
        let w = WaveletCoeffs::from_flat(coeffs, 3).unwrap();
        let s = inverse(&w).unwrap();
        assert!(s.iter().map(|v| v * v).sum::<f64>() > 0.0);
    }

    #[test]
    fn inverse_rejects_inconsistent_bounds() {
        let mut w = WaveletCoeffs::from_flat(vec![0.0; 16], 2).unwrap();
        w.band_bounds[1] = (7, 3);
        assert!(matches!(inverse(&w), Err(Error::BandLayout(_))));
    }

    #[test]
    fn transform_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (2.5, -0.75);
        let combined: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let wx = forward(&x, 3).unwrap();
        let wy = forward(&y, 3).unwrap();
        let wc = forward(&combined, 3).unwrap();
        let scale = max_abs(wc.coeffs());
        for i in 0..128 {
            let expect = a * wx.coeffs()[i] + b * wy.coeffs()[i];
            assert!((wc.coeffs()[i] - expect).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn details_annihilate_cubics_away_from_boundaries() {
        let n = 256;
        let signal: Vec<f64> = (0..n).map(|t| (t as f64).powi(3)).collect();
        let w = forward(&signal, 1).unwrap();
        let detail = &w.coeffs()[n / 2..];
        let signal_norm = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
        let interior = &detail[4..detail.len() - 4];
        assert!(max_abs(interior) <= 1e-6 * signal_norm);
    }

    #[test]
    fn pad_leaves_divisible_lengths_alone() {
        let s: Vec<f64> = (0..650000).map(|i| i as f64).collect();
        let (padded, orig) = pad_to_multiple(&s, 4);
        assert_eq!(orig, 650000);
        assert_eq!(padded.len(), 650000);
    }

    #[test]
    fn pad_reflects_tail() {
        let s = [10.0, 20.0, 30.0, 40.0, 50.0];
        let (padded, orig) = pad_to_multiple(&s, 2);
        assert_eq!(orig, 5);
        assert_eq!(padded, vec![10.0, 20.0, 30.0, 40.0, 50.0, 40.0, 30.0, 20.0]);
    }

    #[test]
    fn pad_single_sample_duplicates() {
        let (padded, orig) = pad_to_multiple(&[7.0], 1);
        assert_eq!((padded, orig), (vec![7.0, 7.0], 1));
    }
}
