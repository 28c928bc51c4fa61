//! Window feature extraction feeding the perceptual estimators.
//!
//! Features are computed over one analysis window from the A-weighted
//! signal: total level, short-term level variability over 125 ms
//! sub-windows, sub-window level jumps, and the energy split across three
//! frequency bands. The nominal mid band is 300-3400 Hz and the high band
//! 2-8 kHz; the high band is integrated from the mid band's upper edge so
//! the three ratios stay disjoint and sum to at most one.

use thiserror::Error;

use crate::dsp::biquad::Biquad;
use crate::dsp::{design_a_weighting_filter, CalibrationConfig, DspError, SampleBlock};
use crate::real::Real;

/// Nominal band edges, Hz.
pub const LOW_BAND_HZ: (f64, f64) = (20.0, 200.0);
pub const MID_BAND_HZ: (f64, f64) = (300.0, 3400.0);
pub const HIGH_BAND_HZ: (f64, f64) = (3400.0, 8000.0);

/// Sub-window length for the fast level track.
pub const SUB_WINDOW_SECONDS: f64 = 0.125;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("block of {0:.3} s is shorter than one {SUB_WINDOW_SECONDS} s sub-window")]
    BlockTooShort(f64),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Extraction knobs; defaults match the documented baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    /// Sub-window level jump that counts as an onset, dB.
    pub onset_jump_db: f64,
    /// Clamp for sub-window and window levels, dB.
    pub silence_floor_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            onset_jump_db: 6.0,
            silence_floor_db: crate::dsp::DEFAULT_SILENCE_FLOOR_DB,
        }
    }
}

/// Fractions of total A-weighted energy per band, each in [0, 1],
/// summing to at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BandRatios {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

/// Deterministic features of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeatures {
    pub laeq_db: f64,
    /// Standard deviation of the 125 ms sub-window levels, dB.
    pub fast_level_std_db: f64,
    /// Number of sub-window level jumps above the onset threshold.
    pub onset_count: u32,
    pub bands: BandRatios,
}

pub fn extract_features<R: Real>(
    block: &SampleBlock<R>,
    cal: CalibrationConfig,
) -> Result<WindowFeatures, FeatureError> {
    extract_features_with(block, cal, &FeatureConfig::default())
}

pub fn extract_features_with<R: Real>(
    block: &SampleBlock<R>,
    cal: CalibrationConfig,
    cfg: &FeatureConfig,
) -> Result<WindowFeatures, FeatureError> {
    let sr = block.sample_rate();
    let sub_len = (SUB_WINDOW_SECONDS * f64::from(sr)).round() as usize;
    if block.samples().len() < sub_len || sub_len == 0 {
        return Err(FeatureError::BlockTooShort(block.duration_seconds()));
    }

    let mut aw = design_a_weighting_filter::<R>(sr)?;
    let weighted: Vec<R> = block.samples().iter().map(|&x| aw.process(x)).collect();

    // fast level track over non-overlapping sub-windows
    let n_sub = weighted.len() / sub_len;
    let mut sub_levels = Vec::with_capacity(n_sub);
    let mut total_energy = 0.0_f64;
    for w in weighted.chunks_exact(sub_len) {
        let e: f64 = w.iter().map(|&y| (y * y).as_f64()).sum();
        total_energy += e;
        let mean_sq = e / sub_len as f64;
        let level = if mean_sq > 0.0 {
            (cal.fullscale_spl_db + 10.0 * mean_sq.log10()).max(cfg.silence_floor_db)
        } else {
            cfg.silence_floor_db
        };
        sub_levels.push(level);
    }
    // trailing partial sub-window still contributes energy
    for &y in &weighted[n_sub * sub_len..] {
        total_energy += (y * y).as_f64();
    }

    let mean_level = sub_levels.iter().sum::<f64>() / sub_levels.len() as f64;
    let var = sub_levels
        .iter()
        .map(|l| (l - mean_level).powi(2))
        .sum::<f64>()
        / sub_levels.len() as f64;
    let onset_count = sub_levels
        .windows(2)
        .filter(|p| p[1] - p[0] > cfg.onset_jump_db)
        .count() as u32;

    let mean_sq = total_energy / weighted.len() as f64;
    let laeq_db = if mean_sq > 0.0 {
        (cal.fullscale_spl_db + 10.0 * mean_sq.log10()).max(cfg.silence_floor_db)
    } else {
        cfg.silence_floor_db
    };

    let bands = band_ratios(&weighted, sr, total_energy);

    Ok(WindowFeatures {
        laeq_db,
        fast_level_std_db: var.sqrt(),
        onset_count,
        bands,
    })
}

fn band_energy<R: Real>(weighted: &[R], sr: u32, lo: f64, hi: f64) -> f64 {
    // keep band edges clear of Nyquist at low sample rates
    let hi = hi.min(0.45 * f64::from(sr));
    if hi <= lo {
        return 0.0;
    }
    let mut bp: Biquad<R> = Biquad::bandpass(sr, lo, hi);
    weighted
        .iter()
        .map(|&x| {
            let y = bp.process(x);
            (y * y).as_f64()
        })
        .sum()
}

fn band_ratios<R: Real>(weighted: &[R], sr: u32, total_energy: f64) -> BandRatios {
    if total_energy <= 0.0 {
        return BandRatios::default();
    }
    let mut r = BandRatios {
        low: band_energy(weighted, sr, LOW_BAND_HZ.0, LOW_BAND_HZ.1) / total_energy,
        mid: band_energy(weighted, sr, MID_BAND_HZ.0, MID_BAND_HZ.1) / total_energy,
        high: band_energy(weighted, sr, HIGH_BAND_HZ.0, HIGH_BAND_HZ.1) / total_energy,
    };
    r.low = r.low.clamp(0.0, 1.0);
    r.mid = r.mid.clamp(0.0, 1.0);
    r.high = r.high.clamp(0.0, 1.0);
    let sum = r.low + r.mid + r.high;
    if sum > 1.0 {
        r.low /= sum;
        r.mid /= sum;
        r.high /= sum;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn block(samples: Vec<f64>, sr: u32) -> SampleBlock<f64> {
        SampleBlock::new(samples, sr, Utc.with_ymd_and_hms(2025, 7, 6, 12, 0, 0).unwrap())
            .unwrap()
    }

    fn cal() -> CalibrationConfig {
        CalibrationConfig::new(94.0).unwrap()
    }

    // deterministic phase/frequency scrambling for band-limited noise
    fn noise_in_band(lo: f64, hi: f64, seconds: f64, sr: u32, seed: u64) -> Vec<f64> {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        };
        let n = (seconds * f64::from(sr)) as usize;
        let tones: Vec<(f64, f64)> = (0..40)
            .map(|_| (lo + (hi - lo) * next(), 2.0 * std::f64::consts::PI * next()))
            .collect();
        (0..n)
            .map(|i| {
                let t = i as f64 / f64::from(sr);
                tones
                    .iter()
                    .map(|&(f, p)| (2.0 * std::f64::consts::PI * f * t + p).sin())
                    .sum::<f64>()
                    * 0.02
            })
            .collect()
    }

    #[test]
    fn stationary_sine_has_flat_fast_track() {
        let sr = 48_000;
        let w = 2.0 * std::f64::consts::PI * 1000.0 / f64::from(sr);
        let samples = (0..3 * sr as usize).map(|i| 0.4 * (w * i as f64).sin()).collect();
        let f = extract_features(&block(samples, sr), cal()).unwrap();
        assert!(f.fast_level_std_db < 0.5, "std {}", f.fast_level_std_db);
        assert_eq!(f.onset_count, 0);
        assert!(f.bands.mid > 0.9, "mid {}", f.bands.mid);
    }

    #[test]
    fn silence_tone_alternation_produces_onsets() {
        let sr = 16_000_u32;
        let w = 2.0 * std::f64::consts::PI * 1000.0 / f64::from(sr);
        let mut samples = vec![0.0; sr as usize];
        samples.extend((0..sr as usize).map(|i| 0.5 * (w * i as f64).sin()));
        samples.extend(vec![0.0; sr as usize]);
        let f = extract_features(&block(samples, sr), cal()).unwrap();
        assert!(f.onset_count >= 1, "onsets {}", f.onset_count);
    }

    #[test]
    fn low_band_noise_lands_in_low_ratio() {
        let sr = 48_000;
        let samples = noise_in_band(70.0, 140.0, 3.0, sr, 7);
        let f = extract_features(&block(samples, sr), cal()).unwrap();
        assert!(f.bands.low > 0.8, "low {}", f.bands.low);
        assert!(f.bands.high < 0.05, "high {}", f.bands.high);
    }

    #[test]
    fn ratios_sum_below_one_on_wideband_noise() {
        let sr = 48_000;
        let samples = noise_in_band(30.0, 9000.0, 3.0, sr, 11);
        let f = extract_features(&block(samples, sr), cal()).unwrap();
        let sum = f.bands.low + f.bands.mid + f.bands.high;
        assert!(sum <= 1.0 + 1e-9, "sum {sum}");
        assert!(f.bands.low >= 0.0 && f.bands.mid >= 0.0 && f.bands.high >= 0.0);
    }

    #[test]
    fn short_block_is_rejected() {
        let samples = vec![0.1; 100];
        assert!(matches!(
            extract_features(&block(samples, 48_000), cal()),
            Err(FeatureError::BlockTooShort(_))
        ));
    }
}
