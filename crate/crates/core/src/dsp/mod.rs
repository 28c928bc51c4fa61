//! Level metering core: A-weighted LAeq from sample blocks plus the dB
//! arithmetic shared by the analysis pipeline.

pub mod aweight;
pub mod biquad;
pub mod level;
pub mod meter;

pub use aweight::{a_weight_gain_db, design_a_weighting_filter, AWeightingFilter, OCTAVE_CENTERS};
pub use level::{energetic_mean_db, max_level_entries, max_level_in_interval, LevelSeries};
pub use meter::{laeq_window, LaeqMeter, MeterConfig};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::real::Real;

/// Default clamp for windows that measure below any plausible signal.
pub const DEFAULT_SILENCE_FLOOR_DB: f64 = 20.0;

/// Default integration window, seconds.
pub const DEFAULT_WINDOW_SECONDS: f64 = 3.0;

#[derive(Debug, Error)]
pub enum DspError {
    #[error("frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("sample rate {0} Hz is below the supported minimum of 8000 Hz")]
    UnsupportedRate(u32),
    #[error("invalid sample block: {0}")]
    InvalidBlock(String),
    #[error("calibration out of range: fullscale_spl_db = {0}, expected a finite value in [60, 140]")]
    InvalidCalibration(f64),
    #[error("invalid level series: {0}")]
    InvalidSeries(String),
    #[error("empty period: no levels to aggregate")]
    EmptyPeriod,
    #[error("no entries in interval [{0}, {1})")]
    EmptyInterval(DateTime<Utc>, DateTime<Utc>),
    #[error("window of {window_seconds} s exceeds block duration of {block_seconds} s")]
    WindowExceedsBlock {
        window_seconds: f64,
        block_seconds: f64,
    },
    #[error("window length must be positive, got {0} s")]
    InvalidWindow(f64),
}

/// A transient block of audio samples.
///
/// This is the only type in the crate that holds raw audio. It never
/// crosses a serialization boundary: records carry derived metrics only.
#[derive(Debug, Clone)]
pub struct SampleBlock<R: Real> {
    samples: Vec<R>,
    sample_rate: u32,
    start_time: DateTime<Utc>,
}

impl<R: Real> SampleBlock<R> {
    pub fn new(
        samples: Vec<R>,
        sample_rate: u32,
        start_time: DateTime<Utc>,
    ) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::InvalidBlock("sample_rate must be > 0".into()));
        }
        if samples.is_empty() {
            return Err(DspError::InvalidBlock("no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(DspError::InvalidBlock(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            start_time,
        })
    }

    pub fn samples(&self) -> &[R] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn start_time(&self) -> DateTime<Utc> {
        self.start_time
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Maps full-scale digital amplitude to sound pressure level.
///
/// A signal with RMS amplitude 1.0 measures exactly `fullscale_spl_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConfig {
    pub fullscale_spl_db: f64,
}

impl CalibrationConfig {
    pub fn new(fullscale_spl_db: f64) -> Result<Self, DspError> {
        if !fullscale_spl_db.is_finite() || !(60.0..=140.0).contains(&fullscale_spl_db) {
            return Err(DspError::InvalidCalibration(fullscale_spl_db));
        }
        Ok(Self { fullscale_spl_db })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn block_invariants() {
        let t = Utc.with_ymd_and_hms(2025, 7, 6, 0, 0, 0).unwrap();
        assert!(SampleBlock::new(vec![0.0_f64; 8], 48_000, t).is_ok());
        assert!(SampleBlock::new(Vec::<f64>::new(), 48_000, t).is_err());
        assert!(SampleBlock::new(vec![0.0_f64], 0, t).is_err());
        assert!(SampleBlock::new(vec![f64::NAN], 48_000, t).is_err());
    }

    #[test]
    fn calibration_bounds() {
        assert!(CalibrationConfig::new(94.0).is_ok());
        assert!(CalibrationConfig::new(59.9).is_err());
        assert!(CalibrationConfig::new(140.1).is_err());
        assert!(CalibrationConfig::new(f64::INFINITY).is_err());
    }
}
