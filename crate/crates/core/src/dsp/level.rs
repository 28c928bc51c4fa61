//! dB level arithmetic: energetic averaging and peak lookup.

use chrono::{DateTime, Duration, Utc};

use super::DspError;
use crate::real::Real;

/// Energetic (power-domain) mean of dB levels:
/// `10 * log10(mean(10^(L/10)))`.
///
/// This is the correct way to average equivalent continuous levels; the
/// arithmetic mean of dB values understates any non-constant sequence.
pub fn energetic_mean_db<R: Real>(levels: &[R]) -> Result<R, DspError> {
    if levels.is_empty() {
        return Err(DspError::EmptyPeriod);
    }
    let ten = R::from_f64_c(10.0);
    let mut sum = R::zero();
    for &l in levels {
        if !l.is_finite() {
            return Err(DspError::InvalidSeries(format!("non-finite level {l}")));
        }
        sum += ten.powf(l / ten);
    }
    let mean = sum / R::from_f64_c(levels.len() as f64);
    Ok(ten * mean.log10())
}

/// An ordered series of integrated levels at a fixed cadence.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSeries {
    entries: Vec<(DateTime<Utc>, f64)>,
    integration_seconds: f64,
}

impl LevelSeries {
    /// Validates ordering, spacing and finiteness.
    pub fn new(
        entries: Vec<(DateTime<Utc>, f64)>,
        integration_seconds: f64,
    ) -> Result<Self, DspError> {
        if integration_seconds <= 0.0 || !integration_seconds.is_finite() {
            return Err(DspError::InvalidWindow(integration_seconds));
        }
        let step = Duration::microseconds((integration_seconds * 1e6).round() as i64);
        for (i, (ts, level)) in entries.iter().enumerate() {
            if !level.is_finite() {
                return Err(DspError::InvalidSeries(format!(
                    "non-finite level at entry {i}"
                )));
            }
            if i > 0 {
                let prev = entries[i - 1].0;
                if *ts != prev + step {
                    return Err(DspError::InvalidSeries(format!(
                        "entry {i} at {ts} is not {integration_seconds} s after {prev}"
                    )));
                }
            }
        }
        Ok(Self {
            entries,
            integration_seconds,
        })
    }

    pub fn entries(&self) -> &[(DateTime<Utc>, f64)] {
        &self.entries
    }

    pub fn integration_seconds(&self) -> f64 {
        self.integration_seconds
    }
}

/// Maximum level with timestamp in `[t0, t1)`; ties go to the earliest entry.
pub fn max_level_in_interval(
    series: &LevelSeries,
    t0: DateTime<Utc>,
    t1: DateTime<Utc>,
) -> Result<(f64, DateTime<Utc>), DspError> {
    max_level_entries(&series.entries, t0, t1)
}

/// [`max_level_in_interval`] over bare `(timestamp, level)` pairs; used
/// where the entries come from storage and may have holes.
pub fn max_level_entries(
    entries: &[(DateTime<Utc>, f64)],
    t0: DateTime<Utc>,
    t1: DateTime<Utc>,
) -> Result<(f64, DateTime<Utc>), DspError> {
    if t0 >= t1 {
        return Err(DspError::InvalidSeries(format!(
            "interval start {t0} is not before end {t1}"
        )));
    }
    let mut best: Option<(f64, DateTime<Utc>)> = None;
    for &(ts, level) in entries {
        if ts < t0 || ts >= t1 {
            continue;
        }
        let better = match best {
            Some((b_level, b_ts)) => level > b_level || (level == b_level && ts < b_ts),
            None => true,
        };
        if better {
            best = Some((level, ts));
        }
    }
    best.ok_or(DspError::EmptyInterval(t0, t1))
}
