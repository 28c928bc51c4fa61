//! Perceptual and source-activity estimators.
//!
//! The trained models that normally run on the sensor are out of scope
//! here; the baseline estimator below is a documented deterministic
//! stand-in so the whole pipeline stays testable end to end. Anything
//! implementing [`Estimator`] can be plugged in, and the node validates
//! every output against the declared ranges before it becomes a record.

use thiserror::Error;

use crate::features::WindowFeatures;

/// ISO-12913-style perceptual pair, both axes in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptualPair {
    pleasantness: f64,
    eventfulness: f64,
}

/// Per-source activity scores, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceScores {
    birds: f64,
    human: f64,
    vehicles: f64,
    music: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("{field} out of range: {value}")]
    OutOfRange { field: &'static str, value: f64 },
}

fn check_range(field: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64, EstimateError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(value)
    } else {
        Err(EstimateError::OutOfRange { field, value })
    }
}

impl PerceptualPair {
    pub fn new(pleasantness: f64, eventfulness: f64) -> Result<Self, EstimateError> {
        Ok(Self {
            pleasantness: check_range("pleasantness", pleasantness, -1.0, 1.0)?,
            eventfulness: check_range("eventfulness", eventfulness, -1.0, 1.0)?,
        })
    }

    pub fn pleasantness(&self) -> f64 {
        self.pleasantness
    }

    pub fn eventfulness(&self) -> f64 {
        self.eventfulness
    }
}

impl SourceScores {
    pub fn new(birds: f64, human: f64, vehicles: f64, music: f64) -> Result<Self, EstimateError> {
        Ok(Self {
            birds: check_range("birds", birds, 0.0, 1.0)?,
            human: check_range("human", human, 0.0, 1.0)?,
            vehicles: check_range("vehicles", vehicles, 0.0, 1.0)?,
            music: check_range("music", music, 0.0, 1.0)?,
        })
    }

    pub fn zero() -> Self {
        Self {
            birds: 0.0,
            human: 0.0,
            vehicles: 0.0,
            music: 0.0,
        }
    }

    pub fn birds(&self) -> f64 {
        self.birds
    }

    pub fn human(&self) -> f64 {
        self.human
    }

    pub fn vehicles(&self) -> f64 {
        self.vehicles
    }

    pub fn music(&self) -> f64 {
        self.music
    }
}

/// Unvalidated estimator output; the pipeline turns it into the checked
/// domain types via [`validate_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEstimate {
    pub pleasantness: f64,
    pub eventfulness: f64,
    pub birds: f64,
    pub human: f64,
    pub vehicles: f64,
    pub music: f64,
}

/// Rejects any estimate outside the declared ranges.
pub fn validate_estimate(raw: RawEstimate) -> Result<(PerceptualPair, SourceScores), EstimateError> {
    Ok((
        PerceptualPair::new(raw.pleasantness, raw.eventfulness)?,
        SourceScores::new(raw.birds, raw.human, raw.vehicles, raw.music)?,
    ))
}

/// A pluggable window-level estimator.
pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, features: &WindowFeatures) -> RawEstimate;
}

/// Tuning constants of the baseline heuristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Level at which pleasantness starts dropping from 1, dB.
    pub pleasant_ref_db: f64,
    /// Level span over which pleasantness falls by the full 2.0, dB.
    pub pleasant_span_db: f64,
    /// Bonus applied when the high band dominates (bird-like content).
    pub high_band_bonus: f64,
    /// Silence floor; a window at the floor scores zero on every source.
    pub silence_floor_db: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            pleasant_ref_db: 40.0,
            pleasant_span_db: 50.0,
            high_band_bonus: 0.2,
            silence_floor_db: crate::dsp::DEFAULT_SILENCE_FLOOR_DB,
        }
    }
}

/// Deterministic heuristic estimator.
#[derive(Debug, Clone, Default)]
pub struct BaselineEstimator {
    pub config: BaselineConfig,
}

impl Estimator for BaselineEstimator {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn estimate(&self, f: &WindowFeatures) -> RawEstimate {
        let c = &self.config;
        let eventfulness =
            (-1.0 + 2.0 * (f.fast_level_std_db / 6.0 + f64::from(f.onset_count) / 8.0).min(1.0))
                .clamp(-1.0, 1.0);
        let mut pleasantness =
            (1.0 - 2.0 * (f.laeq_db - c.pleasant_ref_db) / c.pleasant_span_db).clamp(-1.0, 1.0);
        if f.bands.high > 0.5 {
            pleasantness = (pleasantness + c.high_band_bonus).clamp(-1.0, 1.0);
        }

        let silent = f.laeq_db <= c.silence_floor_db + 1e-9;
        let (birds, human, vehicles, music) = if silent {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            (
                f.bands.high.clamp(0.0, 1.0),
                f.bands.mid.clamp(0.0, 1.0),
                f.bands.low.clamp(0.0, 1.0),
                ((f64::from(f.onset_count) / 6.0).min(1.0) * (f.bands.mid + f.bands.high))
                    .clamp(0.0, 1.0),
            )
        };

        RawEstimate {
            pleasantness,
            eventfulness,
            birds,
            human,
            vehicles,
            music,
        }
    }
}

/// Looks up an estimator by its configured name. `injected` is not a
/// computing estimator: in that mode the node passes scores through from
/// the metric feed, so it has no entry here.
pub fn estimator_by_name(name: &str) -> Option<Box<dyn Estimator>> {
    match name {
        "baseline" => Some(Box::new(BaselineEstimator::default())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::BandRatios;

    fn features(laeq: f64, std: f64, onsets: u32, high: f64) -> WindowFeatures {
        WindowFeatures {
            laeq_db: laeq,
            fast_level_std_db: std,
            onset_count: onsets,
            bands: BandRatios {
                low: 0.0,
                mid: 0.0,
                high,
            },
        }
    }

    #[test]
    fn quiet_stationary_scene_is_pleasant_and_uneventful() {
        let e = BaselineEstimator::default().estimate(&features(40.0, 0.0, 0, 0.0));
        assert_eq!(e.pleasantness, 1.0);
        assert_eq!(e.eventfulness, -1.0);
    }

    #[test]
    fn loud_stationary_scene_is_unpleasant() {
        let e = BaselineEstimator::default().estimate(&features(90.0, 0.0, 0, 0.0));
        assert_eq!(e.pleasantness, -1.0);
        assert_eq!(e.eventfulness, -1.0);
    }

    #[test]
    fn mixed_scene_hits_formula_midpoints() {
        // laeq 65, std 3, onsets 4, high 0 -> pleasantness 0, eventfulness 1
        let e = BaselineEstimator::default().estimate(&features(65.0, 3.0, 4, 0.0));
        assert!((e.pleasantness - 0.0).abs() < 1e-12, "{}", e.pleasantness);
        assert!((e.eventfulness - 1.0).abs() < 1e-12, "{}", e.eventfulness);
    }

    #[test]
    fn silence_forces_all_sources_to_zero() {
        let mut f = features(crate::dsp::DEFAULT_SILENCE_FLOOR_DB, 0.0, 3, 0.9);
        f.bands.low = 0.5;
        f.bands.mid = 0.3;
        let e = BaselineEstimator::default().estimate(&f);
        assert_eq!((e.birds, e.human, e.vehicles, e.music), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn pleasantness_never_increases_with_level() {
        let est = BaselineEstimator::default();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let laeq = 20.0 + f64::from(i) * 0.5;
            let e = est.estimate(&features(laeq, 1.0, 2, 0.0));
            assert!(e.pleasantness <= prev + 1e-12);
            prev = e.pleasantness;
        }
    }

    #[test]
    fn outputs_stay_in_range_for_arbitrary_features() {
        let est = BaselineEstimator::default();
        let mut state = 0xDEADBEEF_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..5000 {
            let f = WindowFeatures {
                laeq_db: next() * 200.0 - 50.0,
                fast_level_std_db: next() * 40.0,
                onset_count: (next() * 50.0) as u32,
                bands: BandRatios {
                    low: next(),
                    mid: next(),
                    high: next(),
                },
            };
            let e = est.estimate(&f);
            assert!(validate_estimate(e).is_ok(), "out of range for {f:?}: {e:?}");
            // determinism, bit for bit
            assert_eq!(e, est.estimate(&f));
        }
    }

    #[test]
    fn validation_rejects_out_of_range_outputs() {
        let raw = RawEstimate {
            pleasantness: 1.5,
            eventfulness: 0.0,
            birds: 0.0,
            human: 0.0,
            vehicles: 0.0,
            music: 0.0,
        };
        assert_eq!(
            validate_estimate(raw),
            Err(EstimateError::OutOfRange {
                field: "pleasantness",
                value: 1.5
            })
        );
    }

    #[test]
    fn registry_knows_baseline_only() {
        assert!(estimator_by_name("baseline").is_some());
        assert!(estimator_by_name("injected").is_none());
        assert!(estimator_by_name("nope").is_none());
    }
}
