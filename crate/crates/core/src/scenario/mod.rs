//! Synthetic multi-day acoustic scenarios.
//!
//! A scenario describes, per spot and local day, a sequence of segments
//! (base level, jitter, source mix, perception means) plus spikes and
//! music blocks. The generator turns that into either measurement
//! records on the 3 s grid (metric mode) or calibrated audio (audio
//! mode, for desk-scale runs only).
//!
//! Generation is deterministic: every record derives its randomness from
//! a SplitMix64 stream keyed by `(seed, sensor, date, second-of-day)`,
//! so streams are reproducible regardless of chunking or evaluation
//! order. The generator algorithm is part of the scenario file contract.

pub mod builtins;

pub use builtins::{builtin, builtin_scenarios, BUILTIN_NAMES};

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use chrono_tz::Tz;
use thiserror::Error;

use crate::dsp::{design_a_weighting_filter, AWeightingFilter};
use crate::estimator::{PerceptualPair, SourceScores};
use crate::record::{encode_record, MeasurementRecord, RecordError, SensorId};

/// Records per grid step, seconds.
pub const GRID_STEP_SECONDS: u32 = 3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("scenario parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("audio mode is desk-scale: day {date} covers {seconds} s, maximum is {max} s")]
    AudioTooLong {
        date: NaiveDate,
        seconds: u32,
        max: u32,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Estimate(#[from] crate::estimator::EstimateError),
    #[error(transparent)]
    Dsp(#[from] crate::dsp::DspError),
}

/// Mean source scores for a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceMix {
    pub birds: f64,
    pub human: f64,
    pub vehicles: f64,
    pub music: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentEvent {
    /// Adds `peak_db * exp(-dt / decay_seconds)` to the level from `at_sec` on.
    Spike {
        at_sec: u32,
        peak_db: f64,
        decay_seconds: f64,
    },
    /// Overrides the music score mean inside `[start_sec, end_sec)`.
    MusicBlock {
        start_sec: u32,
        end_sec: u32,
        music: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Local seconds of day, half-open `[start_sec, end_sec)`.
    pub start_sec: u32,
    pub end_sec: u32,
    pub base_level_db: f64,
    pub level_jitter_db: f64,
    pub mix: SourceMix,
    pub pleasantness: f64,
    pub eventfulness: f64,
    /// Uniform jitter applied to every score and perception mean.
    pub score_jitter: f64,
    pub events: Vec<SegmentEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayPlan {
    pub date: NaiveDate,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotPlan {
    pub spot_id: String,
    pub sensor_id: SensorId,
    /// Offset of the 3 s grid from local midnight, seconds.
    pub grid_offset_seconds: u32,
    pub days: Vec<DayPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub timezone: Tz,
    pub audio_sample_rate: u32,
    pub audio_fullscale_spl_db: f64,
    pub spots: Vec<SpotPlan>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.spots.is_empty() {
            return Err(ScenarioError::Invalid("scenario has no spots".into()));
        }
        for spot in &self.spots {
            if spot.grid_offset_seconds >= GRID_STEP_SECONDS {
                return Err(ScenarioError::Invalid(format!(
                    "spot {}: grid_offset_seconds must be < {GRID_STEP_SECONDS}",
                    spot.spot_id
                )));
            }
            for day in &spot.days {
                if day.segments.is_empty() {
                    return Err(ScenarioError::Invalid(format!(
                        "spot {} day {}: no segments",
                        spot.spot_id, day.date
                    )));
                }
                let mut prev_end: Option<u32> = None;
                for seg in &day.segments {
                    if seg.start_sec >= seg.end_sec || seg.end_sec > 86_400 {
                        return Err(ScenarioError::Invalid(format!(
                            "spot {} day {}: segment [{}, {}) out of order",
                            spot.spot_id, day.date, seg.start_sec, seg.end_sec
                        )));
                    }
                    if let Some(end) = prev_end {
                        if seg.start_sec != end {
                            return Err(ScenarioError::Invalid(format!(
                                "spot {} day {}: segments must tile without gap or overlap \
                                 (found boundary {} after {})",
                                spot.spot_id, day.date, seg.start_sec, end
                            )));
                        }
                    }
                    prev_end = Some(seg.end_sec);
                    if !seg.base_level_db.is_finite() || seg.level_jitter_db < 0.0 {
                        return Err(ScenarioError::Invalid(format!(
                            "spot {} day {}: bad level parameters",
                            spot.spot_id, day.date
                        )));
                    }
                    for (name, v) in [
                        ("birds", seg.mix.birds),
                        ("human", seg.mix.human),
                        ("vehicles", seg.mix.vehicles),
                        ("music", seg.mix.music),
                    ] {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(ScenarioError::Invalid(format!(
                                "{name} mean {v} outside [0, 1]"
                            )));
                        }
                    }
                    for (name, v) in
                        [("pleasantness", seg.pleasantness), ("eventfulness", seg.eventfulness)]
                    {
                        if !(-1.0..=1.0).contains(&v) {
                            return Err(ScenarioError::Invalid(format!(
                                "{name} mean {v} outside [-1, 1]"
                            )));
                        }
                    }
                    for ev in &seg.events {
                        match *ev {
                            SegmentEvent::Spike {
                                peak_db,
                                decay_seconds,
                                ..
                            } => {
                                if !peak_db.is_finite() || decay_seconds <= 0.0 {
                                    return Err(ScenarioError::Invalid(
                                        "spike needs finite peak and positive decay".into(),
                                    ));
                                }
                            }
                            SegmentEvent::MusicBlock {
                                start_sec,
                                end_sec,
                                music,
                            } => {
                                if start_sec >= end_sec || !(0.0..=1.0).contains(&music) {
                                    return Err(ScenarioError::Invalid(
                                        "music block needs start < end and music in [0, 1]".into(),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// --- deterministic generator core -----------------------------------------

/// SplitMix64; pinned as the scenario random generator.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1_u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    fn next_signed(&mut self) -> f64 {
        self.next_f64() * 2.0 - 1.0
    }
}

fn str_hash(s: &str) -> u64 {
    // FNV-1a, stable across platforms
    let mut h = 0xCBF2_9CE4_8422_2325_u64;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

fn record_rng(seed: u64, sensor: &SensorId, date: NaiveDate, sec: u32) -> SplitMix64 {
    let key = seed
        ^ str_hash(sensor.as_str()).rotate_left(17)
        ^ (date.num_days_from_ce() as u64) << 20
        ^ u64::from(sec);
    let mut rng = SplitMix64::new(key);
    rng.next_u64(); // decorrelate nearby keys
    SplitMix64::new(rng.next_u64())
}

/// Level, scores and perception the scenario prescribes at one instant.
#[derive(Debug, Clone, Copy)]
struct InstantTarget {
    level_db: f64,
    pleasantness: f64,
    eventfulness: f64,
    birds: f64,
    human: f64,
    vehicles: f64,
    music: f64,
}

fn instant_target(
    seed: u64,
    spot: &SpotPlan,
    day: &DayPlan,
    sec: u32,
) -> Option<InstantTarget> {
    let seg = day
        .segments
        .iter()
        .find(|s| sec >= s.start_sec && sec < s.end_sec)?;
    let mut rng = record_rng(seed, &spot.sensor_id, day.date, sec);

    let mut level = seg.base_level_db + seg.level_jitter_db * rng.next_signed();
    let mut music_mean = seg.mix.music;
    // spikes and music blocks act day-wide, whatever segment declared them
    for s in &day.segments {
        for ev in &s.events {
            match *ev {
                SegmentEvent::Spike {
                    at_sec,
                    peak_db,
                    decay_seconds,
                } => {
                    if sec >= at_sec {
                        let dt = f64::from(sec - at_sec);
                        level += peak_db * (-dt / decay_seconds).exp();
                    }
                }
                SegmentEvent::MusicBlock {
                    start_sec,
                    end_sec,
                    music,
                } => {
                    if sec >= start_sec && sec < end_sec {
                        music_mean = music;
                    }
                }
            }
        }
    }

    let j = seg.score_jitter;
    let mut jittered = |mean: f64, lo: f64| (mean + j * rng.next_signed()).clamp(lo, 1.0);
    Some(InstantTarget {
        level_db: level,
        pleasantness: jittered(seg.pleasantness, -1.0),
        eventfulness: jittered(seg.eventfulness, -1.0),
        birds: jittered(seg.mix.birds, 0.0),
        human: jittered(seg.mix.human, 0.0),
        vehicles: jittered(seg.mix.vehicles, 0.0),
        music: jittered(music_mean, 0.0),
    })
}

fn local_to_utc(tz: Tz, date: NaiveDate, sec: u32) -> Option<DateTime<Utc>> {
    let naive = date.and_hms_opt(sec / 3600, (sec / 60) % 60, sec % 60)?;
    tz.from_local_datetime(&naive)
        .earliest()
        .map(|t| t.with_timezone(&Utc))
}

/// One sensor's records for one scenario spot, in timestamp order.
pub fn generate_spot_records(
    cfg: &ScenarioConfig,
    spot: &SpotPlan,
    seed: u64,
) -> Result<Vec<MeasurementRecord>, ScenarioError> {
    let mut out = Vec::new();
    for day in &spot.days {
        let first = spot.grid_offset_seconds
            + day.segments[0].start_sec.div_ceil(GRID_STEP_SECONDS) * GRID_STEP_SECONDS;
        let mut sec = first;
        while sec < day.segments.last().expect("validated").end_sec {
            if let Some(t) = instant_target(seed, spot, day, sec) {
                if let Some(ts) = local_to_utc(cfg.timezone, day.date, sec) {
                    out.push(MeasurementRecord::new(
                        spot.sensor_id.clone(),
                        ts,
                        t.level_db,
                        PerceptualPair::new(t.pleasantness, t.eventfulness)?,
                        SourceScores::new(t.birds, t.human, t.vehicles, t.music)?,
                    )?);
                }
            }
            sec += GRID_STEP_SECONDS;
        }
    }
    Ok(out)
}

/// All sensors' records, keyed in config order.
pub fn generate_metric_stream(
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<Vec<(SensorId, Vec<MeasurementRecord>)>, ScenarioError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for spot in &cfg.spots {
        out.push((
            spot.sensor_id.clone(),
            generate_spot_records(cfg, spot, seed)?,
        ));
    }
    Ok(out)
}

/// Hard cap for audio generation per day, seconds.
pub const AUDIO_MAX_SECONDS_PER_DAY: u32 = 3600;

/// One day of calibrated audio for one spot: the stream epoch (UTC of
/// the first sample) and mono samples at the configured rate.
///
/// Audio is synthesized per 3 s window from band-shaped tone banks and
/// burst trains weighted by the source mix, then scaled so each window's
/// A-weighted level equals the scenario level for that instant.
pub fn generate_audio_day(
    cfg: &ScenarioConfig,
    spot: &SpotPlan,
    day_index: usize,
    seed: u64,
) -> Result<(DateTime<Utc>, Vec<f32>), ScenarioError> {
    cfg.validate()?;
    let day = spot
        .days
        .get(day_index)
        .ok_or_else(|| ScenarioError::Invalid(format!("no day index {day_index}")))?;
    let start = day.segments[0].start_sec;
    let end = day.segments.last().expect("validated").end_sec;
    if end - start > AUDIO_MAX_SECONDS_PER_DAY {
        return Err(ScenarioError::AudioTooLong {
            date: day.date,
            seconds: end - start,
            max: AUDIO_MAX_SECONDS_PER_DAY,
        });
    }
    let sr = cfg.audio_sample_rate;
    let epoch = local_to_utc(cfg.timezone, day.date, start)
        .ok_or_else(|| ScenarioError::Invalid("day start not representable in UTC".into()))?;

    let mut meter: AWeightingFilter<f64> = design_a_weighting_filter(sr)?;
    let window = GRID_STEP_SECONDS as usize * sr as usize;
    let mut samples = Vec::with_capacity((end - start) as usize * sr as usize);

    let mut sec = start;
    while sec < end {
        let target = instant_target(seed, spot, day, sec)
            .expect("segments tile the covered span");
        let mut block = synth_window(seed, spot, day, sec, sr, &target);
        // close the loop: scale the block so its A-weighted level matches
        meter.reset();
        let mut energy = 0.0_f64;
        for &s in &block {
            let y = meter.process(s);
            energy += y * y;
        }
        let mean_sq = energy / block.len() as f64;
        if mean_sq > 0.0 {
            let measured = cfg.audio_fullscale_spl_db + 10.0 * mean_sq.log10();
            let gain = 10_f64.powf((target.level_db - measured) / 20.0);
            let peak = block.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
            let gain = if peak * gain > 0.999 { 0.999 / peak } else { gain };
            for s in &mut block {
                *s *= gain;
            }
        }
        samples.extend(block.iter().map(|&s| s as f32));
        let _ = window;
        sec += GRID_STEP_SECONDS;
    }
    Ok((epoch, samples))
}

/// Sum of sines with global phase, advanced by phasor rotation; one
/// `sin_cos` per tone per window instead of one per sample.
fn bank_signal(out_len: usize, bank: &[(f64, f64)], sec: u32, sr: u32) -> Vec<f64> {
    let mut out = vec![0.0_f64; out_len];
    let norm = 1.0 / (bank.len().max(1) as f64).sqrt();
    for &(f, p) in bank {
        let step = std::f64::consts::TAU * f / f64::from(sr);
        let (mut im, mut re) = (std::f64::consts::TAU * f * f64::from(sec) + p).sin_cos();
        let (dc, ds) = (step.cos(), step.sin());
        for o in out.iter_mut() {
            *o += norm * im;
            let next_re = re * dc - im * ds;
            im = re * ds + im * dc;
            re = next_re;
        }
    }
    out
}

/// Raw (uncalibrated) window content mixing the scenario's sources.
fn synth_window(
    seed: u64,
    spot: &SpotPlan,
    day: &DayPlan,
    sec: u32,
    sr: u32,
    target: &InstantTarget,
) -> Vec<f64> {
    let n = GRID_STEP_SECONDS as usize * sr as usize;
    // tone banks fixed per (sensor, date): stable frequencies, global phase
    let mut bank_rng = record_rng(seed, &spot.sensor_id, day.date, 86_400);
    let mut bank = |lo: f64, hi: f64, count: usize| -> Vec<(f64, f64)> {
        (0..count)
            .map(|_| {
                (
                    lo + (hi - lo) * bank_rng.next_f64(),
                    std::f64::consts::TAU * bank_rng.next_f64(),
                )
            })
            .collect()
    };
    let low = bank(40.0, 180.0, 16);
    let mid = bank(300.0, 3200.0, 16);
    let high = bank(3600.0, 7500.0, 8);
    let music_bank = bank(350.0, 3000.0, 12);

    let mut out = vec![0.0_f64; n];
    let t_at = |i: usize| f64::from(sec) + i as f64 / f64::from(sr);
    if target.vehicles > 0.0 {
        let sig = bank_signal(n, &low, sec, sr);
        for (o, s) in out.iter_mut().zip(&sig) {
            *o += target.vehicles * s;
        }
    }
    if target.human > 0.0 {
        let sig = bank_signal(n, &mid, sec, sr);
        for (o, s) in out.iter_mut().zip(&sig) {
            *o += target.human * s;
        }
    }
    if target.birds > 0.0 {
        // bird-like bursts: 100 ms chirps separated by 650 ms
        let sig = bank_signal(n, &high, sec, sr);
        for (i, (o, s)) in out.iter_mut().zip(&sig).enumerate() {
            if t_at(i) % 0.75 < 0.1 {
                *o += target.birds * s;
            }
        }
    }
    if target.music > 0.0 {
        // beat train: 500 ms pulses, onset-heavy
        let sig = bank_signal(n, &music_bank, sec, sr);
        for (i, (o, s)) in out.iter_mut().zip(&sig).enumerate() {
            let env = if t_at(i) % 0.5 < 0.18 { 1.0 } else { 0.12 };
            *o += target.music * env * s;
        }
    }
    for o in &mut out {
        *o *= 0.05;
    }
    out
}

// --- simulate output files ---------------------------------------------------

fn scenario_io_err(path: &std::path::Path, source: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes one `<sensor_id>.metrics` file of record lines per spot.
/// Returns the written paths in config order.
pub fn write_metric_files(
    cfg: &ScenarioConfig,
    seed: u64,
    out_dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, ScenarioError> {
    std::fs::create_dir_all(out_dir).map_err(|e| scenario_io_err(out_dir, e))?;
    let mut paths = Vec::new();
    for (sensor_id, records) in generate_metric_stream(cfg, seed)? {
        let path = out_dir.join(format!("{sensor_id}.metrics"));
        let mut body = String::with_capacity(records.len() * 80);
        for r in &records {
            body.push_str(&encode_record(r));
            body.push('\n');
        }
        std::fs::write(&path, body).map_err(|e| scenario_io_err(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes one WAV plus a `key = value` sidecar per spot-day. The sidecar
/// carries what a node config needs: sensor id, stream epoch, sample
/// rate and the full-scale calibration used during synthesis.
pub fn write_audio_files(
    cfg: &ScenarioConfig,
    seed: u64,
    out_dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, ScenarioError> {
    std::fs::create_dir_all(out_dir).map_err(|e| scenario_io_err(out_dir, e))?;
    let mut paths = Vec::new();
    for spot in &cfg.spots {
        for (day_index, day) in spot.days.iter().enumerate() {
            let (epoch, samples) = generate_audio_day(cfg, spot, day_index, seed)?;
            let stem = format!("{}_{}", spot.sensor_id, day.date);
            let wav_path = out_dir.join(format!("{stem}.wav"));
            crate::wav::write_wav_f32(&wav_path, cfg.audio_sample_rate, &samples).map_err(
                |e| ScenarioError::Invalid(format!("writing {}: {e}", wav_path.display())),
            )?;
            let meta_path = out_dir.join(format!("{stem}.meta"));
            let meta = format!(
                "sensor_id = {}\nstart_time = {}\nsample_rate = {}\nfullscale_spl_db = {}\n",
                spot.sensor_id,
                epoch.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                cfg.audio_sample_rate,
                cfg.audio_fullscale_spl_db
            );
            std::fs::write(&meta_path, meta).map_err(|e| scenario_io_err(&meta_path, e))?;
            paths.push(wav_path);
        }
    }
    Ok(paths)
}

// --- scenario text format ---------------------------------------------------

/// Parses the sectioned `key = value` scenario format.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    #[derive(PartialEq)]
    enum Section {
        Top,
        Spot,
        Day,
        Segment,
        Spike,
        MusicBlock,
    }
    let err = |line: usize, reason: String| ScenarioError::Parse { line, reason };
    let mut cfg = ScenarioConfig {
        name: String::new(),
        timezone: chrono_tz::Europe::Madrid,
        audio_sample_rate: 48_000,
        audio_fullscale_spl_db: 120.0,
        spots: Vec::new(),
    };
    let mut section = Section::Top;
    let mut pending_spike: Option<(Option<u32>, Option<f64>, Option<f64>)> = None;
    let mut pending_block: Option<(Option<u32>, Option<u32>, Option<f64>)> = None;

    fn close_event(
        cfg: &mut ScenarioConfig,
        spike: &mut Option<(Option<u32>, Option<f64>, Option<f64>)>,
        block: &mut Option<(Option<u32>, Option<u32>, Option<f64>)>,
        line: usize,
    ) -> Result<(), ScenarioError> {
        let seg = cfg
            .spots
            .last_mut()
            .and_then(|s| s.days.last_mut())
            .and_then(|d| d.segments.last_mut());
        if let Some((at, peak, decay)) = spike.take() {
            let seg = seg.ok_or(ScenarioError::Parse {
                line,
                reason: "[spike] outside a [segment]".into(),
            })?;
            seg.events.push(SegmentEvent::Spike {
                at_sec: at.ok_or(ScenarioError::Parse {
                    line,
                    reason: "[spike] missing time".into(),
                })?,
                peak_db: peak.ok_or(ScenarioError::Parse {
                    line,
                    reason: "[spike] missing peak_db".into(),
                })?,
                decay_seconds: decay.unwrap_or(10.0),
            });
            return Ok(());
        }
        if let Some((start, end, music)) = block.take() {
            let seg = seg.ok_or(ScenarioError::Parse {
                line,
                reason: "[music_block] outside a [segment]".into(),
            })?;
            seg.events.push(SegmentEvent::MusicBlock {
                start_sec: start.ok_or(ScenarioError::Parse {
                    line,
                    reason: "[music_block] missing start".into(),
                })?,
                end_sec: end.ok_or(ScenarioError::Parse {
                    line,
                    reason: "[music_block] missing end".into(),
                })?,
                music: music.unwrap_or(0.8),
            });
        }
        Ok(())
    }

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            close_event(&mut cfg, &mut pending_spike, &mut pending_block, line_no)?;
            section = match name {
                "spot" => {
                    cfg.spots.push(SpotPlan {
                        spot_id: String::new(),
                        sensor_id: SensorId::new("unset").expect("placeholder id"),
                        grid_offset_seconds: 0,
                        days: Vec::new(),
                    });
                    Section::Spot
                }
                "day" => {
                    let spot = cfg.spots.last_mut().ok_or_else(|| {
                        err(line_no, "[day] before any [spot]".into())
                    })?;
                    spot.days.push(DayPlan {
                        date: NaiveDate::from_ymd_opt(2025, 1, 1).expect("placeholder"),
                        segments: Vec::new(),
                    });
                    Section::Day
                }
                "segment" => {
                    let day = cfg
                        .spots
                        .last_mut()
                        .and_then(|s| s.days.last_mut())
                        .ok_or_else(|| err(line_no, "[segment] before any [day]".into()))?;
                    day.segments.push(Segment {
                        start_sec: 0,
                        end_sec: 0,
                        base_level_db: 50.0,
                        level_jitter_db: 0.0,
                        mix: SourceMix {
                            birds: 0.0,
                            human: 0.0,
                            vehicles: 0.0,
                            music: 0.0,
                        },
                        pleasantness: 0.0,
                        eventfulness: 0.0,
                        score_jitter: 0.05,
                        events: Vec::new(),
                    });
                    Section::Segment
                }
                "spike" => {
                    pending_spike = Some((None, None, None));
                    Section::Spike
                }
                "music_block" => {
                    pending_block = Some((None, None, None));
                    Section::MusicBlock
                }
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            };
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line_no, format!("expected key = value, got {line:?}")))?;
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| err(line_no, format!("{key}: bad number {v:?}")))
        };
        let parse_time = |v: &str| parse_local_time(v).ok_or_else(|| {
            err(line_no, format!("{key}: bad time {v:?} (HH:MM[:SS] or 24:00)"))
        });

        match section {
            Section::Top => match key {
                "name" => cfg.name = value.to_string(),
                "timezone" => {
                    cfg.timezone = value
                        .parse()
                        .map_err(|_| err(line_no, format!("unknown timezone {value:?}")))?
                }
                "audio_sample_rate" => {
                    cfg.audio_sample_rate = value
                        .parse()
                        .map_err(|_| err(line_no, format!("bad sample rate {value:?}")))?
                }
                "audio_fullscale_spl_db" => cfg.audio_fullscale_spl_db = parse_f64(value)?,
                other => return Err(err(line_no, format!("unknown top-level key {other:?}"))),
            },
            Section::Spot => {
                let spot = cfg.spots.last_mut().expect("in section");
                match key {
                    "spot_id" => spot.spot_id = value.to_string(),
                    "sensor_id" => spot.sensor_id = SensorId::new(value)?,
                    "grid_offset_seconds" => {
                        spot.grid_offset_seconds = value
                            .parse()
                            .map_err(|_| err(line_no, format!("bad offset {value:?}")))?
                    }
                    other => return Err(err(line_no, format!("unknown spot key {other:?}"))),
                }
            }
            Section::Day => {
                let day = cfg
                    .spots
                    .last_mut()
                    .and_then(|s| s.days.last_mut())
                    .expect("in section");
                match key {
                    "date" => {
                        day.date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                            .map_err(|e| err(line_no, format!("bad date {value:?}: {e}")))?
                    }
                    other => return Err(err(line_no, format!("unknown day key {other:?}"))),
                }
            }
            Section::Segment => {
                let seg = cfg
                    .spots
                    .last_mut()
                    .and_then(|s| s.days.last_mut())
                    .and_then(|d| d.segments.last_mut())
                    .expect("in section");
                match key {
                    "start" => seg.start_sec = parse_time(value)?,
                    "end" => seg.end_sec = parse_time(value)?,
                    "base_level_db" => seg.base_level_db = parse_f64(value)?,
                    "level_jitter_db" => seg.level_jitter_db = parse_f64(value)?,
                    "birds" => seg.mix.birds = parse_f64(value)?,
                    "human" => seg.mix.human = parse_f64(value)?,
                    "vehicles" => seg.mix.vehicles = parse_f64(value)?,
                    "music" => seg.mix.music = parse_f64(value)?,
                    "pleasantness" => seg.pleasantness = parse_f64(value)?,
                    "eventfulness" => seg.eventfulness = parse_f64(value)?,
                    "score_jitter" => seg.score_jitter = parse_f64(value)?,
                    other => return Err(err(line_no, format!("unknown segment key {other:?}"))),
                }
            }
            Section::Spike => {
                let s = pending_spike.as_mut().expect("in section");
                match key {
                    "time" => s.0 = Some(parse_time(value)?),
                    "peak_db" => s.1 = Some(parse_f64(value)?),
                    "decay_seconds" => s.2 = Some(parse_f64(value)?),
                    other => return Err(err(line_no, format!("unknown spike key {other:?}"))),
                }
            }
            Section::MusicBlock => {
                let b = pending_block.as_mut().expect("in section");
                match key {
                    "start" => b.0 = Some(parse_time(value)?),
                    "end" => b.1 = Some(parse_time(value)?),
                    "music" => b.2 = Some(parse_f64(value)?),
                    other => {
                        return Err(err(line_no, format!("unknown music_block key {other:?}")))
                    }
                }
            }
        }
    }
    let last = text.lines().count();
    close_event(&mut cfg, &mut pending_spike, &mut pending_block, last)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a scenario from a file.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text)
}

fn parse_local_time(v: &str) -> Option<u32> {
    let parts: Vec<&str> = v.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return None;
    }
    let h: u32 = parts[0].parse().ok()?;
    let m: u32 = parts[1].parse().ok()?;
    let s: u32 = if parts.len() == 3 {
        parts[2].parse().ok()?
    } else {
        0
    };
    if h > 24 || m > 59 || s > 59 || (h == 24 && (m > 0 || s > 0)) {
        return None;
    }
    Some(h * 3600 + m * 60 + s)
}
