//! Interpretation pipeline: hourly aggregates, activity percentages,
//! music event counting and daily reports.
//!
//! Level means are energetic; perceptual means are arithmetic and then
//! scaled from [-1, 1] to [0, 1]. Bucketing happens in a configured local
//! timezone because every time of interest (the noon opening rocket, the
//! nightly schedules) is local; storage stays UTC. Buckets are half-open
//! local hours `[h, h+1)` and empty buckets are emitted so a day always
//! renders as a complete 24-sector ring.

use std::collections::HashMap;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use thiserror::Error;

use crate::dsp::{energetic_mean_db, max_level_entries, DspError, DEFAULT_WINDOW_SECONDS};
use crate::record::MeasurementRecord;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("value {0} outside [-1, 1]")]
    OutOfUnitRange(f64),
    #[error("empty period")]
    EmptyPeriod,
    #[error("series not in timestamp order at index {0}")]
    Unordered(usize),
    #[error("bad analysis config: {0}")]
    Config(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Per-source activation thresholds, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub birds: f64,
    pub human: f64,
    pub vehicles: f64,
    pub music: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            birds: 0.5,
            human: 0.5,
            vehicles: 0.5,
            music: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub timezone: Tz,
    pub thresholds: Thresholds,
    /// A music run shorter than this never seeds an event, seconds.
    pub music_min_duration_seconds: f64,
    /// Below-threshold gaps shorter than this are bridged, seconds.
    pub music_merge_gap_seconds: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            timezone: chrono_tz::Europe::Madrid,
            thresholds: Thresholds::default(),
            music_min_duration_seconds: 30.0,
            music_merge_gap_seconds: 60.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        for (name, t) in [
            ("birds", self.thresholds.birds),
            ("human", self.thresholds.human),
            ("vehicles", self.thresholds.vehicles),
            ("music", self.thresholds.music),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(AnalysisError::Config(format!(
                    "{name} threshold {t} outside [0, 1]"
                )));
            }
        }
        if self.music_min_duration_seconds <= 0.0 {
            return Err(AnalysisError::Config(
                "music min_duration must be > 0".into(),
            ));
        }
        if self.music_merge_gap_seconds < 0.0 {
            return Err(AnalysisError::Config("music merge_gap must be >= 0".into()));
        }
        Ok(())
    }
}

/// Affine map from [-1, 1] onto [0, 1].
pub fn scale_to_unit(x: f64) -> Result<f64, AnalysisError> {
    if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
        return Err(AnalysisError::OutOfUnitRange(x));
    }
    Ok((x + 1.0) / 2.0)
}

/// Percentage of scores strictly above `threshold`.
pub fn activity_percentage(scores: &[f64], threshold: f64) -> Result<f64, AnalysisError> {
    if scores.is_empty() {
        return Err(AnalysisError::EmptyPeriod);
    }
    let above = scores.iter().filter(|&&s| s > threshold).count();
    Ok(100.0 * above as f64 / scores.len() as f64)
}

/// A detected music event, `[start, end)` in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MusicEvent {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

/// Detects music events over a timestamp-ordered score series.
///
/// A run is a maximal stretch of consecutive records above the music
/// threshold (consecutive means one integration step apart; a data hole
/// splits runs like silence does). Runs at least `min_duration` long
/// qualify. Adjacent runs whose below-threshold gap is shorter than
/// `merge_gap` belong to one event, and an event is kept when it
/// contains at least one qualifying run — so detector flicker neither
/// fragments an event nor invents one.
pub fn count_music_events(
    series: &[(DateTime<Utc>, f64)],
    cfg: &AnalysisConfig,
) -> Result<Vec<MusicEvent>, AnalysisError> {
    cfg.validate()?;
    for (i, pair) in series.windows(2).enumerate() {
        if pair[1].0 <= pair[0].0 {
            return Err(AnalysisError::Unordered(i + 1));
        }
    }
    let step = Duration::milliseconds((DEFAULT_WINDOW_SECONDS * 1000.0) as i64);

    // maximal runs of active records
    struct Run {
        start: DateTime<Utc>,
        end: DateTime<Utc>, // end of last active record
    }
    let mut runs: Vec<Run> = Vec::new();
    let mut current: Option<Run> = None;
    for &(ts, score) in series {
        let active = score > cfg.thresholds.music;
        match (&mut current, active) {
            (Some(run), true) if ts == run.end => run.end = ts + step,
            (Some(_), true) => {
                // hole in the data: close this run, start another
                runs.push(current.take().unwrap());
                current = Some(Run {
                    start: ts,
                    end: ts + step,
                });
            }
            (Some(_), false) => runs.push(current.take().unwrap()),
            (None, true) => {
                current = Some(Run {
                    start: ts,
                    end: ts + step,
                })
            }
            (None, false) => {}
        }
    }
    if let Some(run) = current {
        runs.push(run);
    }

    let min_duration = Duration::milliseconds((cfg.music_min_duration_seconds * 1000.0) as i64);
    let merge_gap = Duration::milliseconds((cfg.music_merge_gap_seconds * 1000.0) as i64);
    let qualifies = |r: &Run| r.end - r.start >= min_duration;

    let mut events = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        // one chain of runs bridged by short gaps
        let mut j = i;
        while j + 1 < runs.len() && runs[j + 1].start - runs[j].end < merge_gap {
            j += 1;
        }
        if runs[i..=j].iter().any(qualifies) {
            events.push(MusicEvent {
                start: runs[i].start,
                end: runs[j].end,
            });
        }
        i = j + 1;
    }
    Ok(events)
}

/// One hourly bucket of interpreted values.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodAggregate {
    pub subject: String,
    /// Local hour boundary in the analysis timezone.
    pub bucket_start_local: NaiveDateTime,
    pub record_count: u32,
    pub laeq_db: Option<f64>,
    pub pleasantness01: Option<f64>,
    pub eventfulness01: Option<f64>,
    pub birds_pct: Option<f64>,
    pub human_pct: Option<f64>,
    pub vehicles_pct: Option<f64>,
    pub music_event_count: u32,
}

fn local_hour_floor(ts: DateTime<Utc>, tz: Tz) -> NaiveDateTime {
    let local = ts.with_timezone(&tz).naive_local();
    local
        .date()
        .and_hms_opt(local.hour(), 0, 0)
        .expect("hour floor")
}

/// Buckets records into local hours over `[from, to)` and interprets
/// each bucket. When no range is given it spans the records themselves.
pub fn aggregate_hourly(
    subject: &str,
    records: &[MeasurementRecord],
    cfg: &AnalysisConfig,
    range: Option<(DateTime<Utc>, DateTime<Utc>)>,
) -> Result<Vec<PeriodAggregate>, AnalysisError> {
    cfg.validate()?;
    let tz = cfg.timezone;
    let (from, to) = match range {
        Some(r) => r,
        None => match (records.first(), records.last()) {
            (Some(a), Some(b)) => (a.timestamp, b.timestamp + Duration::seconds(1)),
            _ => return Ok(Vec::new()),
        },
    };

    let mut by_bucket: HashMap<NaiveDateTime, Vec<&MeasurementRecord>> = HashMap::new();
    for r in records {
        if r.timestamp < from || r.timestamp >= to {
            continue;
        }
        by_bucket
            .entry(local_hour_floor(r.timestamp, tz))
            .or_default()
            .push(r);
    }

    let music_series: Vec<(DateTime<Utc>, f64)> = records
        .iter()
        .filter(|r| r.timestamp >= from && r.timestamp < to)
        .map(|r| (r.timestamp, r.sources.music()))
        .collect();
    let events = count_music_events(&music_series, cfg)?;
    let mut events_per_bucket: HashMap<NaiveDateTime, u32> = HashMap::new();
    for e in &events {
        *events_per_bucket
            .entry(local_hour_floor(e.start, tz))
            .or_default() += 1;
    }

    let mut out = Vec::new();
    let end_local = to.with_timezone(&tz).naive_local();
    let mut bucket = local_hour_floor(from, tz);
    while bucket < end_local {
        let agg = match by_bucket.get(&bucket) {
            Some(rs) => {
                let levels: Vec<f64> = rs.iter().map(|r| r.laeq_db).collect();
                let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
                let p: Vec<f64> = rs.iter().map(|r| r.perception.pleasantness()).collect();
                let e: Vec<f64> = rs.iter().map(|r| r.perception.eventfulness()).collect();
                let pct = |get: &dyn Fn(&MeasurementRecord) -> f64, threshold: f64| {
                    let scores: Vec<f64> = rs.iter().map(|r| get(r)).collect();
                    activity_percentage(&scores, threshold)
                };
                PeriodAggregate {
                    subject: subject.to_string(),
                    bucket_start_local: bucket,
                    record_count: rs.len() as u32,
                    laeq_db: Some(energetic_mean_db(&levels)?),
                    pleasantness01: Some(scale_to_unit(mean(&p).clamp(-1.0, 1.0))?),
                    eventfulness01: Some(scale_to_unit(mean(&e).clamp(-1.0, 1.0))?),
                    birds_pct: Some(pct(&|r| r.sources.birds(), cfg.thresholds.birds)?),
                    human_pct: Some(pct(&|r| r.sources.human(), cfg.thresholds.human)?),
                    vehicles_pct: Some(pct(&|r| r.sources.vehicles(), cfg.thresholds.vehicles)?),
                    music_event_count: events_per_bucket.get(&bucket).copied().unwrap_or(0),
                }
            }
            None => PeriodAggregate {
                subject: subject.to_string(),
                bucket_start_local: bucket,
                record_count: 0,
                laeq_db: None,
                pleasantness01: None,
                eventfulness01: None,
                birds_pct: None,
                human_pct: None,
                vehicles_pct: None,
                music_event_count: events_per_bucket.get(&bucket).copied().unwrap_or(0),
            },
        };
        out.push(agg);
        bucket += Duration::hours(1);
    }
    Ok(out)
}

/// Default report window around the noon opening event, local time.
pub const PEAK_WINDOW_LOCAL: ((u32, u32), (u32, u32)) = ((11, 58), (12, 5));

/// A Table-2 style daily summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyReport {
    pub subject: String,
    pub date: NaiveDate,
    pub record_count: u32,
    pub daily_laeq_db: f64,
    /// `(level, timestamp, window)` for the peak window, when requested.
    pub peak: Option<(f64, DateTime<Utc>, (DateTime<Utc>, DateTime<Utc>))>,
}

/// Daily energetic LAeq over one local day, optionally with the peak
/// observation inside the canonical 11:58-12:05 local window.
pub fn daily_report(
    subject: &str,
    records: &[MeasurementRecord],
    cfg: &AnalysisConfig,
    date: NaiveDate,
    peak_window: bool,
) -> Result<DailyReport, AnalysisError> {
    cfg.validate()?;
    let tz = cfg.timezone;
    let day: Vec<&MeasurementRecord> = records
        .iter()
        .filter(|r| r.timestamp.with_timezone(&tz).date_naive() == date)
        .collect();
    if day.is_empty() {
        return Err(AnalysisError::EmptyPeriod);
    }
    let levels: Vec<f64> = day.iter().map(|r| r.laeq_db).collect();
    let daily_laeq_db = energetic_mean_db(&levels)?;

    let peak = if peak_window {
        let ((h0, m0), (h1, m1)) = PEAK_WINDOW_LOCAL;
        let local = |h, m| {
            tz.with_ymd_and_hms(date.year(), date.month(), date.day(), h, m, 0)
                .earliest()
                .map(|t| t.with_timezone(&Utc))
        };
        let (t0, t1) = match (local(h0, m0), local(h1, m1)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(AnalysisError::Config("peak window not representable".into())),
        };
        let entries: Vec<(DateTime<Utc>, f64)> =
            day.iter().map(|r| (r.timestamp, r.laeq_db)).collect();
        let (level, ts) = max_level_entries(&entries, t0, t1)?;
        Some((level, ts, (t0, t1)))
    } else {
        None
    };

    Ok(DailyReport {
        subject: subject.to_string(),
        date,
        record_count: day.len() as u32,
        daily_laeq_db,
        peak,
    })
}

/// Renders a daily report as the fixed-width text block printed by the
/// `report` subcommand.
pub fn format_daily_report(report: &DailyReport, tz: Tz) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Daily summary for {} on {}\n",
        report.subject, report.date
    ));
    out.push_str(&format!("  records:    {}\n", report.record_count));
    out.push_str(&format!("  daily LAeq: {:.1} dB\n", report.daily_laeq_db));
    if let Some((level, ts, (t0, t1))) = report.peak {
        let fmt = "%H:%M:%S";
        out.push_str(&format!(
            "  max LAeq in [{}, {}): {:.1} dB at {}\n",
            t0.with_timezone(&tz).format("%H:%M"),
            t1.with_timezone(&tz).format("%H:%M"),
            level,
            ts.with_timezone(&tz).format(fmt)
        ));
    }
    out
}

/// Writes aggregates as the `analyze` CSV: header plus one row per
/// bucket, reals fixed at four decimals, absent metrics empty.
pub fn write_aggregates_csv<W: std::io::Write>(
    mut w: W,
    aggregates: &[PeriodAggregate],
) -> std::io::Result<()> {
    writeln!(
        w,
        "subject,bucket_start_local,record_count,laeq_db,pleasantness01,eventfulness01,\
         birds_pct,human_pct,vehicles_pct,music_events"
    )?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for a in aggregates {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            a.subject,
            a.bucket_start_local.format("%Y-%m-%dT%H:%M:%S"),
            a.record_count,
            opt(a.laeq_db),
            opt(a.pleasantness01),
            opt(a.eventfulness01),
            opt(a.birds_pct),
            opt(a.human_pct),
            opt(a.vehicles_pct),
            a.music_event_count
        )?;
    }
    Ok(())
}

/// Reads the `analyze` CSV back; the inverse of [`write_aggregates_csv`].
pub fn read_aggregates_csv<R: std::io::Read>(
    r: R,
) -> Result<Vec<PeriodAggregate>, AnalysisError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AnalysisError::Config(format!("bad aggregates csv: {e}")))?;
        if rec.len() != 10 {
            return Err(AnalysisError::Config(format!(
                "aggregates csv: expected 10 columns, got {}",
                rec.len()
            )));
        }
        let parse_opt = |s: &str, what: &str| -> Result<Option<f64>, AnalysisError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| AnalysisError::Config(format!("bad {what}: {s:?}")))
            }
        };
        out.push(PeriodAggregate {
            subject: rec[0].to_string(),
            bucket_start_local: NaiveDateTime::parse_from_str(&rec[1], "%Y-%m-%dT%H:%M:%S")
                .map_err(|e| AnalysisError::Config(format!("bad bucket_start {:?}: {e}", &rec[1])))?,
            record_count: rec[2]
                .parse()
                .map_err(|_| AnalysisError::Config(format!("bad record_count {:?}", &rec[2])))?,
            laeq_db: parse_opt(&rec[3], "laeq_db")?,
            pleasantness01: parse_opt(&rec[4], "pleasantness01")?,
            eventfulness01: parse_opt(&rec[5], "eventfulness01")?,
            birds_pct: parse_opt(&rec[6], "birds_pct")?,
            human_pct: parse_opt(&rec[7], "human_pct")?,
            vehicles_pct: parse_opt(&rec[8], "vehicles_pct")?,
            music_event_count: rec[9]
                .parse()
                .map_err(|_| AnalysisError::Config(format!("bad music_events {:?}", &rec[9])))?,
        });
    }
    Ok(out)
}
