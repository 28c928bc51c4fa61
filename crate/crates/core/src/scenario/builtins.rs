//! Built-in scenarios approximating the study's three analysis periods
//! plus two single-day fixtures.
//!
//! Levels are calibrated so the daily energetic means land on the
//! published reference figures (90 dB for the plaza analog on the
//! opening day, 65 dB on a quiet Sunday), and the schedules encode the
//! qualitative patterns the analysis layer is expected to surface:
//! nightclub activity Thursday through Sunday 02:00-05:00 in the normal
//! week, 18-hour sustained eventfulness and near-total human presence
//! during the festival, traffic vanishing at the Labrit analog, and the
//! thrice-daily music blocks with their three silent-evening exceptions.

use chrono::NaiveDate;

use super::{DayPlan, ScenarioConfig, Segment, SegmentEvent, SourceMix, SpotPlan};
use crate::record::SensorId;

pub const BUILTIN_NAMES: [&str; 5] = [
    "normal-week",
    "festival-week",
    "post-week",
    "txupinazo-day",
    "normal-sunday",
];

/// Looks up a built-in scenario by name.
pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "normal-week" => Some(normal_week()),
        "festival-week" => Some(festival_week()),
        "post-week" => Some(post_week()),
        "txupinazo-day" => Some(txupinazo_day()),
        "normal-sunday" => Some(normal_sunday()),
        _ => None,
    }
}

/// All built-in scenarios.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin(n).expect("listed builtin"))
        .collect()
}

fn hms(h: u32, m: u32) -> u32 {
    h * 3600 + m * 60
}

#[allow(clippy::too_many_arguments)]
fn seg(
    start: u32,
    end: u32,
    level: f64,
    jitter: f64,
    birds: f64,
    human: f64,
    vehicles: f64,
    music: f64,
    pleasantness: f64,
    eventfulness: f64,
) -> Segment {
    Segment {
        start_sec: start,
        end_sec: end,
        base_level_db: level,
        level_jitter_db: jitter,
        mix: SourceMix {
            birds,
            human,
            vehicles,
            music,
        },
        pleasantness,
        eventfulness,
        score_jitter: 0.05,
        events: Vec::new(),
    }
}

fn music_block(start_h: u32, end_h: u32) -> SegmentEvent {
    SegmentEvent::MusicBlock {
        start_sec: hms(start_h, 0),
        end_sec: hms(end_h, 0),
        music: 0.8,
    }
}

fn spot(spot_id: &str, sensor_id: &str, grid_offset_seconds: u32, days: Vec<DayPlan>) -> SpotPlan {
    SpotPlan {
        spot_id: spot_id.into(),
        sensor_id: SensorId::new(sensor_id).expect("builtin sensor id"),
        grid_offset_seconds,
        days,
    }
}

fn days(year: i32, month: u32, range: std::ops::RangeInclusive<u32>) -> Vec<NaiveDate> {
    range
        .map(|d| NaiveDate::from_ymd_opt(year, month, d).expect("builtin date"))
        .collect()
}

fn scenario(name: &str, spots: Vec<SpotPlan>) -> ScenarioConfig {
    let cfg = ScenarioConfig {
        name: name.into(),
        timezone: chrono_tz::Europe::Madrid,
        audio_sample_rate: 48_000,
        audio_fullscale_spl_db: 120.0,
        spots,
    };
    cfg.validate().expect("builtin scenario is valid");
    cfg
}

/// Opening day at the plaza analog: daily level calibrated to 90 dB,
/// peak 112 dB at 12:01:16 local inside the 11:58-12:05 window. The 3 s
/// grid is offset by one second so 12:01:16 is a grid point.
fn txupinazo_day() -> ScenarioConfig {
    let date = NaiveDate::from_ymd_opt(2025, 7, 6).expect("date");
    let mut noon = seg(hms(11, 30), hms(13, 0), 88.0, 0.2, 0.02, 0.9, 0.03, 0.1, 0.1, 0.8);
    noon.events.push(SegmentEvent::Spike {
        at_sec: hms(12, 1) + 16,
        peak_db: 24.0,
        decay_seconds: 12.0,
    });
    let segments = vec![
        seg(0, hms(8, 0), 70.0, 1.0, 0.1, 0.15, 0.05, 0.02, 0.4, -0.5),
        seg(hms(8, 0), hms(11, 30), 82.0, 1.0, 0.05, 0.8, 0.05, 0.05, 0.2, 0.3),
        noon,
        seg(hms(13, 0), hms(24, 0), 93.0, 1.0, 0.02, 0.9, 0.03, 0.2, 0.1, 0.7),
    ];
    scenario(
        "txupinazo-day",
        vec![spot("6", "s4", 1, vec![DayPlan { date, segments }])],
    )
}

/// A quiet Sunday at the plaza analog, daily level calibrated to 65 dB.
fn normal_sunday() -> ScenarioConfig {
    let date = NaiveDate::from_ymd_opt(2025, 7, 27).expect("date");
    let segments = vec![
        seg(0, hms(7, 0), 55.0, 1.0, 0.15, 0.05, 0.02, 0.0, 0.7, -0.7),
        seg(hms(7, 0), hms(23, 0), 66.8, 1.0, 0.1, 0.5, 0.05, 0.02, 0.5, -0.1),
        seg(hms(23, 0), hms(24, 0), 60.0, 1.0, 0.02, 0.2, 0.03, 0.0, 0.6, -0.5),
    ];
    scenario(
        "normal-sunday",
        vec![spot("6", "s4", 0, vec![DayPlan { date, segments }])],
    )
}

/// Festival days: human presence near 100% from 09:00 through 03:00,
/// vehicles gone at the Labrit analog, and music blocks at 07-08,
/// 17-18 and 21-22 — the evening block missing on the 6th, 8th and 13th.
fn festival_week() -> ScenarioConfig {
    let july = days(2025, 7, 6..=14);
    let no_evening_music = [6, 8, 13];

    let labrit_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| {
            let mut morning = seg(hms(3, 0), hms(9, 0), 72.0, 1.5, 0.05, 0.6, 0.02, 0.02, 0.3, 0.0);
            morning.events.push(music_block(7, 8));
            let mut daytime =
                seg(hms(9, 0), hms(24, 0), 87.0, 1.5, 0.02, 0.9, 0.02, 0.05, 0.3, 0.7);
            daytime.events.push(music_block(17, 18));
            if !no_evening_music.contains(&chrono::Datelike::day(&date)) {
                daytime.events.push(music_block(21, 22));
            }
            DayPlan {
                date,
                segments: vec![
                    seg(0, hms(3, 0), 85.0, 1.5, 0.02, 0.85, 0.02, 0.05, 0.2, 0.6),
                    morning,
                    daytime,
                ],
            }
        })
        .collect();

    let plaza_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(3, 0), 86.0, 1.5, 0.02, 0.85, 0.03, 0.08, 0.2, 0.6),
                seg(hms(3, 0), hms(9, 0), 73.0, 1.5, 0.05, 0.6, 0.03, 0.02, 0.3, 0.0),
                seg(hms(9, 0), hms(24, 0), 90.0, 1.5, 0.02, 0.92, 0.03, 0.1, 0.3, 0.75),
            ],
        })
        .collect();

    let bayona_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(3, 0), 78.0, 1.5, 0.02, 0.7, 0.3, 0.05, 0.2, 0.55),
                seg(hms(3, 0), hms(9, 0), 62.0, 1.5, 0.08, 0.3, 0.25, 0.02, 0.4, -0.2),
                seg(hms(9, 0), hms(24, 0), 80.0, 1.5, 0.02, 0.75, 0.35, 0.05, 0.25, 0.65),
            ],
        })
        .collect();

    scenario(
        "festival-week",
        vec![
            spot("3", "s2", 0, bayona_days),
            spot("5", "s3", 0, labrit_days),
            spot("6", "s4", 0, plaza_days),
        ],
    )
}

/// The school-season reference week (May 12-18, Monday through Sunday).
fn normal_week() -> ScenarioConfig {
    let may = days(2025, 5, 12..=18);
    // May 15th-18th are the Thursday..Sunday of this week
    let is_club_night = |date: &NaiveDate| chrono::Datelike::day(date) >= 15;

    let bayona_days: Vec<DayPlan> = may
        .iter()
        .map(|&date| {
            let (night_level, night_e, night_h, night_m) = if is_club_night(&date) {
                (70.0, 0.65, 0.7, 0.3)
            } else {
                (48.0, -0.5, 0.1, 0.02)
            };
            DayPlan {
                date,
                segments: vec![
                    seg(0, hms(2, 0), 55.0, 1.0, 0.02, 0.3, 0.2, 0.02, 0.4, -0.3),
                    seg(hms(2, 0), hms(5, 0), night_level, 1.0, 0.02, night_h, 0.1, night_m, 0.3, night_e),
                    seg(hms(5, 0), hms(8, 0), 52.0, 1.0, 0.1, 0.1, 0.15, 0.0, 0.6, -0.5),
                    seg(hms(8, 0), hms(12, 0), 62.0, 1.0, 0.05, 0.4, 0.4, 0.02, 0.4, -0.1),
                    seg(hms(12, 0), hms(14, 0), 65.0, 1.0, 0.05, 0.55, 0.35, 0.02, 0.4, 0.2),
                    seg(hms(14, 0), hms(18, 0), 60.0, 1.0, 0.05, 0.35, 0.35, 0.02, 0.45, -0.1),
                    seg(hms(18, 0), hms(21, 0), 63.0, 1.0, 0.03, 0.5, 0.3, 0.05, 0.4, 0.2),
                    seg(hms(21, 0), hms(24, 0), 58.0, 1.0, 0.02, 0.3, 0.25, 0.02, 0.45, -0.2),
                ],
            }
        })
        .collect();

    // the Labrit analog under normal conditions: a traffic street
    let labrit_days: Vec<DayPlan> = may
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(7, 0), 52.0, 1.0, 0.05, 0.1, 0.15, 0.0, 0.5, -0.5),
                seg(hms(7, 0), hms(21, 0), 68.0, 1.0, 0.03, 0.4, 0.7, 0.02, 0.2, 0.0),
                seg(hms(21, 0), hms(24, 0), 58.0, 1.0, 0.02, 0.2, 0.3, 0.0, 0.4, -0.3),
            ],
        })
        .collect();

    let plaza_days: Vec<DayPlan> = may
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(7, 0), 50.0, 1.0, 0.2, 0.08, 0.02, 0.0, 0.7, -0.6),
                seg(hms(7, 0), hms(23, 0), 64.0, 1.0, 0.1, 0.5, 0.05, 0.02, 0.5, -0.1),
                seg(hms(23, 0), hms(24, 0), 55.0, 1.0, 0.05, 0.2, 0.03, 0.0, 0.6, -0.4),
            ],
        })
        .collect();

    scenario(
        "normal-week",
        vec![
            spot("3", "s2", 0, bayona_days),
            spot("5", "s3", 0, labrit_days),
            spot("6", "s4", 0, plaza_days),
        ],
    )
}

/// Post-festival weeks (July 15-27): city winding down to summer calm;
/// traffic back at the Labrit analog, mild weekend nightlife.
fn post_week() -> ScenarioConfig {
    let july = days(2025, 7, 15..=27);
    let is_weekend_night = |date: &NaiveDate| {
        matches!(
            chrono::Datelike::weekday(date),
            chrono::Weekday::Thu | chrono::Weekday::Fri | chrono::Weekday::Sat | chrono::Weekday::Sun
        )
    };

    let bayona_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| {
            let (night_level, night_e) = if is_weekend_night(&date) {
                (62.0, 0.3)
            } else {
                (48.0, -0.5)
            };
            DayPlan {
                date,
                segments: vec![
                    seg(0, hms(2, 0), 54.0, 1.0, 0.02, 0.25, 0.2, 0.02, 0.45, -0.3),
                    seg(hms(2, 0), hms(5, 0), night_level, 1.0, 0.02, 0.4, 0.1, 0.05, 0.35, night_e),
                    seg(hms(5, 0), hms(8, 0), 51.0, 1.0, 0.1, 0.1, 0.15, 0.0, 0.6, -0.5),
                    seg(hms(8, 0), hms(22, 0), 63.0, 1.0, 0.05, 0.4, 0.35, 0.02, 0.4, -0.05),
                    seg(hms(22, 0), hms(24, 0), 56.0, 1.0, 0.02, 0.25, 0.2, 0.02, 0.5, -0.3),
                ],
            }
        })
        .collect();

    let labrit_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(7, 0), 53.0, 1.0, 0.05, 0.1, 0.18, 0.0, 0.5, -0.5),
                seg(hms(7, 0), hms(21, 0), 67.0, 1.0, 0.03, 0.4, 0.65, 0.02, 0.25, 0.0),
                seg(hms(21, 0), hms(24, 0), 58.0, 1.0, 0.02, 0.2, 0.3, 0.0, 0.4, -0.3),
            ],
        })
        .collect();

    let plaza_days: Vec<DayPlan> = july
        .iter()
        .map(|&date| DayPlan {
            date,
            segments: vec![
                seg(0, hms(7, 0), 51.0, 1.0, 0.2, 0.08, 0.02, 0.0, 0.7, -0.6),
                seg(hms(7, 0), hms(23, 0), 65.0, 1.0, 0.1, 0.5, 0.05, 0.02, 0.5, -0.1),
                seg(hms(23, 0), hms(24, 0), 56.0, 1.0, 0.05, 0.2, 0.03, 0.0, 0.6, -0.4),
            ],
        })
        .collect();

    scenario(
        "post-week",
        vec![
            spot("3", "s2", 0, bayona_days),
            spot("5", "s3", 0, labrit_days),
            spot("6", "s4", 0, plaza_days),
        ],
    )
}
