//! Circular plots: 24 hourly sectors per ring, one concentric ring per
//! day, rendered as standalone SVG text.
//!
//! Conventions (fixed for determinism): midnight at the top, hours
//! advancing clockwise, the innermost ring is the earliest day. Values
//! map onto a red-yellow-green ramp (low to high) or a grayscale ramp;
//! sectors without data render neutral gray. Rendering is a pure
//! function of the spec — identical specs produce identical bytes.

use chrono::{NaiveDate, Timelike};
use thiserror::Error;

use crate::analysis::PeriodAggregate;

pub const SECTORS_PER_RING: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("plot needs at least one day of aggregates")]
    NoDays,
    #[error("value range lo {0} must be below hi {1}")]
    BadRange(f64, f64),
    #[error("values grid must be |days| x 24, got row of {0}")]
    BadGrid(usize),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Which aggregate field a plot shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Laeq,
    Pleasantness,
    Eventfulness,
    Birds,
    Human,
    Vehicles,
    MusicEvents,
}

impl Metric {
    pub fn parse(name: &str) -> Result<Self, PlotError> {
        Ok(match name {
            "laeq" => Metric::Laeq,
            "pleasantness" => Metric::Pleasantness,
            "eventfulness" => Metric::Eventfulness,
            "birds" => Metric::Birds,
            "human" => Metric::Human,
            "vehicles" => Metric::Vehicles,
            "music" | "music_events" => Metric::MusicEvents,
            other => return Err(PlotError::UnknownMetric(other.to_string())),
        })
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Laeq => "LAeq (dB)",
            Metric::Pleasantness => "pleasantness [0,1]",
            Metric::Eventfulness => "eventfulness [0,1]",
            Metric::Birds => "birds active (%)",
            Metric::Human => "human active (%)",
            Metric::Vehicles => "vehicles active (%)",
            Metric::MusicEvents => "music events per hour",
        }
    }

    fn value(self, a: &PeriodAggregate) -> Option<f64> {
        if a.record_count == 0 {
            return None;
        }
        match self {
            Metric::Laeq => a.laeq_db,
            Metric::Pleasantness => a.pleasantness01,
            Metric::Eventfulness => a.eventfulness01,
            Metric::Birds => a.birds_pct,
            Metric::Human => a.human_pct,
            Metric::Vehicles => a.vehicles_pct,
            Metric::MusicEvents => Some(f64::from(a.music_event_count)),
        }
    }

    /// The conventional range for this metric; `None` means span the data.
    pub fn default_range(self) -> Option<(f64, f64)> {
        match self {
            Metric::Laeq | Metric::MusicEvents => None,
            Metric::Pleasantness | Metric::Eventfulness => Some((0.0, 1.0)),
            Metric::Birds | Metric::Human | Metric::Vehicles => Some((0.0, 100.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangePolicy {
    /// Span the present values (padded when degenerate).
    Auto,
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorScale {
    /// Low = red, middle = yellow, high = green.
    #[default]
    RedGreen,
    Grayscale,
}

impl ColorScale {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "red-green" => Some(ColorScale::RedGreen),
            "grayscale" => Some(ColorScale::Grayscale),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircularPlotSpec {
    pub title: String,
    pub days: Vec<NaiveDate>,
    /// `values[day][hour]`, `None` for absent data.
    pub values: Vec<Vec<Option<f64>>>,
    pub value_range: (f64, f64),
    pub color_scale: ColorScale,
    pub legend_label: String,
}

impl CircularPlotSpec {
    pub fn validate(&self) -> Result<(), PlotError> {
        if self.days.is_empty() {
            return Err(PlotError::NoDays);
        }
        if self.value_range.0 >= self.value_range.1 {
            return Err(PlotError::BadRange(self.value_range.0, self.value_range.1));
        }
        if self.values.len() != self.days.len() {
            return Err(PlotError::BadGrid(self.values.len()));
        }
        for row in &self.values {
            if row.len() != SECTORS_PER_RING {
                return Err(PlotError::BadGrid(row.len()));
            }
        }
        Ok(())
    }
}

/// Assembles the day-ring x hour-sector grid for one metric.
pub fn build_plot_spec(
    aggregates: &[PeriodAggregate],
    metric: Metric,
    range: RangePolicy,
) -> Result<CircularPlotSpec, PlotError> {
    let mut days: Vec<NaiveDate> = aggregates
        .iter()
        .map(|a| a.bucket_start_local.date())
        .collect();
    days.sort();
    days.dedup();
    if days.is_empty() {
        return Err(PlotError::NoDays);
    }

    let mut values = vec![vec![None; SECTORS_PER_RING]; days.len()];
    for a in aggregates {
        let day_idx = days
            .binary_search(&a.bucket_start_local.date())
            .expect("date collected above");
        let hour = a.bucket_start_local.hour() as usize;
        values[day_idx][hour] = metric.value(a);
    }

    let value_range = match range {
        RangePolicy::Fixed(lo, hi) => {
            if lo >= hi {
                return Err(PlotError::BadRange(lo, hi));
            }
            (lo, hi)
        }
        RangePolicy::Auto => {
            let present: Vec<f64> = values.iter().flatten().filter_map(|v| *v).collect();
            if present.is_empty() {
                (0.0, 1.0)
            } else {
                let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo < hi {
                    (lo, hi)
                } else {
                    (lo - 0.5, hi + 0.5)
                }
            }
        }
    };

    let subject = aggregates
        .first()
        .map(|a| a.subject.clone())
        .unwrap_or_default();
    let spec = CircularPlotSpec {
        title: format!("{} / {}", subject, metric.label()),
        days,
        values,
        value_range,
        color_scale: ColorScale::default(),
        legend_label: metric.label().to_string(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Color for a normalized position `t` in [0, 1] on a scale.
pub fn scale_color(scale: ColorScale, t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    match scale {
        ColorScale::RedGreen => {
            // hue ramp 0 (red) -> 120 (green) at fixed saturation/value
            let hue = 120.0 * t;
            hsv_to_rgb(hue, 0.85, 0.90)
        }
        ColorScale::Grayscale => {
            let v = (255.0 * t).round() as u8;
            (v, v, v)
        }
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, x, c),
        3 => (0.0, c, x),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to8 = |u: f64| ((u + m) * 255.0).round() as u8;
    (to8(r), to8(g), to8(b))
}

const NEUTRAL_FILL: &str = "#c8c8c8";

/// Geometry of one sector: radii and angles (degrees clockwise from 12
/// o'clock). Exposed so tests can check coverage without parsing paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry {
    pub day_index: usize,
    pub hour: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub angle_start_deg: f64,
    pub angle_end_deg: f64,
}

const CANVAS_W: f64 = 720.0;
const CANVAS_H: f64 = 780.0;
const CENTER_X: f64 = 360.0;
const CENTER_Y: f64 = 390.0;
const HOLE_RADIUS: f64 = 55.0;
const MAX_RADIUS: f64 = 285.0;

/// Sector geometry for every `(day, hour)` cell of a spec.
pub fn sector_geometry(spec: &CircularPlotSpec) -> Vec<SectorGeometry> {
    let rings = spec.days.len();
    let thickness = (MAX_RADIUS - HOLE_RADIUS) / rings as f64;
    let mut out = Vec::with_capacity(rings * SECTORS_PER_RING);
    for day_index in 0..rings {
        let r_inner = HOLE_RADIUS + day_index as f64 * thickness;
        for hour in 0..SECTORS_PER_RING {
            out.push(SectorGeometry {
                day_index,
                hour,
                r_inner,
                r_outer: r_inner + thickness,
                angle_start_deg: hour as f64 * 360.0 / SECTORS_PER_RING as f64,
                angle_end_deg: (hour + 1) as f64 * 360.0 / SECTORS_PER_RING as f64,
            });
        }
    }
    out
}

fn polar(r: f64, angle_deg: f64) -> (f64, f64) {
    let a = angle_deg.to_radians();
    (CENTER_X + r * a.sin(), CENTER_Y - r * a.cos())
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the plot as a standalone SVG document.
pub fn render_svg(spec: &CircularPlotSpec) -> Result<String, PlotError> {
    spec.validate()?;
    let (lo, hi) = spec.value_range;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_W}\" height=\"{CANVAS_H}\" \
         viewBox=\"0 0 {CANVAS_W} {CANVAS_H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{CANVAS_W}\" height=\"{CANVAS_H}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{CENTER_X}\" y=\"34\" font-family=\"sans-serif\" font-size=\"20\" \
         text-anchor=\"middle\">{}</text>\n",
        xml_escape(&spec.title)
    ));

    for g in sector_geometry(spec) {
        let fill = match spec.values[g.day_index][g.hour] {
            Some(v) => {
                let t = (v - lo) / (hi - lo);
                let (r, gr, b) = scale_color(spec.color_scale, t);
                format!("#{r:02x}{gr:02x}{b:02x}")
            }
            None => NEUTRAL_FILL.to_string(),
        };
        let (x0, y0) = polar(g.r_inner, g.angle_start_deg);
        let (x1, y1) = polar(g.r_outer, g.angle_start_deg);
        let (x2, y2) = polar(g.r_outer, g.angle_end_deg);
        let (x3, y3) = polar(g.r_inner, g.angle_end_deg);
        svg.push_str(&format!(
            "<path d=\"M {} {} L {} {} A {} {} 0 0 1 {} {} L {} {} A {} {} 0 0 0 {} {} Z\" \
             fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"0.4\"/>\n",
            fmt(x0),
            fmt(y0),
            fmt(x1),
            fmt(y1),
            fmt(g.r_outer),
            fmt(g.r_outer),
            fmt(x2),
            fmt(y2),
            fmt(x3),
            fmt(y3),
            fmt(g.r_inner),
            fmt(g.r_inner),
            fmt(x0),
            fmt(y0),
            fill
        ));
    }

    // hour labels at the cardinal positions
    for hour in [0_usize, 6, 12, 18] {
        let angle = hour as f64 * 15.0;
        let (x, y) = polar(MAX_RADIUS + 18.0, angle);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
             text-anchor=\"middle\" dominant-baseline=\"central\">{hour}</text>\n",
            fmt(x),
            fmt(y)
        ));
    }

    // ring orientation note
    svg.push_str(&format!(
        "<text x=\"{CENTER_X}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">rings: {} (inner) to {} (outer)</text>\n",
        CANVAS_H - 60.0,
        spec.days[0],
        spec.days[spec.days.len() - 1]
    ));

    // legend: gradient bar of 40 swatches plus range labels
    let legend_w = 360.0;
    let legend_x = CENTER_X - legend_w / 2.0;
    let legend_y = CANVAS_H - 44.0;
    let n = 40;
    for i in 0..n {
        let t = (i as f64 + 0.5) / f64::from(n);
        let (r, g, b) = scale_color(spec.color_scale, t);
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"14\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>\n",
            fmt(legend_x + f64::from(i) * legend_w / f64::from(n)),
            fmt(legend_y),
            fmt(legend_w / f64::from(n) + 0.5)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"end\">{}</text>\n",
        fmt(legend_x - 8.0),
        fmt(legend_y + 11.0),
        fmt_value(lo)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"start\">{}</text>\n",
        fmt(legend_x + legend_w + 8.0),
        fmt(legend_y + 11.0),
        fmt_value(hi)
    ));
    svg.push_str(&format!(
        "<text x=\"{CENTER_X}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">{}</text>\n",
        legend_y + 30.0,
        xml_escape(&spec.legend_label)
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_value(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// A small fixed spec used by documentation and the golden-file test:
/// two days, 48 distinct values, one absent sector.
pub fn demo_spec() -> CircularPlotSpec {
    let days = vec![
        NaiveDate::from_ymd_opt(2025, 7, 6).expect("date"),
        NaiveDate::from_ymd_opt(2025, 7, 7).expect("date"),
    ];
    let mut values = vec![vec![None; SECTORS_PER_RING]; 2];
    for (d, row) in values.iter_mut().enumerate() {
        for (h, v) in row.iter_mut().enumerate() {
            *v = Some((d * SECTORS_PER_RING + h) as f64);
        }
    }
    values[1][5] = None;
    CircularPlotSpec {
        title: "demo plot".into(),
        days,
        values,
        value_range: (0.0, 47.0),
        color_scale: ColorScale::RedGreen,
        legend_label: "demo value".into(),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
