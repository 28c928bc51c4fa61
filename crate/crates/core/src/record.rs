//! The measurement record: one 3-second observation from one sensor.
//!
//! Records are the wire and storage unit. All real fields are quantized
//! to four decimals on construction so the canonical line format round
//! trips bit-exactly. By construction a record carries derived metrics
//! only; there is no field that could hold audio.

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::estimator::{EstimateError, PerceptualPair, SourceScores};

/// Number of comma-separated fields in a record line.
pub const RECORD_FIELDS: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("invalid sensor id {0:?}: need 1..=32 chars from [A-Za-z0-9_-]")]
    InvalidSensorId(String),
    #[error("malformed record line at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("{field} out of range: {value}")]
    OutOfRange { field: &'static str, value: f64 },
}

impl From<EstimateError> for RecordError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::OutOfRange { field, value } => RecordError::OutOfRange { field, value },
        }
    }
}

/// Validated sensor identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SensorId(String);

impl SensorId {
    pub fn new(id: impl Into<String>) -> Result<Self, RecordError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 32
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        if ok {
            Ok(Self(id))
        } else {
            Err(RecordError::InvalidSensorId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for SensorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Rounds to the four decimals carried on the wire.
fn quantize(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub sensor_id: SensorId,
    pub timestamp: DateTime<Utc>,
    pub laeq_db: f64,
    pub perception: PerceptualPair,
    pub sources: SourceScores,
}

impl MeasurementRecord {
    pub fn new(
        sensor_id: SensorId,
        timestamp: DateTime<Utc>,
        laeq_db: f64,
        perception: PerceptualPair,
        sources: SourceScores,
    ) -> Result<Self, RecordError> {
        if !laeq_db.is_finite() {
            return Err(RecordError::OutOfRange {
                field: "laeq",
                value: laeq_db,
            });
        }
        let perception = PerceptualPair::new(
            quantize(perception.pleasantness()),
            quantize(perception.eventfulness()),
        )?;
        let sources = SourceScores::new(
            quantize(sources.birds()),
            quantize(sources.human()),
            quantize(sources.vehicles()),
            quantize(sources.music()),
        )?;
        Ok(Self {
            sensor_id,
            timestamp,
            laeq_db: quantize(laeq_db),
            perception,
            sources,
        })
    }
}

/// Canonical line format, without trailing newline:
/// `sensor_id,RFC3339-UTC,laeq,pleasantness,eventfulness,birds,human,vehicles,music`.
pub fn encode_record(r: &MeasurementRecord) -> String {
    format!(
        "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
        r.sensor_id,
        r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
        r.laeq_db,
        r.perception.pleasantness(),
        r.perception.eventfulness(),
        r.sources.birds(),
        r.sources.human(),
        r.sources.vehicles(),
        r.sources.music()
    )
}

/// Parses and validates one record line. Parse failures report the byte
/// offset of the offending field; range failures name the field.
pub fn decode_record(line: &str) -> Result<MeasurementRecord, RecordError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let mut fields = Vec::with_capacity(RECORD_FIELDS);
    let mut offset = 0;
    for part in line.split(',') {
        fields.push((offset, part));
        offset += part.len() + 1;
    }
    if fields.len() != RECORD_FIELDS {
        return Err(RecordError::Malformed {
            offset: 0,
            reason: format!("expected {RECORD_FIELDS} fields, got {}", fields.len()),
        });
    }

    let sensor_id = SensorId::new(fields[0].1)?;
    let (ts_off, ts_str) = fields[1];
    let timestamp = DateTime::parse_from_rfc3339(ts_str)
        .map_err(|e| RecordError::Malformed {
            offset: ts_off,
            reason: format!("bad timestamp {ts_str:?}: {e}"),
        })?
        .with_timezone(&Utc);

    let real = |idx: usize, name: &'static str| -> Result<f64, RecordError> {
        let (off, s) = fields[idx];
        s.parse::<f64>().map_err(|_| RecordError::Malformed {
            offset: off,
            reason: format!("bad number {s:?} for {name}"),
        })
    };

    let laeq_db = real(2, "laeq")?;
    if !laeq_db.is_finite() {
        return Err(RecordError::OutOfRange {
            field: "laeq",
            value: laeq_db,
        });
    }
    let perception = PerceptualPair::new(real(3, "pleasantness")?, real(4, "eventfulness")?)?;
    let sources = SourceScores::new(
        real(5, "birds")?,
        real(6, "human")?,
        real(7, "vehicles")?,
        real(8, "music")?,
    )?;

    Ok(MeasurementRecord {
        sensor_id,
        timestamp,
        laeq_db,
        perception,
        sources,
    })
}
