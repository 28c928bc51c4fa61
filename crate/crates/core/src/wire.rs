//! Line-delimited wire protocol between node and server.
//!
//! All messages are single UTF-8 lines over a reliable ordered byte
//! stream. A connection opens with `HELLO <sensor_id> <version>`, then
//! carries record lines; the server answers each record with
//! `ACK <sensor_id> <timestamp>` or `ERROR <code> <text>`.

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::record::{decode_record, encode_record, MeasurementRecord, RecordError, SensorId};

/// The protocol version spoken by this crate.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("malformed {kind} message: {reason}")]
    Malformed { kind: &'static str, reason: String },
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Error codes carried by `ERROR` replies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    /// Message sequence violation; the server closes the connection.
    Protocol,
    /// Bad record contents; the connection stays open.
    Validation,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Protocol => "protocol",
            ErrorCode::Validation => "validation",
        }
    }
}

impl std::str::FromStr for ErrorCode {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "protocol" => Ok(ErrorCode::Protocol),
            "validation" => Ok(ErrorCode::Validation),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Hello {
        sensor_id: SensorId,
        protocol_version: u32,
    },
    Record(MeasurementRecord),
    Ack {
        sensor_id: SensorId,
        timestamp: DateTime<Utc>,
    },
    Error {
        code: ErrorCode,
        text: String,
    },
}

/// Renders a message as its wire line, without the trailing newline.
pub fn encode_message(msg: &WireMessage) -> String {
    match msg {
        WireMessage::Hello {
            sensor_id,
            protocol_version,
        } => format!("HELLO {sensor_id} {protocol_version}"),
        WireMessage::Record(r) => encode_record(r),
        WireMessage::Ack {
            sensor_id,
            timestamp,
        } => format!(
            "ACK {sensor_id} {}",
            timestamp.to_rfc3339_opts(SecondsFormat::Secs, true)
        ),
        WireMessage::Error { code, text } => format!("ERROR {} {text}", code.as_str()),
    }
}

/// Parses one wire line. Lines starting with a known keyword are control
/// messages; anything else is treated as a record line.
pub fn parse_message(line: &str) -> Result<WireMessage, WireError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    if let Some(rest) = line.strip_prefix("HELLO ") {
        let mut it = rest.split(' ');
        let id = it.next().unwrap_or_default();
        let ver = it.next().ok_or_else(|| WireError::Malformed {
            kind: "HELLO",
            reason: "missing protocol version".into(),
        })?;
        if it.next().is_some() {
            return Err(WireError::Malformed {
                kind: "HELLO",
                reason: "trailing fields".into(),
            });
        }
        let protocol_version = ver.parse().map_err(|_| WireError::Malformed {
            kind: "HELLO",
            reason: format!("bad version {ver:?}"),
        })?;
        Ok(WireMessage::Hello {
            sensor_id: SensorId::new(id)?,
            protocol_version,
        })
    } else if let Some(rest) = line.strip_prefix("ACK ") {
        let (id, ts) = rest.split_once(' ').ok_or_else(|| WireError::Malformed {
            kind: "ACK",
            reason: "missing timestamp".into(),
        })?;
        let timestamp = DateTime::parse_from_rfc3339(ts)
            .map_err(|e| WireError::Malformed {
                kind: "ACK",
                reason: format!("bad timestamp {ts:?}: {e}"),
            })?
            .with_timezone(&Utc);
        Ok(WireMessage::Ack {
            sensor_id: SensorId::new(id)?,
            timestamp,
        })
    } else if let Some(rest) = line.strip_prefix("ERROR ") {
        let (code, text) = rest.split_once(' ').unwrap_or((rest, ""));
        let code = code.parse().map_err(|_| WireError::Malformed {
            kind: "ERROR",
            reason: format!("unknown code {code:?}"),
        })?;
        Ok(WireMessage::Error {
            code,
            text: text.to_string(),
        })
    } else {
        Ok(WireMessage::Record(decode_record(line)?))
    }
}
