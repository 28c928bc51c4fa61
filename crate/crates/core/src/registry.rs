//! Deployment registry: which sensor sat at which spot, and when.
//!
//! Sensors can be relocated, so a spot's data may come from different
//! sensors over time and a spot query must resolve each record's sensor
//! through the interval that covers its timestamp.

use std::path::Path;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::record::{RecordError, SensorId};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad registry row {row} in {path}: {reason}")]
    BadRow {
        path: String,
        row: usize,
        reason: String,
    },
    #[error("sensor {sensor} has overlapping intervals (rows {row_a} and {row_b})")]
    Overlap {
        sensor: String,
        row_a: usize,
        row_b: usize,
    },
    #[error("entry row {row} references unknown spot {spot}")]
    UnknownSpot { row: usize, spot: String },
    #[error("interval start {start} is not before end {end} (row {row})")]
    EmptyInterval {
        row: usize,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spot {
    pub id: String,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentEntry {
    pub sensor_id: SensorId,
    pub spot_id: String,
    pub start: DateTime<Utc>,
    /// `None` means the deployment is still open.
    pub end: Option<DateTime<Utc>>,
}

impl DeploymentEntry {
    pub fn covers(&self, ts: DateTime<Utc>) -> bool {
        ts >= self.start && self.end.map_or(true, |e| ts < e)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeploymentRegistry {
    entries: Vec<DeploymentEntry>,
    spots: Vec<Spot>,
}

impl DeploymentRegistry {
    pub fn new(entries: Vec<DeploymentEntry>, spots: Vec<Spot>) -> Result<Self, RegistryError> {
        let reg = Self { entries, spots };
        reg.validate()?;
        Ok(reg)
    }

    fn validate(&self) -> Result<(), RegistryError> {
        for (row, e) in self.entries.iter().enumerate() {
            if let Some(end) = e.end {
                if e.start >= end {
                    return Err(RegistryError::EmptyInterval {
                        row,
                        start: e.start,
                        end,
                    });
                }
            }
            if !self.spots.iter().any(|s| s.id == e.spot_id) {
                return Err(RegistryError::UnknownSpot {
                    row,
                    spot: e.spot_id.clone(),
                });
            }
        }
        for (i, a) in self.entries.iter().enumerate() {
            for (j, b) in self.entries.iter().enumerate().skip(i + 1) {
                if a.sensor_id != b.sensor_id {
                    continue;
                }
                let a_end = a.end.unwrap_or(DateTime::<Utc>::MAX_UTC);
                let b_end = b.end.unwrap_or(DateTime::<Utc>::MAX_UTC);
                if a.start < b_end && b.start < a_end {
                    return Err(RegistryError::Overlap {
                        sensor: a.sensor_id.to_string(),
                        row_a: i,
                        row_b: j,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[DeploymentEntry] {
        &self.entries
    }

    pub fn spots(&self) -> &[Spot] {
        &self.spots
    }

    pub fn spot(&self, spot_id: &str) -> Option<&Spot> {
        self.spots.iter().find(|s| s.id == spot_id)
    }

    pub fn knows_sensor(&self, sensor_id: &SensorId) -> bool {
        self.entries.iter().any(|e| &e.sensor_id == sensor_id)
    }

    /// The spot a sensor occupied at `ts`, if any.
    pub fn spot_of(&self, sensor_id: &SensorId, ts: DateTime<Utc>) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| &e.sensor_id == sensor_id && e.covers(ts))
            .map(|e| e.spot_id.as_str())
    }

    /// All deployment intervals contributing to a spot.
    pub fn deployments_at(&self, spot_id: &str) -> Vec<&DeploymentEntry> {
        self.entries
            .iter()
            .filter(|e| e.spot_id == spot_id)
            .collect()
    }

    /// Loads `<path>` (deployments) and the sibling `spots.csv`.
    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let spots_path = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("spots.csv");
        let spots = load_spots(&spots_path)?;
        let entries = load_entries(path)?;
        Self::new(entries, spots)
    }

    /// Writes `deployments.csv` and `spots.csv` under `dir`; returns the
    /// deployments path (the one the CLI takes as `--registry`).
    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf, RegistryError> {
        let io_err = |path: &Path, source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let dep_path = dir.join("deployments.csv");
        let mut w = csv::Writer::from_path(&dep_path)
            .map_err(|e| csv_io(&dep_path, e))?;
        w.write_record(["sensor_id", "spot_id", "start_utc", "end_utc"])
            .map_err(|e| csv_io(&dep_path, e))?;
        for e in &self.entries {
            w.write_record([
                e.sensor_id.as_str(),
                &e.spot_id,
                &e.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                &e.end
                    .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
                    .unwrap_or_default(),
            ])
            .map_err(|e2| csv_io(&dep_path, e2))?;
        }
        w.flush().map_err(|e| io_err(&dep_path, e))?;

        let spots_path = dir.join("spots.csv");
        let mut w = csv::Writer::from_path(&spots_path)
            .map_err(|e| csv_io(&spots_path, e))?;
        w.write_record(["spot_id", "name", "description"])
            .map_err(|e| csv_io(&spots_path, e))?;
        for s in &self.spots {
            w.write_record([&s.id, &s.name, &s.description])
                .map_err(|e| csv_io(&spots_path, e))?;
        }
        w.flush().map_err(|e| io_err(&spots_path, e))?;
        Ok(dep_path)
    }

    /// The deployment of Table 1: five sensors over seven spots, with
    /// sensors 1 and 3 relocated at the 2025-07-03 00:00 local boundary
    /// (2025-07-02T22:00:00Z).
    pub fn table1_fixture() -> Self {
        let t = |s: &str| {
            DateTime::parse_from_rfc3339(s)
                .expect("fixture timestamp")
                .with_timezone(&Utc)
        };
        let deploy = t("2025-03-01T00:00:00Z");
        let relocation = t("2025-07-02T22:00:00Z");
        let spot = |id: &str, name: &str, description: &str| Spot {
            id: id.into(),
            name: name.into(),
            description: description.into(),
        };
        let entry = |sensor: &str, spot: &str, start, end| DeploymentEntry {
            sensor_id: SensorId::new(sensor).expect("fixture sensor id"),
            spot_id: spot.into(),
            start,
            end,
        };
        Self::new(
            vec![
                entry("s1", "1", deploy, Some(relocation)),
                entry("s1", "2", relocation, None),
                entry("s2", "3", deploy, None),
                entry("s3", "4", deploy, Some(relocation)),
                entry("s3", "5", relocation, None),
                entry("s4", "6", deploy, None),
                entry("s5", "7", deploy, None),
            ],
            vec![
                spot("1", "Calle Irunlarrea", "Hospital and University area, intermittent traffic"),
                spot("2", "Monumento del Encierro", "Pedestrian area with commercial activity"),
                spot("3", "Avenida Bayona", "Residential area with nightclubs and traffic"),
                spot("4", "Rincón de la Aduana", "Pedestrian area with restricted traffic"),
                spot("5", "Labrit con Calle Amaya", "Urban area with traffic"),
                spot("6", "Plaza Consistorial", "Pedestrian area with very restricted traffic"),
                spot("7", "Paseo Sarasate", "Pedestrian area with restricted traffic"),
            ],
        )
        .expect("table 1 fixture is valid")
    }
}

fn csv_io(path: &Path, e: csv::Error) -> RegistryError {
    RegistryError::BadRow {
        path: path.display().to_string(),
        row: 0,
        reason: e.to_string(),
    }
}

fn load_spots(path: &Path) -> Result<Vec<Spot>, RegistryError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => RegistryError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => csv_io(path, e),
    })?;
    let mut spots = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        if rec.len() != 3 {
            return Err(RegistryError::BadRow {
                path: path.display().to_string(),
                row,
                reason: format!("expected 3 columns, got {}", rec.len()),
            });
        }
        spots.push(Spot {
            id: rec[0].to_string(),
            name: rec[1].to_string(),
            description: rec[2].to_string(),
        });
    }
    Ok(spots)
}

fn load_entries(path: &Path) -> Result<Vec<DeploymentEntry>, RegistryError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => RegistryError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => csv_io(path, e),
    })?;
    let mut entries = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_io(path, e))?;
        if rec.len() != 4 {
            return Err(RegistryError::BadRow {
                path: path.display().to_string(),
                row,
                reason: format!("expected 4 columns, got {}", rec.len()),
            });
        }
        let bad = |reason: String| RegistryError::BadRow {
            path: path.display().to_string(),
            row,
            reason,
        };
        let start = DateTime::parse_from_rfc3339(&rec[2])
            .map_err(|e| bad(format!("bad start_utc {:?}: {e}", &rec[2])))?
            .with_timezone(&Utc);
        let end = if rec[3].is_empty() {
            None
        } else {
            Some(
                DateTime::parse_from_rfc3339(&rec[3])
                    .map_err(|e| bad(format!("bad end_utc {:?}: {e}", &rec[3])))?
                    .with_timezone(&Utc),
            )
        };
        entries.push(DeploymentEntry {
            sensor_id: SensorId::new(&rec[0])?,
            spot_id: rec[1].to_string(),
            start,
            end,
        });
    }
    Ok(entries)
}
