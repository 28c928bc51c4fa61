//! Append-only record storage, one text log per sensor.
//!
//! Logs hold wire-format lines in arrival order. Deduplication by
//! `(sensor_id, timestamp)` happens at append time against an in-memory
//! index rebuilt by scanning on startup; a trailing partial line left by
//! a crash is truncated away on open. Reads always parse the file fresh
//! and return timestamp-sorted records, so a reader sees a consistent
//! prefix of each log regardless of concurrent appends.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::record::{decode_record, encode_record, MeasurementRecord, SensorId};
use crate::registry::DeploymentRegistry;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage I/O on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown sensor {0}")]
    UnknownSensor(String),
    #[error("unknown spot {0}")]
    UnknownSpot(String),
    #[error("log {path} holds a record for {found}, expected {expected}")]
    MisfiledRecord {
        path: String,
        found: String,
        expected: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> StorageError {
    StorageError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct SensorLog {
    path: PathBuf,
    writer: BufWriter<File>,
    seen: std::collections::HashSet<DateTime<Utc>>,
}

/// Store of per-sensor append-only logs under one directory.
pub struct LogStore {
    root: PathBuf,
    logs: Mutex<HashMap<SensorId, Arc<Mutex<SensorLog>>>>,
}

/// What a read request addresses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Sensor(SensorId),
    Spot(String),
}

impl std::fmt::Display for Subject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subject::Sensor(id) => write!(f, "sensor:{id}"),
            Subject::Spot(id) => write!(f, "spot:{id}"),
        }
    }
}

impl LogStore {
    /// Opens (or creates) a storage directory and rebuilds dedup indexes.
    pub fn open(root: &Path) -> Result<Self, StorageError> {
        std::fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let store = Self {
            root: root.to_path_buf(),
            logs: Mutex::new(HashMap::new()),
        };
        for entry in std::fs::read_dir(root).map_err(|e| io_err(root, e))? {
            let entry = entry.map_err(|e| io_err(root, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("log") {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if let Ok(id) = SensorId::new(stem) {
                    store.handle(&id)?;
                }
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sensor_ids(&self) -> Vec<SensorId> {
        let mut ids: Vec<SensorId> = self.logs.lock().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn handle(&self, sensor: &SensorId) -> Result<Arc<Mutex<SensorLog>>, StorageError> {
        let mut logs = self.logs.lock().unwrap();
        if let Some(h) = logs.get(sensor) {
            return Ok(h.clone());
        }
        let path = self.root.join(format!("{sensor}.log"));
        let mut seen = std::collections::HashSet::new();
        let mut keep_len = 0_u64;
        if path.exists() {
            let mut text = String::new();
            File::open(&path)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| io_err(&path, e))?;
            let mut offset = 0usize;
            for line in text.split_inclusive('\n') {
                if !line.ends_with('\n') {
                    break; // partial tail from an interrupted append
                }
                if let Ok(r) = decode_record(line) {
                    if &r.sensor_id != sensor {
                        return Err(StorageError::MisfiledRecord {
                            path: path.display().to_string(),
                            found: r.sensor_id.to_string(),
                            expected: sensor.to_string(),
                        });
                    }
                    seen.insert(r.timestamp);
                }
                offset += line.len();
            }
            keep_len = offset as u64;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .write(true)
            .read(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        file.set_len(keep_len).map_err(|e| io_err(&path, e))?;
        file.seek(SeekFrom::End(0)).map_err(|e| io_err(&path, e))?;
        let log = Arc::new(Mutex::new(SensorLog {
            path,
            writer: BufWriter::new(file),
            seen,
        }));
        logs.insert(sensor.clone(), log.clone());
        Ok(log)
    }

    /// Appends a record unless its `(sensor, timestamp)` was seen before.
    /// Returns `true` when the record was stored, `false` on duplicate.
    /// The line is flushed before returning, so an acknowledgment sent
    /// after this call never races the write.
    pub fn append(&self, record: &MeasurementRecord) -> Result<bool, StorageError> {
        let handle = self.handle(&record.sensor_id)?;
        let mut log = handle.lock().unwrap();
        if !log.seen.insert(record.timestamp) {
            return Ok(false);
        }
        let line = encode_record(record);
        let path = log.path.clone();
        log.writer
            .write_all(line.as_bytes())
            .and_then(|_| log.writer.write_all(b"\n"))
            .and_then(|_| log.writer.flush())
            .map_err(|e| io_err(&path, e))?;
        Ok(true)
    }

    fn read_sensor_raw(
        &self,
        sensor: &SensorId,
        t0: DateTime<Utc>,
        t1: DateTime<Utc>,
    ) -> Result<Vec<MeasurementRecord>, StorageError> {
        let path = self.root.join(format!("{sensor}.log"));
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut text = String::new();
        File::open(&path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| io_err(&path, e))?;
        let mut out = Vec::new();
        for line in text.split_inclusive('\n') {
            if !line.ends_with('\n') {
                break;
            }
            if let Ok(r) = decode_record(line) {
                if r.timestamp >= t0 && r.timestamp < t1 {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    /// Records for a sensor or a spot over `[t0, t1)`, timestamp-sorted.
    ///
    /// Spot queries resolve relocations: a sensor's records contribute
    /// only where the registry maps that sensor to the spot at the
    /// record's timestamp.
    pub fn read_records(
        &self,
        subject: &Subject,
        t0: DateTime<Utc>,
        t1: DateTime<Utc>,
        registry: &DeploymentRegistry,
    ) -> Result<Vec<MeasurementRecord>, StorageError> {
        let mut out = match subject {
            Subject::Sensor(id) => {
                let has_log = self.root.join(format!("{id}.log")).exists();
                if !has_log && !registry.knows_sensor(id) {
                    return Err(StorageError::UnknownSensor(id.to_string()));
                }
                self.read_sensor_raw(id, t0, t1)?
            }
            Subject::Spot(spot_id) => {
                if registry.spot(spot_id).is_none() {
                    return Err(StorageError::UnknownSpot(spot_id.clone()));
                }
                let mut acc = Vec::new();
                for dep in registry.deployments_at(spot_id) {
                    let lo = dep.start.max(t0);
                    let hi = dep.end.map_or(t1, |e| e.min(t1));
                    if lo >= hi {
                        continue;
                    }
                    acc.extend(self.read_sensor_raw(&dep.sensor_id, lo, hi)?);
                }
                acc
            }
        };
        out.sort_by_key(|r| r.timestamp);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{PerceptualPair, SourceScores};
    use chrono::TimeZone;

    fn record(sensor: &str, ts: DateTime<Utc>, laeq: f64) -> MeasurementRecord {
        MeasurementRecord::new(
            SensorId::new(sensor).unwrap(),
            ts,
            laeq,
            PerceptualPair::new(0.0, 0.0).unwrap(),
            SourceScores::new(0.0, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap()
    }

    fn ts(h: u32, m: u32, s: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 7, 6, h, m, s).unwrap()
    }

    #[test]
    fn duplicate_append_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let r = record("s1", ts(12, 0, 0), 80.0);
        assert!(store.append(&r).unwrap());
        assert!(!store.append(&r).unwrap());
        let reg = DeploymentRegistry::table1_fixture();
        let got = store
            .read_records(
                &Subject::Sensor(SensorId::new("s1").unwrap()),
                ts(0, 0, 0),
                ts(23, 59, 59),
                &reg,
            )
            .unwrap();
        assert_eq!(got, vec![r]);
    }

    #[test]
    fn reads_come_back_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        for &(h, m, s) in &[(12u32, 0u32, 6u32), (12, 0, 0), (12, 0, 3)] {
            store.append(&record("s1", ts(h, m, s), 70.0)).unwrap();
        }
        let reg = DeploymentRegistry::table1_fixture();
        let got = store
            .read_records(
                &Subject::Sensor(SensorId::new("s1").unwrap()),
                ts(0, 0, 0),
                ts(23, 0, 0),
                &reg,
            )
            .unwrap();
        let stamps: Vec<_> = got.iter().map(|r| r.timestamp).collect();
        assert_eq!(stamps, vec![ts(12, 0, 0), ts(12, 0, 3), ts(12, 0, 6)]);
    }

    #[test]
    fn dedup_index_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let r = record("s1", ts(12, 0, 0), 80.0);
        {
            let store = LogStore::open(dir.path()).unwrap();
            assert!(store.append(&r).unwrap());
        }
        let store = LogStore::open(dir.path()).unwrap();
        assert!(!store.append(&r).unwrap());
    }

    #[test]
    fn partial_tail_is_truncated_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let r = record("s1", ts(12, 0, 0), 80.0);
        let path = dir.path().join("s1.log");
        std::fs::write(
            &path,
            format!("{}\ns1,2025-07-06T12:00:03Z,81.00", encode_record(&r)),
        )
        .unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        // the truncated record can be appended again afterwards
        assert!(store.append(&record("s1", ts(12, 0, 3), 81.0)).unwrap());
        let reg = DeploymentRegistry::table1_fixture();
        let got = store
            .read_records(
                &Subject::Sensor(SensorId::new("s1").unwrap()),
                ts(0, 0, 0),
                ts(23, 0, 0),
                &reg,
            )
            .unwrap();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn spot_query_resolves_relocation() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let reg = DeploymentRegistry::table1_fixture();
        // sensor 3: one record in May (spot 4 era), one in July (spot 5 era)
        let may = Utc.with_ymd_and_hms(2025, 5, 15, 12, 0, 0).unwrap();
        let july = Utc.with_ymd_and_hms(2025, 7, 6, 12, 0, 0).unwrap();
        store.append(&record("s3", may, 60.0)).unwrap();
        store.append(&record("s3", july, 78.0)).unwrap();

        let whole_range = (
            Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap(),
        );
        let spot4 = store
            .read_records(&Subject::Spot("4".into()), whole_range.0, whole_range.1, &reg)
            .unwrap();
        assert_eq!(spot4.iter().map(|r| r.timestamp).collect::<Vec<_>>(), vec![may]);
        let spot5 = store
            .read_records(&Subject::Spot("5".into()), whole_range.0, whole_range.1, &reg)
            .unwrap();
        assert_eq!(spot5.iter().map(|r| r.timestamp).collect::<Vec<_>>(), vec![july]);
    }

    #[test]
    fn unknown_ids_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let reg = DeploymentRegistry::table1_fixture();
        assert!(matches!(
            store.read_records(
                &Subject::Sensor(SensorId::new("ghost").unwrap()),
                ts(0, 0, 0),
                ts(1, 0, 0),
                &reg
            ),
            Err(StorageError::UnknownSensor(_))
        ));
        assert!(matches!(
            store.read_records(&Subject::Spot("99".into()), ts(0, 0, 0), ts(1, 0, 0), &reg),
            Err(StorageError::UnknownSpot(_))
        ));
    }

    #[test]
    fn appends_only_extend_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        let path = dir.path().join("s1.log");
        let mut prefix = Vec::new();
        for i in 0..50_u32 {
            store
                .append(&record("s1", ts(12, 0, 0) + chrono::Duration::seconds(3 * i64::from(i)), 70.0))
                .unwrap();
            let now = std::fs::read(&path).unwrap();
            assert!(now.len() > prefix.len(), "file did not grow");
            assert_eq!(&now[..prefix.len()], &prefix[..], "prior content changed");
            prefix = now;
        }
    }

    #[test]
    fn empty_range_reads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::open(dir.path()).unwrap();
        store.append(&record("s1", ts(12, 0, 0), 80.0)).unwrap();
        let reg = DeploymentRegistry::table1_fixture();
        let got = store
            .read_records(
                &Subject::Sensor(SensorId::new("s1").unwrap()),
                ts(13, 0, 0),
                ts(13, 0, 0),
                &reg,
            )
            .unwrap();
        assert!(got.is_empty());
    }
}
