//! Ingestion server: accepts node connections, validates, dedups, stores.
//!
//! One thread per connection. Appends to a single sensor's log are
//! serialized inside [`LogStore`]; different sensors append in parallel.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::record::SensorId;
use crate::registry::{DeploymentRegistry, RegistryError};
use crate::storage::{LogStore, StorageError};
use crate::wire::{encode_message, parse_message, ErrorCode, WireMessage, PROTOCOL_VERSION};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Default)]
pub struct ServerStats {
    pub records_stored: AtomicU64,
    pub records_deduplicated: AtomicU64,
    pub validation_errors: AtomicU64,
}

/// A running ingestion server; dropping it stops the accept loop.
pub struct Server {
    local_addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<std::thread::JoinHandle<()>>,
    stats: Arc<ServerStats>,
}

impl Server {
    /// Binds `addr`, loads and validates the registry, and starts serving.
    pub fn start(addr: &str, data_dir: &Path, registry_path: &Path) -> Result<Self, ServerError> {
        // fail fast on a bad registry; reads go through the analysis CLI
        let _registry = DeploymentRegistry::load(registry_path)?;
        let store = Arc::new(LogStore::open(data_dir)?);
        let listener = TcpListener::bind(addr).map_err(|e| ServerError::Bind {
            addr: addr.to_string(),
            source: e,
        })?;
        let local_addr = listener.local_addr().map_err(|e| ServerError::Bind {
            addr: addr.to_string(),
            source: e,
        })?;
        listener
            .set_nonblocking(true)
            .map_err(|e| ServerError::Bind {
                addr: addr.to_string(),
                source: e,
            })?;

        let stop = Arc::new(AtomicBool::new(false));
        let stats = Arc::new(ServerStats::default());
        let accept_stop = stop.clone();
        let accept_stats = stats.clone();
        let accept_thread = std::thread::spawn(move || {
            let mut workers = Vec::new();
            while !accept_stop.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _peer)) => {
                        let store = store.clone();
                        let stats = accept_stats.clone();
                        workers.push(std::thread::spawn(move || {
                            let _ = serve_connection(stream, &store, &stats);
                        }));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(10));
                    }
                    Err(_) => break,
                }
            }
            for w in workers {
                let _ = w.join();
            }
        });

        Ok(Self {
            local_addr,
            stop,
            accept_thread: Some(accept_thread),
            stats,
        })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.local_addr
    }

    pub fn stats(&self) -> &ServerStats {
        &self.stats
    }

    /// Signals the accept loop to stop and waits for in-flight
    /// connections to finish.
    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the process is killed; used by the CLI.
    pub fn run_forever(self) -> ! {
        loop {
            std::thread::sleep(Duration::from_secs(3600));
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop_now();
    }
}

fn serve_connection(
    stream: TcpStream,
    store: &LogStore,
    stats: &ServerStats,
) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut hello: Option<SensorId> = None;
    let mut line = String::new();

    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(()); // peer closed
        }
        let msg = match parse_message(&line) {
            Ok(m) => m,
            Err(e) => {
                stats.validation_errors.fetch_add(1, Ordering::Relaxed);
                reply(
                    &mut writer,
                    &WireMessage::Error {
                        code: ErrorCode::Validation,
                        text: e.to_string(),
                    },
                )?;
                continue;
            }
        };
        match msg {
            WireMessage::Hello {
                sensor_id,
                protocol_version,
            } => {
                if protocol_version != PROTOCOL_VERSION {
                    reply(
                        &mut writer,
                        &WireMessage::Error {
                            code: ErrorCode::Protocol,
                            text: format!("unsupported protocol version {protocol_version}"),
                        },
                    )?;
                    return Ok(());
                }
                hello = Some(sensor_id);
            }
            WireMessage::Record(record) => {
                if hello.is_none() {
                    reply(
                        &mut writer,
                        &WireMessage::Error {
                            code: ErrorCode::Protocol,
                            text: "RECORD before HELLO".into(),
                        },
                    )?;
                    return Ok(());
                }
                match store.append(&record) {
                    Ok(stored) => {
                        if stored {
                            stats.records_stored.fetch_add(1, Ordering::Relaxed);
                        } else {
                            stats.records_deduplicated.fetch_add(1, Ordering::Relaxed);
                        }
                        reply(
                            &mut writer,
                            &WireMessage::Ack {
                                sensor_id: record.sensor_id,
                                timestamp: record.timestamp,
                            },
                        )?;
                    }
                    Err(e) => {
                        reply(
                            &mut writer,
                            &WireMessage::Error {
                                code: ErrorCode::Validation,
                                text: e.to_string(),
                            },
                        )?;
                    }
                }
            }
            WireMessage::Ack { .. } | WireMessage::Error { .. } => {
                reply(
                    &mut writer,
                    &WireMessage::Error {
                        code: ErrorCode::Protocol,
                        text: "unexpected message from client".into(),
                    },
                )?;
                return Ok(());
            }
        }
    }
}

fn reply(writer: &mut TcpStream, msg: &WireMessage) -> std::io::Result<()> {
    writer.write_all(encode_message(msg).as_bytes())?;
    writer.write_all(b"\n")?;
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{PerceptualPair, SourceScores};
    use crate::record::{encode_record, MeasurementRecord};
    use chrono::TimeZone;

    fn start_server(dir: &Path) -> Server {
        let reg_path = DeploymentRegistry::table1_fixture()
            .save(&dir.join("registry"))
            .unwrap();
        Server::start("127.0.0.1:0", &dir.join("data"), &reg_path).unwrap()
    }

    fn record(sensor: &str, second: u32, laeq: f64) -> MeasurementRecord {
        MeasurementRecord::new(
            SensorId::new(sensor).unwrap(),
            chrono::Utc
                .with_ymd_and_hms(2025, 7, 6, 12, 0, 0)
                .unwrap()
                + chrono::Duration::seconds(i64::from(second)),
            laeq,
            PerceptualPair::new(0.0, 0.0).unwrap(),
            SourceScores::new(0.0, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap()
    }

    fn send_lines(addr: std::net::SocketAddr, lines: &[String]) -> Vec<String> {
        let stream = TcpStream::connect(addr).unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut writer = stream;
        let mut replies = Vec::new();
        for l in lines {
            writer.write_all(l.as_bytes()).unwrap();
            writer.write_all(b"\n").unwrap();
            writer.flush().unwrap();
            if !l.starts_with("HELLO") {
                let mut reply = String::new();
                reader.read_line(&mut reply).unwrap();
                replies.push(reply.trim_end().to_string());
            }
        }
        replies
    }

    #[test]
    fn duplicate_records_ack_but_store_once() {
        let dir = tempfile::tempdir().unwrap();
        let server = start_server(dir.path());
        let r = record("s1", 0, 80.0);
        let line = encode_record(&r);
        let replies = send_lines(
            server.local_addr(),
            &["HELLO s1 1".to_string(), line.clone(), line],
        );
        assert_eq!(replies.len(), 2);
        assert!(replies.iter().all(|r| r.starts_with("ACK s1 ")));
        assert_eq!(server.stats().records_stored.load(Ordering::Relaxed), 1);
        assert_eq!(
            server.stats().records_deduplicated.load(Ordering::Relaxed),
            1
        );
        server.shutdown();
        let text = std::fs::read_to_string(dir.path().join("data/s1.log")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn record_before_hello_is_a_protocol_error() {
        let dir = tempfile::tempdir().unwrap();
        let server = start_server(dir.path());
        let replies = send_lines(server.local_addr(), &[encode_record(&record("s1", 0, 70.0))]);
        assert!(replies[0].starts_with("ERROR protocol"), "{replies:?}");
        server.shutdown();
    }

    #[test]
    fn validation_error_keeps_connection_open() {
        let dir = tempfile::tempdir().unwrap();
        let server = start_server(dir.path());
        let bad = "s1,2025-07-06T12:00:00Z,80.0000,1.5000,0.0000,0.0000,0.0000,0.0000,0.0000";
        let good = encode_record(&record("s1", 3, 70.0));
        let replies = send_lines(
            server.local_addr(),
            &["HELLO s1 1".to_string(), bad.to_string(), good],
        );
        assert!(replies[0].starts_with("ERROR validation"), "{replies:?}");
        assert!(replies[1].starts_with("ACK s1"), "{replies:?}");
        server.shutdown();
    }

    #[test]
    fn concurrent_sensors_get_separate_ordered_logs() {
        let dir = tempfile::tempdir().unwrap();
        let server = start_server(dir.path());
        let addr = server.local_addr();
        let mut handles = Vec::new();
        for sensor in ["s1", "s2"] {
            handles.push(std::thread::spawn(move || {
                let mut lines = vec![format!("HELLO {sensor} 1")];
                lines.extend((0..50).map(|i| encode_record(&record(sensor, 3 * i, 60.0))));
                send_lines(addr, &lines)
            }));
        }
        for h in handles {
            let replies = h.join().unwrap();
            assert_eq!(replies.len(), 50);
        }
        server.shutdown();
        for sensor in ["s1", "s2"] {
            let text =
                std::fs::read_to_string(dir.path().join(format!("data/{sensor}.log"))).unwrap();
            assert_eq!(text.lines().count(), 50);
            assert!(text.lines().all(|l| l.starts_with(sensor)));
        }
    }
}
