//! `soundgrid`: one binary wiring the pipeline together.
//!
//! Subcommands: `simulate` (synthetic scenarios), `node` (edge runtime),
//! `server` (ingestion), `analyze` (hourly aggregates CSV), `report`
//! (daily text summary) and `plot` (circular SVG).
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use soundgrid_core::analysis::{
    aggregate_hourly, daily_report, format_daily_report, read_aggregates_csv,
    write_aggregates_csv, AnalysisConfig, Thresholds,
};
use soundgrid_core::circplot::{build_plot_spec, render_svg, ColorScale, Metric, RangePolicy};
use soundgrid_core::node::{run_node, NodeConfig};
use soundgrid_core::record::SensorId;
use soundgrid_core::registry::DeploymentRegistry;
use soundgrid_core::scenario;
use soundgrid_core::server::Server;
use soundgrid_core::storage::{LogStore, Subject};

#[derive(Parser)]
#[command(name = "soundgrid", version, about = "Urban acoustic monitoring toolkit")]
struct Cli {
    /// Print progress details
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario into record or audio files
    Simulate {
        /// Built-in scenario name or path to a scenario file
        #[arg(long)]
        scenario: String,
        /// Generator seed; identical seeds reproduce identical streams
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `metric` writes per-sensor record files, `audio` writes WAVs
        #[arg(long, value_parser = ["metric", "audio"], default_value = "metric")]
        mode: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an edge node from a config file
    Node {
        /// Flat key = value node configuration
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the ingestion server
    Server {
        /// Listen address, e.g. 127.0.0.1:4747
        #[arg(long)]
        bind: String,
        /// Storage directory (one append-only log per sensor)
        #[arg(long)]
        data: PathBuf,
        /// Deployments CSV; spots.csv must sit next to it
        #[arg(long)]
        registry: PathBuf,
    },
    /// Aggregate stored records into hourly buckets (CSV)
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// `sensor:<id>` or `spot:<id>`
        #[arg(long)]
        subject: String,
        /// RFC3339 timestamp or local date (YYYY-MM-DD)
        #[arg(long)]
        from: String,
        /// RFC3339 timestamp or local date, exclusive
        #[arg(long)]
        to: String,
        /// IANA timezone for bucketing
        #[arg(long, default_value = "Europe/Madrid")]
        tz: String,
        /// Optional thresholds file (`birds = 0.5` style)
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a daily summary, optionally with the noon peak window
    Report {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        /// `sensor:<id>` or `spot:<id>`
        #[arg(long)]
        subject: String,
        /// Local date, YYYY-MM-DD
        #[arg(long)]
        day: String,
        /// Include the max LAeq over 11:58-12:05 local
        #[arg(long)]
        txupinazo: bool,
        #[arg(long, default_value = "Europe/Madrid")]
        tz: String,
    },
    /// Render a circular plot from an aggregates CSV
    Plot {
        /// Aggregates CSV produced by `analyze`
        #[arg(long = "in")]
        input: PathBuf,
        /// laeq, pleasantness, eventfulness, birds, human, vehicles, music
        #[arg(long)]
        metric: String,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
        /// Fixed color range `lo,hi` (defaults per metric)
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value = "red-green")]
        scale: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Simulate {
            scenario: which,
            seed,
            mode,
            out,
        } => {
            let cfg = match scenario::builtin(&which) {
                Some(cfg) => cfg,
                None => scenario::load_scenario(std::path::Path::new(&which))
                    .map_err(|e| format!("{e} (not a builtin: {:?})", scenario::BUILTIN_NAMES))?,
            };
            let paths = match mode.as_str() {
                "metric" => scenario::write_metric_files(&cfg, seed, &out),
                _ => scenario::write_audio_files(&cfg, seed, &out),
            }
            .map_err(|e| e.to_string())?;
            if cli.verbose {
                for p in &paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            println!("scenario {} -> {} file(s) in {}", cfg.name, paths.len(), out.display());
            Ok(())
        }
        Command::Node { config } => {
            let cfg = NodeConfig::from_file(&config).map_err(|e| e.to_string())?;
            let stats = run_node(&cfg).map_err(|e| e.to_string())?;
            println!(
                "node {}: enqueued {} sent {} rejected {} retries {} dropped {}",
                cfg.sensor_id,
                stats.records_enqueued,
                stats.records_sent,
                stats.records_rejected,
                stats.send_retries,
                stats.buffer_dropped
            );
            Ok(())
        }
        Command::Server {
            bind,
            data,
            registry,
        } => {
            let server = Server::start(&bind, &data, &registry).map_err(|e| e.to_string())?;
            println!("listening on {}", server.local_addr());
            server.run_forever()
        }
        Command::Analyze {
            data,
            registry,
            subject,
            from,
            to,
            tz,
            thresholds,
            out,
        } => {
            let tz: chrono_tz::Tz = tz.parse().map_err(|_| format!("unknown timezone {tz:?}"))?;
            let mut cfg = AnalysisConfig {
                timezone: tz,
                ..AnalysisConfig::default()
            };
            if let Some(path) = thresholds {
                cfg.thresholds = load_thresholds(&path)?;
            }
            let subject = parse_subject(&subject)?;
            let from = parse_instant(&from, tz)?;
            let to = parse_instant(&to, tz)?;
            let registry = DeploymentRegistry::load(&registry).map_err(|e| e.to_string())?;
            let store = LogStore::open(&data).map_err(|e| e.to_string())?;
            let records = store
                .read_records(&subject, from, to, &registry)
                .map_err(|e| e.to_string())?;
            if cli.verbose {
                eprintln!("{} records for {subject}", records.len());
            }
            let aggs = aggregate_hourly(&subject.to_string(), &records, &cfg, Some((from, to)))
                .map_err(|e| e.to_string())?;
            let file = std::fs::File::create(&out)
                .map_err(|e| format!("cannot create {}: {e}", out.display()))?;
            write_aggregates_csv(std::io::BufWriter::new(file), &aggs)
                .map_err(|e| e.to_string())?;
            println!("{} buckets -> {}", aggs.len(), out.display());
            Ok(())
        }
        Command::Report {
            data,
            registry,
            subject,
            day,
            txupinazo,
            tz,
        } => {
            let tz: chrono_tz::Tz = tz.parse().map_err(|_| format!("unknown timezone {tz:?}"))?;
            let cfg = AnalysisConfig {
                timezone: tz,
                ..AnalysisConfig::default()
            };
            let date = NaiveDate::parse_from_str(&day, "%Y-%m-%d")
                .map_err(|e| format!("bad --day {day:?}: {e}"))?;
            let subject = parse_subject(&subject)?;
            let registry = DeploymentRegistry::load(&registry).map_err(|e| e.to_string())?;
            let store = LogStore::open(&data).map_err(|e| e.to_string())?;
            // cover the whole local day
            let from = local_midnight(date, tz)?;
            let to = local_midnight(date.succ_opt().ok_or("date overflow")?, tz)?;
            let records = store
                .read_records(&subject, from, to, &registry)
                .map_err(|e| e.to_string())?;
            let report = daily_report(&subject.to_string(), &records, &cfg, date, txupinazo)
                .map_err(|e| e.to_string())?;
            print!("{}", format_daily_report(&report, tz));
            Ok(())
        }
        Command::Plot {
            input,
            metric,
            out,
            range,
            scale,
        } => {
            let metric = Metric::parse(&metric).map_err(|e| e.to_string())?;
            let file = std::fs::File::open(&input)
                .map_err(|e| format!("cannot open {}: {e}", input.display()))?;
            let aggs = read_aggregates_csv(std::io::BufReader::new(file))
                .map_err(|e| e.to_string())?;
            let policy = match range {
                Some(spec) => {
                    let (lo, hi) = spec
                        .split_once(',')
                        .ok_or_else(|| format!("bad --range {spec:?}, expected lo,hi"))?;
                    RangePolicy::Fixed(
                        lo.trim().parse().map_err(|_| format!("bad range low {lo:?}"))?,
                        hi.trim().parse().map_err(|_| format!("bad range high {hi:?}"))?,
                    )
                }
                None => metric
                    .default_range()
                    .map(|(lo, hi)| RangePolicy::Fixed(lo, hi))
                    .unwrap_or(RangePolicy::Auto),
            };
            let mut spec = build_plot_spec(&aggs, metric, policy).map_err(|e| e.to_string())?;
            spec.color_scale =
                ColorScale::parse(&scale).ok_or_else(|| format!("unknown scale {scale:?}"))?;
            let svg = render_svg(&spec).map_err(|e| e.to_string())?;
            std::fs::write(&out, svg).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            println!("{} rings -> {}", spec.days.len(), out.display());
            Ok(())
        }
    }
}

fn parse_subject(s: &str) -> Result<Subject, String> {
    match s.split_once(':') {
        Some(("sensor", id)) => Ok(Subject::Sensor(
            SensorId::new(id).map_err(|e| e.to_string())?,
        )),
        Some(("spot", id)) if !id.is_empty() => Ok(Subject::Spot(id.to_string())),
        _ => Err(format!(
            "bad --subject {s:?}: expected sensor:<id> or spot:<id>"
        )),
    }
}

/// RFC3339 instant, or a bare local date taken at local midnight.
fn parse_instant(s: &str, tz: chrono_tz::Tz) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    let date =
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("bad timestamp {s:?}"))?;
    local_midnight(date, tz)
}

fn local_midnight(date: NaiveDate, tz: chrono_tz::Tz) -> Result<DateTime<Utc>, String> {
    tz.from_local_datetime(&date.and_hms_opt(0, 0, 0).ok_or("bad date")?)
        .earliest()
        .map(|t| t.with_timezone(&Utc))
        .ok_or_else(|| format!("{date} has no local midnight in {tz}"))
}

fn load_thresholds(path: &std::path::Path) -> Result<Thresholds, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut t = Thresholds::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), i + 1))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("{}:{}: bad number {v:?}", path.display(), i + 1))?;
        match k.trim() {
            "birds" => t.birds = value,
            "human" => t.human = value,
            "vehicles" => t.vehicles = value,
            "music" => t.music = value,
            other => return Err(format!("{}:{}: unknown source {other:?}", path.display(), i + 1)),
        }
    }
    Ok(t)
}
