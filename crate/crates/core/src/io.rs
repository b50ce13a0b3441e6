//! File formats and trace replay.
//!
//! * RSS trace CSV: `t_ms,cell_id,tx_beam,rx_beam,rss_dbm`, non-decreasing
//!   in time, RSS with three decimals.
//! * Action log CSV: `t_ms,phase,action,cell_id,beam_id`, empty fields where
//!   a column does not apply.
//! * Reports: canonical JSON (fixed key order, reals with three decimals) or
//!   a flat CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::engine::sim::{RSS_MAX_DBM, RSS_MIN_DBM};
use crate::engine::{SweepReport, TrialReport};
use crate::protocol::{ActionRecord, CellId, Driver, MeasurementReport, Protocol, ProtocolError, ProtocolState};

pub const TRACE_HEADER: [&str; 5] = ["t_ms", "cell_id", "tx_beam", "rx_beam", "rss_dbm"];
pub const ACTION_LOG_HEADER: [&str; 5] = ["t_ms", "phase", "action", "cell_id", "beam_id"];
pub const SWEEP_CSV_HEADER: [&str; 6] =
    ["scenario", "codebook", "success_rate", "mean_latency_s", "p95_latency_s", "soft_rate"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: t_ms {got} precedes {prev} on the previous row")]
    NonMonotonic { line: u64, prev: u64, got: u64 },
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: String, expected: String },
}

#[derive(Debug, Error)]
#[error("trace line {line}: {source}")]
pub struct ReplayError {
    pub line: u64,
    #[source]
    pub source: ProtocolError,
}

/// Serializes a real with exactly three decimals (JSON only).
pub fn fixed3<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{v:.3}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn fixed3_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => fixed3(v, s),
        None => s.serialize_none(),
    }
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), IoError> {
    let found = rdr.headers().map_err(|e| IoError::Parse { line: 1, message: e.to_string() })?;
    if found.iter().ne(expected.iter().copied()) {
        return Err(IoError::Header {
            found: found.iter().collect::<Vec<_>>().join(","),
            expected: expected.join(","),
        });
    }
    Ok(())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T, IoError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| IoError::Parse { line, message: format!("bad {} value {raw:?}", TRACE_HEADER[i]) })
}

/// Parses a trace, checking the header, every field, and time order.
pub fn parse_trace(text: &str) -> Result<Vec<MeasurementReport>, IoError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, &TRACE_HEADER)?;
    let mut rows: Vec<MeasurementReport> = Vec::new();
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| IoError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != TRACE_HEADER.len() {
            return Err(IoError::Parse { line, message: format!("expected 5 fields, found {}", rec.len()) });
        }
        let row = MeasurementReport {
            t_ms: field(&rec, 0, line)?,
            cell_id: field(&rec, 1, line)?,
            tx_beam: field(&rec, 2, line)?,
            rx_beam: field(&rec, 3, line)?,
            rss_dbm: field(&rec, 4, line)?,
        };
        if !(RSS_MIN_DBM..=RSS_MAX_DBM).contains(&row.rss_dbm) {
            return Err(IoError::Parse { line, message: format!("rss_dbm {} outside [-150, 30]", row.rss_dbm) });
        }
        if let Some(prev) = rows.last() {
            if row.t_ms < prev.t_ms {
                return Err(IoError::NonMonotonic { line, prev: prev.t_ms, got: row.t_ms });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn load_trace(path: &Path) -> Result<Vec<MeasurementReport>, IoError> {
    parse_trace(&read_file(path)?)
}

pub fn format_trace(rows: &[MeasurementReport]) -> String {
    let mut s = TRACE_HEADER.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{:.3}", r.t_ms, r.cell_id, r.tx_beam, r.rx_beam, r.rss_dbm);
    }
    s
}

pub fn write_trace(path: &Path, rows: &[MeasurementReport]) -> Result<(), IoError> {
    write_file(path, &format_trace(rows))
}

/// One parsed action-log line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionRow {
    pub t_ms: u64,
    pub phase: String,
    pub action: String,
    pub cell_id: Option<CellId>,
    pub beam_id: Option<usize>,
}

impl From<&ActionRecord> for ActionRow {
    fn from(r: &ActionRecord) -> Self {
        Self {
            t_ms: r.t_ms,
            phase: r.phase.name().to_string(),
            action: r.action.name().to_string(),
            cell_id: r.action.cell(),
            beam_id: r.action.beam(),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn format_action_log(log: &[ActionRecord]) -> String {
    let mut s = ACTION_LOG_HEADER.join(",");
    s.push('\n');
    for r in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.t_ms,
            r.phase.name(),
            r.action.name(),
            opt(r.action.cell()),
            opt(r.action.beam())
        );
    }
    s
}

pub fn write_action_log(path: &Path, log: &[ActionRecord]) -> Result<(), IoError> {
    write_file(path, &format_action_log(log))
}

pub fn parse_action_log(text: &str) -> Result<Vec<ActionRow>, IoError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &ACTION_LOG_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| IoError::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| IoError::Parse { line, message: format!("bad {what}") };
        let optional = |i: usize| -> Result<Option<u64>, IoError> {
            match rec.get(i).unwrap_or("") {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad(ACTION_LOG_HEADER[i])),
            }
        };
        if rec.len() != ACTION_LOG_HEADER.len() {
            return Err(bad("field count"));
        }
        rows.push(ActionRow {
            t_ms: rec[0].parse().map_err(|_| bad("t_ms"))?,
            phase: rec[1].to_string(),
            action: rec[2].to_string(),
            cell_id: optional(3)?.map(|v| v as CellId),
            beam_id: optional(4)?.map(|v| v as usize),
        });
    }
    Ok(rows)
}

pub fn load_action_log(path: &Path) -> Result<Vec<ActionRow>, IoError> {
    parse_action_log(&read_file(path)?)
}

/// Feeds a recorded trace through the protocol slot by slot, with uplink
/// feedback inferred from the trace itself (see [`Driver`]).
///
/// The mobile starts connected to the cell of the first row on that row's
/// beam pair. The clock runs until `until_ms` (exclusive) or a terminal
/// phase. Without `until_ms` it runs past the last row for as long as
/// feedback or an access deadline is still outstanding.
pub fn replay(
    trace: &[MeasurementReport],
    protocol: &Protocol,
    until_ms: Option<u64>,
) -> Result<Vec<ActionRecord>, ReplayError> {
    let Some(first) = trace.first() else { return Ok(Vec::new()) };
    let end = until_ms.unwrap_or(trace.last().map_or(0, |r| r.t_ms + 1));
    let mut driver = Driver::new(protocol, ProtocolState::connected(first.cell_id, first.rx_beam, first.tx_beam));
    let mut i = 0;
    let line = |i: usize| i as u64 + 2;
    'slots: for t in 0..end {
        driver.begin_slot(t).map_err(|source| ReplayError { line: line(i), source })?;
        if driver.is_terminal() {
            break;
        }
        while i < trace.len() && trace[i].t_ms <= t {
            driver.measure(trace[i]).map_err(|source| ReplayError { line: line(i), source })?;
            i += 1;
            if driver.is_terminal() {
                break 'slots;
            }
        }
    }
    if until_ms.is_none() {
        let mut t = end;
        while !driver.is_terminal() && (driver.has_pending() || driver.state().ra_deadline_ms.is_some()) {
            driver.begin_slot(t).map_err(|source| ReplayError { line: line(i), source })?;
            t += 1;
        }
    }
    Ok(driver.into_log())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format {other:?} (json|csv)")),
        }
    }
}

/// Something that can be written as a report.
pub trait Report {
    fn to_json(&self) -> String;
    fn to_csv(&self) -> String;
}

pub fn write_report(report: &dyn Report, format: ReportFormat, path: &Path) -> Result<(), IoError> {
    let text = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    write_file(path, &text)
}

#[derive(Serialize)]
struct TrialJson<'a> {
    trial_index: u64,
    seed: u64,
    scenario: &'a str,
    codebook: &'a str,
    outcome: &'a str,
    success: bool,
    search_started_ms: Option<u64>,
    discovered_ms: Option<u64>,
    #[serde(serialize_with = "fixed3_opt")]
    discovery_latency_s: Option<f64>,
    neighbor_cell: Option<CellId>,
    #[serde(serialize_with = "fixed3_opt")]
    alignment_ratio: Option<f64>,
    aligned_windows: u64,
    tracked_windows: u64,
    rx_switches: &'a std::collections::BTreeMap<CellId, u64>,
    tx_switch_requests: u64,
    serving_switch_ms: Option<u64>,
    handover_ms: Option<u64>,
    #[serde(serialize_with = "fixed3_opt")]
    interruption_s: Option<f64>,
    overlap_exit_ms: Option<u64>,
    end_ms: u64,
    ignored_measurements: u64,
    action_log: Vec<ActionRow>,
}

fn fmt3(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

impl Report for TrialReport {
    fn to_json(&self) -> String {
        let view = TrialJson {
            trial_index: self.trial_index,
            seed: self.seed,
            scenario: self.scenario.name(),
            codebook: &self.codebook,
            outcome: self.outcome.name(),
            success: self.success,
            search_started_ms: self.search_started_ms,
            discovered_ms: self.discovered_ms,
            discovery_latency_s: self.discovery_latency_s,
            neighbor_cell: self.neighbor_cell,
            alignment_ratio: self.alignment_ratio,
            aligned_windows: self.aligned_windows,
            tracked_windows: self.tracked_windows,
            rx_switches: &self.rx_switches,
            tx_switch_requests: self.tx_switch_requests,
            serving_switch_ms: self.serving_switch_ms,
            handover_ms: self.handover_ms,
            interruption_s: self.interruption_s,
            overlap_exit_ms: self.overlap_exit_ms,
            end_ms: self.end_ms,
            ignored_measurements: self.ignored_measurements,
            action_log: self.action_log.iter().map(ActionRow::from).collect(),
        };
        let mut s = serde_json::to_string_pretty(&view).expect("report serializes");
        s.push('\n');
        s
    }

    fn to_csv(&self) -> String {
        let switches: Vec<String> = self.rx_switches.iter().map(|(c, n)| format!("{c}:{n}")).collect();
        format!(
            "trial_index,seed,scenario,codebook,outcome,success,discovery_latency_s,alignment_ratio,rx_switches,\
             tx_switch_requests,interruption_s\n{},{},{},{},{},{},{},{},{},{},{}\n",
            self.trial_index,
            self.seed,
            self.scenario,
            self.codebook,
            self.outcome.name(),
            self.success,
            fmt3(self.discovery_latency_s),
            fmt3(self.alignment_ratio),
            switches.join(";"),
            self.tx_switch_requests,
            fmt3(self.interruption_s),
        )
    }
}

impl Report for SweepReport {
    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    fn to_csv(&self) -> String {
        let mut s = SWEEP_CSV_HEADER.join(",");
        s.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{:.3},{},{},{:.3}",
                c.scenario,
                c.codebook,
                c.success_rate,
                fmt3(c.mean_latency_s),
                fmt3(c.p95_latency_s),
                c.soft_rate
            );
        }
        s
    }
}
