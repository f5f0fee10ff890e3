//! Parsing and filtering of charge-point session records.

use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest plug-in session kept by default: one week.
pub const DEFAULT_MAX_DURATION_MINUTES: i64 = 7 * 24 * 60;

/// One plug-in session at a charge point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingEvent {
    pub event_id: String,
    pub charge_point_id: Option<String>,
    pub connector: u32,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
    pub energy_kwh: f64,
    pub organization: String,
    duration_minutes: i64,
}

impl ChargingEvent {
    /// Builds a validated event. Timestamps are truncated to whole minutes.
    pub fn new(
        event_id: impl Into<String>,
        charge_point_id: Option<String>,
        connector: u32,
        start: NaiveDateTime,
        end: NaiveDateTime,
        energy_kwh: f64,
        organization: impl Into<String>,
    ) -> Result<Self> {
        let start = truncate_to_minute(start);
        let end = truncate_to_minute(end);
        if end < start {
            return Err(Error::InvalidEvent(format!("end {end} precedes start {start}")));
        }
        if connector == 0 {
            return Err(Error::InvalidEvent("connector must be >= 1".into()));
        }
        if !(energy_kwh >= 0.0 && energy_kwh.is_finite()) {
            return Err(Error::InvalidEvent(format!("energy {energy_kwh} is not a non-negative number")));
        }
        Ok(Self {
            event_id: event_id.into(),
            charge_point_id,
            connector,
            start,
            end,
            energy_kwh,
            organization: organization.into(),
            duration_minutes: (end - start).num_minutes(),
        })
    }

    pub fn duration_minutes(&self) -> i64 {
        self.duration_minutes
    }
}

fn truncate_to_minute(ts: NaiveDateTime) -> NaiveDateTime {
    ts.with_second(0)
        .and_then(|t| t.with_nanosecond(0))
        .expect("zero seconds is always valid")
}

/// Counts gathered while reading a session file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected_overlong: usize,
    pub connector_defaulted: usize,
    pub malformed: usize,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected_overlong + self.malformed
    }

    /// Moves `removed` events from accepted to rejected after [`filter_overlong`].
    pub fn record_overlong(&mut self, removed: usize) {
        let removed = removed.min(self.accepted);
        self.accepted -= removed;
        self.rejected_overlong += removed;
    }
}

/// Maps canonical event fields onto CSV column names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub event_id: String,
    /// `None` when the source has no charge point column at all.
    pub charge_point_id: Option<String>,
    pub connector: String,
    pub start_date: String,
    pub start_time: String,
    pub end_date: String,
    pub end_time: String,
    pub energy: String,
    pub organization: String,
    /// `strftime`-style date format, `%Y-%m-%d` unless overridden.
    pub date_format: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            event_id: "event_id".into(),
            charge_point_id: Some("charge_point_id".into()),
            connector: "connector".into(),
            start_date: "start_date".into(),
            start_time: "start_time".into(),
            end_date: "end_date".into(),
            end_time: "end_time".into(),
            energy: "energy".into(),
            organization: "organization".into(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

struct ColumnIndex {
    event_id: usize,
    charge_point_id: Option<usize>,
    connector: usize,
    start_date: usize,
    start_time: usize,
    end_date: usize,
    end_time: usize,
    energy: usize,
    organization: usize,
}

impl ColumnIndex {
    fn resolve(headers: &csv::StringRecord, mapping: &ColumnMapping) -> Result<Self> {
        let find = |field: &'static str, column: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == column)
                .ok_or_else(|| Error::Schema {
                    field,
                    column: column.to_string(),
                })
        };
        Ok(Self {
            event_id: find("event_id", &mapping.event_id)?,
            charge_point_id: match &mapping.charge_point_id {
                Some(col) => Some(find("charge_point_id", col)?),
                None => None,
            },
            connector: find("connector", &mapping.connector)?,
            start_date: find("start_date", &mapping.start_date)?,
            start_time: find("start_time", &mapping.start_time)?,
            end_date: find("end_date", &mapping.end_date)?,
            end_time: find("end_time", &mapping.end_time)?,
            energy: find("energy", &mapping.energy)?,
            organization: find("organization", &mapping.organization)?,
        })
    }
}

enum RowOutcome {
    Event { event: ChargingEvent, defaulted: bool },
    Malformed,
}

fn parse_time(s: &str) -> Option<NaiveTime> {
    let s = s.trim();
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .ok()
}

fn parse_timestamp(date: &str, time: &str, date_format: &str) -> Option<NaiveDateTime> {
    let date = NaiveDate::parse_from_str(date.trim(), date_format).ok()?;
    Some(date.and_time(parse_time(time)?))
}

fn parse_row(record: &csv::StringRecord, idx: &ColumnIndex, mapping: &ColumnMapping) -> RowOutcome {
    let field = |i: usize| record.get(i).map(str::trim);
    let (Some(start_date), Some(start_time), Some(end_date), Some(end_time)) = (
        field(idx.start_date),
        field(idx.start_time),
        field(idx.end_date),
        field(idx.end_time),
    ) else {
        return RowOutcome::Malformed;
    };
    let (Some(start), Some(end)) = (
        parse_timestamp(start_date, start_time, &mapping.date_format),
        parse_timestamp(end_date, end_time, &mapping.date_format),
    ) else {
        return RowOutcome::Malformed;
    };

    let connector_raw = field(idx.connector).unwrap_or("");
    let (connector, defaulted) = if connector_raw.is_empty() || connector_raw.eq_ignore_ascii_case("nan") {
        (1, true)
    } else {
        // Some exports write connectors as floats ("2.0").
        match connector_raw
            .parse::<u32>()
            .ok()
            .or_else(|| connector_raw.parse::<f64>().ok().filter(|c| c.fract() == 0.0 && *c >= 1.0).map(|c| c as u32))
        {
            Some(c) => (c, false),
            None => return RowOutcome::Malformed,
        }
    };

    let energy_raw = field(idx.energy).unwrap_or("");
    let energy = if energy_raw.is_empty() {
        0.0
    } else {
        match energy_raw.parse::<f64>() {
            Ok(e) => e,
            Err(_) => return RowOutcome::Malformed,
        }
    };

    let charge_point_id = idx
        .charge_point_id
        .and_then(field)
        .filter(|s| !s.is_empty())
        .map(str::to_string);

    match ChargingEvent::new(
        field(idx.event_id).unwrap_or(""),
        charge_point_id,
        connector,
        start,
        end,
        energy,
        field(idx.organization).unwrap_or(""),
    ) {
        Ok(event) => RowOutcome::Event { event, defaulted },
        Err(_) => RowOutcome::Malformed,
    }
}

/// Reads charging sessions from a headed CSV stream.
///
/// Rows whose timestamps (or other fields) cannot be parsed are dropped and
/// counted as malformed. A blank connector is read as connector 1. File order
/// is preserved.
pub fn parse_events<R: Read>(source: R, mapping: &ColumnMapping) -> Result<(Vec<ChargingEvent>, IngestReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let idx = ColumnIndex::resolve(&headers, mapping)?;

    let mut events = Vec::new();
    let mut report = IngestReport::default();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => match parse_row(&record, &idx, mapping) {
                RowOutcome::Event { event, defaulted } => {
                    report.accepted += 1;
                    report.connector_defaulted += usize::from(defaulted);
                    events.push(event);
                }
                RowOutcome::Malformed => report.malformed += 1,
            },
            Err(err) => match err.kind() {
                csv::ErrorKind::Io(_) => return Err(err.into()),
                _ => report.malformed += 1,
            },
        }
    }
    Ok((events, report))
}

/// Drops sessions longer than `max_duration_minutes`. A session of exactly the
/// cutoff is kept.
pub fn filter_overlong(events: Vec<ChargingEvent>, max_duration_minutes: i64) -> (Vec<ChargingEvent>, usize) {
    let before = events.len();
    let kept: Vec<_> = events
        .into_iter()
        .filter(|e| e.duration_minutes() <= max_duration_minutes)
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Writes events using the default [`ColumnMapping`] layout.
pub fn write_events<W: std::io::Write>(writer: W, events: &[ChargingEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let m = ColumnMapping::default();
    w.write_record([
        m.event_id.as_str(),
        m.charge_point_id.as_deref().unwrap_or("charge_point_id"),
        &m.connector,
        &m.start_date,
        &m.start_time,
        &m.end_date,
        &m.end_time,
        &m.energy,
        &m.organization,
    ])?;
    for e in events {
        w.write_record([
            e.event_id.clone(),
            e.charge_point_id.clone().unwrap_or_default(),
            e.connector.to_string(),
            e.start.format("%Y-%m-%d").to_string(),
            e.start.format("%H:%M").to_string(),
            e.end.format("%Y-%m-%d").to_string(),
            e.end.format("%H:%M").to_string(),
            format!("{:.2}", e.energy_kwh),
            e.organization.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
