//! Aggregate plug-in series: minutely occupancy, half-hourly minima and
//! exclusion masks.

mod adf;

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::ops::Range;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ChargingEvent;

pub use adf::{adf_test, adf_test_fixed_lag, adf_test_values, adf_test_values_fixed_lag, AdfResult, CriticalValues};

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    Minute,
    HalfHour,
}

impl Resolution {
    pub fn step_minutes(self) -> i64 {
        match self {
            Resolution::Minute => 1,
            Resolution::HalfHour => 30,
        }
    }

    pub fn steps_per_day(self) -> usize {
        (24 * 60 / self.step_minutes()) as usize
    }

    fn is_aligned(self, ts: &NaiveDateTime) -> bool {
        ts.second() == 0 && ts.nanosecond() == 0 && i64::from(ts.minute()) % self.step_minutes() == 0
    }
}

/// Half-open `[start, end)` span of wall-clock minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    start: NaiveDateTime,
    end: NaiveDateTime,
}

impl TimeWindow {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self> {
        if !Resolution::Minute.is_aligned(&start) || !Resolution::Minute.is_aligned(&end) {
            return Err(Error::Alignment("window bounds must fall on whole minutes".into()));
        }
        if end < start {
            return Err(Error::Alignment(format!("window end {end} precedes start {start}")));
        }
        Ok(Self { start, end })
    }

    /// Midnight of `first` up to (excluding) midnight of `end`.
    pub fn whole_days(first: NaiveDate, end: NaiveDate) -> Result<Self> {
        Self::new(first.and_time(Default::default()), end.and_time(Default::default()))
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn end(&self) -> NaiveDateTime {
        self.end
    }

    pub fn minutes(&self) -> usize {
        (self.end - self.start).num_minutes() as usize
    }
}

/// Regularly spaced aggregate plug-in counts with an exclusion mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginSeries {
    start: NaiveDateTime,
    resolution: Resolution,
    values: Vec<u32>,
    mask: Vec<bool>,
}

impl PluginSeries {
    pub fn new(start: NaiveDateTime, resolution: Resolution, values: Vec<u32>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::LengthMismatch(values.len(), mask.len()));
        }
        if !resolution.is_aligned(&start) {
            return Err(Error::Alignment(format!("start {start} is not on the {resolution:?} grid")));
        }
        Ok(Self {
            start,
            resolution,
            values,
            mask,
        })
    }

    /// Series with nothing masked.
    pub fn unmasked(start: NaiveDateTime, resolution: Resolution, values: Vec<u32>) -> Result<Self> {
        let mask = vec![false; values.len()];
        Self::new(start, resolution, values, mask)
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exclusive end of the covered span.
    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.len())
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(index as i64 * self.resolution.step_minutes())
    }

    /// Index of the step starting exactly at `ts`, if it lies in the series.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let offset = (ts - self.start).num_minutes();
        let step = self.resolution.step_minutes();
        if ts < self.start || offset % step != 0 || ts.second() != 0 {
            return None;
        }
        let idx = (offset / step) as usize;
        (idx < self.len()).then_some(idx)
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    /// Replaces the mask, keeping values untouched.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::LengthMismatch(self.values.len(), mask.len()));
        }
        self.mask = mask;
        Ok(self)
    }

    /// Writes `timestamp,value,excluded` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["timestamp", "value", "excluded"])?;
        for (i, (v, m)) in self.values.iter().zip(&self.mask).enumerate() {
            w.write_record([
                self.timestamp(i).format(TS_FORMAT).to_string(),
                v.to_string(),
                m.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a series written by [`PluginSeries::write_csv`]. Rows must be
    /// gap-free at the given resolution.
    pub fn read_csv<R: Read>(reader: R, resolution: Resolution) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            timestamp: String,
            value: u32,
            excluded: bool,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut start = None;
        let mut values = Vec::new();
        let mut mask = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::SeriesFormat {
                row: i + 1,
                reason: e.to_string(),
            })?;
            let ts = NaiveDateTime::parse_from_str(&row.timestamp, TS_FORMAT).map_err(|e| Error::SeriesFormat {
                row: i + 1,
                reason: format!("bad timestamp `{}`: {e}", row.timestamp),
            })?;
            let first = *start.get_or_insert(ts);
            let expected = first + Duration::minutes(i as i64 * resolution.step_minutes());
            if ts != expected {
                return Err(Error::SeriesFormat {
                    row: i + 1,
                    reason: format!("expected timestamp {expected}, found {ts}"),
                });
            }
            values.push(row.value);
            mask.push(row.excluded);
        }
        let start = start.ok_or(Error::Empty("series file has no rows"))?;
        Self::new(start, resolution, values, mask)
    }
}

/// Minutes of `window` during which `event` is plugged in, as offsets from
/// the window start. Occupancy is half-open: `start <= m < end`.
pub fn event_occupancy(event: &ChargingEvent, window: &TimeWindow) -> Range<usize> {
    let from = event.start.max(window.start);
    let to = event.end.min(window.end);
    if to <= from {
        return 0..0;
    }
    let a = (from - window.start).num_minutes() as usize;
    let b = (to - window.start).num_minutes() as usize;
    a..b
}

/// Minutely aggregate plug-in count over `window`.
pub fn aggregate(events: &[ChargingEvent], window: &TimeWindow) -> PluginSeries {
    let n = window.minutes();
    // Difference array: +1 at occupancy start, -1 one past its end.
    let mut delta = vec![0i64; n + 1];
    for event in events {
        let span = event_occupancy(event, window);
        if !span.is_empty() {
            delta[span.start] += 1;
            delta[span.end] -= 1;
        }
    }
    let mut running = 0i64;
    let values = delta[..n]
        .iter()
        .map(|d| {
            running += d;
            running as u32
        })
        .collect();
    PluginSeries::unmasked(window.start, Resolution::Minute, values).expect("window start is minute aligned")
}

/// Half-hourly series holding the minimum of each 30-minute block.
pub fn resample_halfhour_min(series: &PluginSeries) -> Result<PluginSeries> {
    if series.resolution != Resolution::Minute {
        return Err(Error::Alignment("resampling expects a minutely series".into()));
    }
    if !Resolution::HalfHour.is_aligned(&series.start) {
        return Err(Error::Alignment(format!("start {} is not on a half-hour boundary", series.start)));
    }
    if !series.len().is_multiple_of(30) {
        return Err(Error::Alignment(format!("length {} is not a multiple of 30", series.len())));
    }
    let values = series
        .values
        .chunks_exact(30)
        .map(|block| *block.iter().min().expect("non-empty block"))
        .collect();
    let mask = series.mask.chunks_exact(30).map(|block| block.iter().any(|m| *m)).collect();
    PluginSeries::new(series.start, Resolution::HalfHour, values, mask)
}

/// Which parts of a series are kept out of modelling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionConfig {
    pub drop_first_days: u32,
    pub drop_last_days: u32,
    pub holidays: BTreeSet<NaiveDate>,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        Self {
            drop_first_days: 7,
            drop_last_days: 14,
            holidays: BTreeSet::new(),
        }
    }
}

impl ExclusionConfig {
    pub fn none() -> Self {
        Self {
            drop_first_days: 0,
            drop_last_days: 0,
            holidays: BTreeSet::new(),
        }
    }
}

/// Masks the leading and trailing spans and every step on a holiday. Values
/// are never changed; existing mask bits are kept.
pub fn apply_exclusions(series: &PluginSeries, config: &ExclusionConfig) -> PluginSeries {
    let head_end = series.start + Duration::days(i64::from(config.drop_first_days));
    let tail_start = series.end() - Duration::days(i64::from(config.drop_last_days));
    let mask = series
        .mask
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let ts = series.timestamp(i);
            m || ts < head_end || ts >= tail_start || config.holidays.contains(&ts.date())
        })
        .collect();
    PluginSeries {
        mask,
        ..series.clone()
    }
}
