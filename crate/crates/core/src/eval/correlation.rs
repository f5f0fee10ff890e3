//! Pearson and Spearman correlation, day-over-day lag correlation and
//! correlation against exogenous series.

use std::io::Read;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::calendar::{self, DAY_NAMES};
use crate::error::{Error, Result};
use crate::series::PluginSeries;

/// Product-moment correlation computed from centred sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("need at least two pairs"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share rank mean(i+1..=j).
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Correlation between plug-in on one day of week and the day before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayCorrelation {
    pub day: u8,
    pub name: String,
    pub n_pairs: usize,
    /// `None` when undefined (too few pairs or no variance).
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

/// Pairs every unmasked step with the step one day earlier, grouped by the
/// later step's day of week.
pub fn lag_correlation_by_day(series: &PluginSeries) -> Vec<DayCorrelation> {
    let lag = series.resolution().steps_per_day();
    let mut today: [Vec<f64>; 7] = Default::default();
    let mut yesterday: [Vec<f64>; 7] = Default::default();
    let values = series.values();
    for t in lag..series.len() {
        if series.mask()[t] {
            continue;
        }
        let d = usize::from(calendar::day_of_week(&series.timestamp(t)));
        today[d].push(f64::from(values[t]));
        yesterday[d].push(f64::from(values[t - lag]));
    }
    (0..7)
        .map(|d| DayCorrelation {
            day: d as u8,
            name: DAY_NAMES[d].to_string(),
            n_pairs: today[d].len(),
            pearson: pearson(&today[d], &yesterday[d]).ok(),
            spearman: spearman(&today[d], &yesterday[d]).ok(),
        })
        .collect()
}

/// An external variable sampled at timestamps; `NaN` marks a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSeries {
    pub name: String,
    pub points: Vec<(NaiveDateTime, f64)>,
}

impl ExogenousSeries {
    pub fn new(name: impl Into<String>, mut points: Vec<(NaiveDateTime, f64)>) -> Self {
        points.sort_by_key(|(t, _)| *t);
        Self {
            name: name.into(),
            points,
        }
    }

    /// Reads `timestamp,value` rows; blank or non-numeric values become gaps.
    /// Timestamps are ISO-8601 (`YYYY-MM-DDTHH:MM:SS`, a space separator or
    /// missing seconds are accepted).
    pub fn read_csv<R: Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let raw_ts = record.get(0).unwrap_or("").trim();
            let ts = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(raw_ts, f).ok())
                .ok_or_else(|| Error::SeriesFormat {
                    row: i + 1,
                    reason: format!("bad timestamp `{raw_ts}`"),
                })?;
            let value = record.get(1).unwrap_or("").trim().parse::<f64>().unwrap_or(f64::NAN);
            points.push((ts, value));
        }
        Ok(Self::new(name, points))
    }

    /// Fills interior gaps by linear interpolation in time. Leading and
    /// trailing gaps stay `NaN`.
    pub fn interpolated(&self) -> Self {
        let mut points = self.points.clone();
        let known: Vec<usize> = (0..points.len()).filter(|&i| points[i].1.is_finite()).collect();
        for pair in known.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (ta, va) = points[a];
            let (tb, vb) = points[b];
            let span = (tb - ta).num_seconds() as f64;
            for p in &mut points[a + 1..b] {
                let w = (p.0 - ta).num_seconds() as f64 / span;
                p.1 = va + w * (vb - va);
            }
        }
        Self {
            name: self.name.clone(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousCorrelation {
    pub name: String,
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
}

/// Interpolates gaps in `exo`, inner-joins it with the unmasked steps of
/// `series` on exact timestamps and correlates the two.
pub fn exogenous_correlation(series: &PluginSeries, exo: &ExogenousSeries) -> Result<ExogenousCorrelation> {
    let filled = exo.interpolated();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (ts, v) in &filled.points {
        if !v.is_finite() {
            continue;
        }
        if let Some(i) = series.index_of(*ts) {
            if !series.mask()[i] {
                xs.push(f64::from(series.values()[i]));
                ys.push(*v);
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::Empty("exogenous series shares no timestamps with the plug-in series"));
    }
    Ok(ExogenousCorrelation {
        name: exo.name.clone(),
        n: xs.len(),
        pearson: pearson(&xs, &ys)?,
        spearman: spearman(&xs, &ys)?,
    })
}
