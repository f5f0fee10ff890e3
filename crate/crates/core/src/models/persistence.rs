//! Day-of-week persistence rule.
//!
//! Mondays repeat the previous Friday, Saturdays the previous Saturday, and
//! every other day repeats the day before, always at the same time of day.

use crate::calendar;
use crate::error::{Error, Result};
use crate::series::{PluginSeries, Resolution};

/// Steps back (at half-hourly resolution) used for a target on `dow`.
pub fn persistence_offset(dow: u8) -> usize {
    match dow {
        0 => 144,
        5 => 336,
        _ => 48,
    }
}

pub fn persistence_predict(series: &PluginSeries, target_step: usize) -> Result<f64> {
    if series.resolution() != Resolution::HalfHour {
        return Err(Error::Alignment("persistence works on half-hourly series".into()));
    }
    if target_step >= series.len() {
        return Err(Error::InsufficientHistory {
            needed: target_step + 1,
            available: series.len(),
        });
    }
    let ts = series.timestamp(target_step);
    let offset = persistence_offset(calendar::day_of_week(&ts));
    if target_step < offset {
        return Err(Error::PersistenceHistory(ts));
    }
    Ok(f64::from(series.values()[target_step - offset]))
}
