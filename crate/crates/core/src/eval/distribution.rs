use serde::{Deserialize, Serialize};

use super::metrics::{quantile_sorted, sorted_copy};
use crate::calendar::{self, DAY_NAMES, MONTH_NAMES};
use crate::series::PluginSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Dow,
    Month,
    Hour,
}

impl GroupKey {
    pub const ALL: [GroupKey; 3] = [GroupKey::Dow, GroupKey::Month, GroupKey::Hour];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupKey::Dow => "dow",
            GroupKey::Month => "month",
            GroupKey::Hour => "hour",
        }
    }

    fn of(self, ts: &chrono::NaiveDateTime) -> u8 {
        match self {
            GroupKey::Dow => calendar::day_of_week(ts),
            GroupKey::Month => calendar::month(ts),
            GroupKey::Hour => calendar::hour(ts),
        }
    }

    fn label(self, group: u8) -> String {
        match self {
            GroupKey::Dow => DAY_NAMES[usize::from(group)].to_string(),
            GroupKey::Month => MONTH_NAMES[usize::from(group) - 1].to_string(),
            GroupKey::Hour => format!("{group:02}:00"),
        }
    }
}

/// Box-plot summary of one group: order statistics plus Tukey whisker ends
/// (most extreme values within 1.5 IQR of the quartiles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub group: u8,
    pub label: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

impl BoxSummary {
    pub(crate) fn from_values(group: u8, label: String, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let sorted = sorted_copy(values);
        let q1 = quantile_sorted(&sorted, 0.25);
        let q3 = quantile_sorted(&sorted, 0.75);
        let fence = 1.5 * (q3 - q1);
        let whisker_low = *sorted.iter().find(|v| **v >= q1 - fence).expect("q1 lies within the data");
        let whisker_high = *sorted.iter().rev().find(|v| **v <= q3 + fence).expect("q3 lies within the data");
        Some(Self {
            group,
            label,
            n: sorted.len(),
            min: sorted[0],
            q1,
            median: quantile_sorted(&sorted, 0.5),
            q3,
            max: sorted[sorted.len() - 1],
            whisker_low,
            whisker_high,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDistribution {
    pub key: GroupKey,
    pub groups: Vec<BoxSummary>,
}

/// Per-group order statistics over the unmasked steps. Groups without data
/// are omitted.
pub fn grouped_distribution(series: &PluginSeries, key: GroupKey) -> GroupedDistribution {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 25];
    for (i, (&v, &masked)) in series.values().iter().zip(series.mask()).enumerate() {
        if !masked {
            buckets[usize::from(key.of(&series.timestamp(i)))].push(f64::from(v));
        }
    }
    let groups = buckets
        .iter()
        .enumerate()
        .filter(|(_, values)| !values.is_empty())
        .filter_map(|(g, values)| BoxSummary::from_values(g as u8, key.label(g as u8), values))
        .collect();
    GroupedDistribution { key, groups }
}

/// Box summaries of `values` grouped by the day of week in `days`.
pub(crate) fn by_day_of_week(values: &[f64], days: &[u8]) -> Vec<BoxSummary> {
    let mut buckets: [Vec<f64>; 7] = Default::default();
    for (v, d) in values.iter().zip(days) {
        buckets[usize::from(*d)].push(*v);
    }
    buckets
        .iter()
        .enumerate()
        .filter_map(|(d, v)| BoxSummary::from_values(d as u8, GroupKey::Dow.label(d as u8), v))
        .collect()
}
