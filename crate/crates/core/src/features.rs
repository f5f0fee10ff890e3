//! Supervised rows built from a half-hourly series, plus the seeded split.

use std::io::Write;

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};
use crate::rng;
use crate::series::{PluginSeries, Resolution};

/// Lags of one, three and seven days at half-hourly resolution.
pub const DEFAULT_LAGS: [usize; 3] = [48, 144, 336];

/// Which inputs a model sees. Lags are step offsets back from the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSpec {
    pub lags: Vec<usize>,
    pub use_dow_onehot: bool,
    pub use_month_onehot: bool,
    pub use_hour_onehot: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            lags: DEFAULT_LAGS.to_vec(),
            use_dow_onehot: false,
            use_month_onehot: false,
            use_hour_onehot: false,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lags.is_empty() || self.lags[0] == 0 || self.lags.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "lags must be non-empty, positive and strictly increasing, got {:?}",
                self.lags
            )));
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.lags.last().copied().unwrap_or(0)
    }

    /// Width of the model input vector: lags followed by the enabled one-hots.
    pub fn input_width(&self) -> usize {
        self.lags.len()
            + if self.use_dow_onehot { 7 } else { 0 }
            + if self.use_month_onehot { 12 } else { 0 }
            + if self.use_hour_onehot { 24 } else { 0 }
    }

    /// Column names matching [`FeatureSpec::input_width`].
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.lags.iter().map(|l| format!("lag_{l}")).collect();
        if self.use_dow_onehot {
            names.extend((0..7).map(|d| format!("dow_{d}")));
        }
        if self.use_month_onehot {
            names.extend((1..=12).map(|m| format!("month_{m}")));
        }
        if self.use_hour_onehot {
            names.extend((0..24).map(|h| format!("hour_{h}")));
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    /// Index of the target step in the source series.
    pub step: usize,
    pub timestamp: NaiveDateTime,
    pub target: f64,
    pub lag_values: Vec<f64>,
    pub dow: u8,
    pub month: u8,
    pub hour: u8,
}

impl FeatureRow {
    /// Raw (unscaled) feature vector laid out as in [`FeatureSpec::column_names`].
    pub fn encode(&self, spec: &FeatureSpec) -> Vec<f64> {
        let mut x = Vec::with_capacity(spec.input_width());
        self.encode_into(spec, &mut x);
        x
    }

    pub(crate) fn encode_into(&self, spec: &FeatureSpec, x: &mut Vec<f64>) {
        x.extend_from_slice(&self.lag_values);
        let mut push = |index: usize, cardinality: usize| {
            let start = x.len();
            x.resize(start + cardinality, 0.0);
            x[start + index] = 1.0;
        };
        if spec.use_dow_onehot {
            push(usize::from(self.dow), 7);
        }
        if spec.use_month_onehot {
            push(usize::from(self.month) - 1, 12);
        }
        if spec.use_hour_onehot {
            push(usize::from(self.hour), 24);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub spec: FeatureSpec,
    pub rows: Vec<FeatureRow>,
    /// One label per row once [`split_rows`] has run.
    pub split: Option<Vec<Split>>,
}

impl FeatureMatrix {
    /// Rows carrying the given split label (empty before splitting).
    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &FeatureRow> {
        let labels = self.split.as_deref().unwrap_or(&[]);
        self.rows
            .iter()
            .zip(labels)
            .filter(move |(_, l)| **l == split)
            .map(|(r, _)| r)
    }

    pub fn split_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for label in self.split.iter().flatten() {
            counts[*label as usize] += 1;
        }
        counts
    }

    /// Writes one column per feature of `spec` plus `target`, `timestamp`, `split`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.spec.column_names();
        header.extend(["target", "timestamp", "split"].map(String::from));
        w.write_record(&header)?;
        let mut buf = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            buf.clear();
            row.encode_into(&self.spec, &mut buf);
            let mut record: Vec<String> = buf.iter().map(|v| v.to_string()).collect();
            record.push(row.target.to_string());
            record.push(row.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string());
            record.push(
                self.split
                    .as_ref()
                    .map(|s| s[i].as_str().to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Binary indicator vector with a single one at `index`.
pub fn one_hot(index: usize, cardinality: usize) -> Result<Vec<f64>> {
    if index >= cardinality {
        return Err(Error::Domain { index, cardinality });
    }
    let mut v = vec![0.0; cardinality];
    v[index] = 1.0;
    Ok(v)
}

/// One row per unmasked step with complete lag history.
pub fn build_matrix(series: &PluginSeries, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    if series.resolution() != Resolution::HalfHour {
        return Err(Error::Alignment("feature rows are built from half-hourly series".into()));
    }
    let max_lag = spec.max_lag();
    if series.len() < max_lag {
        return Err(Error::InsufficientHistory {
            needed: max_lag,
            available: series.len(),
        });
    }
    let values = series.values();
    let rows = (max_lag..series.len())
        .filter(|&t| !series.mask()[t])
        .map(|t| {
            let ts = series.timestamp(t);
            FeatureRow {
                step: t,
                timestamp: ts,
                target: f64::from(values[t]),
                lag_values: spec.lags.iter().map(|l| f64::from(values[t - l])).collect(),
                dow: calendar::day_of_week(&ts),
                month: calendar::month(&ts),
                hour: calendar::hour(&ts),
            }
        })
        .collect();
    Ok(FeatureMatrix {
        spec: spec.clone(),
        rows,
        split: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

/// Shuffles row positions with a seeded ChaCha8 stream and labels the first
/// `floor(train·n)` train, the next `floor(validation·n)` validation and the
/// remainder test. Rows keep their chronological order; only labels change.
pub fn split_rows(mut matrix: FeatureMatrix, ratios: SplitRatios, seed: u64) -> Result<FeatureMatrix> {
    let parts = [ratios.train, ratios.validation, ratios.test];
    if parts.iter().any(|r| !(0.0..=1.0).contains(r)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {parts:?} must be in [0, 1] and sum to 1")));
    }
    let n = matrix.rows.len();
    if n < 10 {
        return Err(Error::TooFewRows(n));
    }
    let n_train = (ratios.train * n as f64 + 1e-9).floor() as usize;
    let n_val = (ratios.validation * n as f64 + 1e-9).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut labels = vec![Split::Test; n];
    for (position, &row) in order.iter().enumerate() {
        labels[row] = if position < n_train {
            Split::Train
        } else if position < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    matrix.split = Some(labels);
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn monday() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2017, 3, 6).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    fn series(len: usize) -> PluginSeries {
        let values = (0..len as u32).map(|i| (i * 37) % 101).collect();
        PluginSeries::unmasked(monday(), Resolution::HalfHour, values).unwrap()
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 7).unwrap(), vec![1., 0., 0., 0., 0., 0., 0.]);
        assert_eq!(one_hot(6, 7).unwrap(), vec![0., 0., 0., 0., 0., 0., 1.]);
        let m = one_hot(11, 12).unwrap();
        assert_eq!(m[11], 1.0);
        assert_eq!(m.iter().sum::<f64>(), 1.0);
        assert!(matches!(one_hot(7, 7), Err(Error::Domain { .. })));
    }

    #[test]
    fn exactly_one_week_gives_no_rows() {
        let m = build_matrix(&series(336), &FeatureSpec::default()).unwrap();
        assert!(m.rows.is_empty());
    }

    #[test]
    fn first_full_history_row() {
        let s = series(337);
        let m = build_matrix(&s, &FeatureSpec::default()).unwrap();
        assert_eq!(m.rows.len(), 1);
        let v = |i: usize| f64::from(s.values()[i]);
        assert_eq!(m.rows[0].lag_values, vec![v(288), v(192), v(0)]);
        assert_eq!(m.rows[0].target, v(336));
    }

    #[test]
    fn too_short_series() {
        assert!(matches!(
            build_matrix(&series(100), &FeatureSpec::default()),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn calendar_fields() {
        let s = series(48 * 15);
        let m = build_matrix(&s, &FeatureSpec::default()).unwrap();
        // 2017-03-13 is a Monday.
        let row = m
            .rows
            .iter()
            .find(|r| r.timestamp == NaiveDate::from_ymd_opt(2017, 3, 13).unwrap().and_hms_opt(9, 0, 0).unwrap())
            .unwrap();
        assert_eq!((row.dow, row.hour, row.month), (0, 9, 3));
        let next = &m.rows[m.rows.iter().position(|r| r == row).unwrap() + 1];
        assert_eq!(next.hour, 9);
    }

    #[test]
    fn masked_targets_are_skipped_but_lags_may_be_masked() {
        let s = series(48 * 9);
        let mut mask = vec![false; s.len()];
        mask[0] = true;
        mask[400] = true;
        let s = s.with_mask(mask).unwrap();
        let m = build_matrix(&s, &FeatureSpec::default()).unwrap();
        assert_eq!(m.rows.len(), s.len() - 336 - 1);
        assert!(m.rows.iter().all(|r| r.step != 400));
        assert_eq!(m.rows[0].step, 336);
    }

    #[test]
    fn encode_layout() {
        let spec = FeatureSpec {
            use_dow_onehot: true,
            use_month_onehot: true,
            use_hour_onehot: true,
            ..Default::default()
        };
        assert_eq!(spec.input_width(), 46);
        assert_eq!(spec.column_names().len(), 46);
        let row = FeatureRow {
            step: 0,
            timestamp: monday(),
            target: 1.0,
            lag_values: vec![1.0, 2.0, 3.0],
            dow: 2,
            month: 12,
            hour: 23,
        };
        let x = row.encode(&spec);
        assert_eq!(&x[..3], &[1.0, 2.0, 3.0]);
        assert_eq!(x[3 + 2], 1.0);
        assert_eq!(x[10 + 11], 1.0);
        assert_eq!(x[22 + 23], 1.0);
        assert_eq!(x.iter().sum::<f64>(), 9.0);
    }

    #[test]
    fn split_counts_follow_floor_rule() {
        for (n, expected) in [(100, [80, 10, 10]), (103, [82, 10, 11]), (10, [8, 1, 1])] {
            let s = series(336 + n);
            let m = split_rows(build_matrix(&s, &FeatureSpec::default()).unwrap(), SplitRatios::default(), 3).unwrap();
            assert_eq!(m.split_counts(), expected, "n = {n}");
        }
    }

    #[test]
    fn split_is_deterministic() {
        let m = build_matrix(&series(800), &FeatureSpec::default()).unwrap();
        let a = split_rows(m.clone(), SplitRatios::default(), 11).unwrap();
        let b = split_rows(m.clone(), SplitRatios::default(), 11).unwrap();
        let c = split_rows(m, SplitRatios::default(), 12).unwrap();
        assert_eq!(a.split, b.split);
        assert_ne!(a.split, c.split);
    }

    #[test]
    fn split_rejects_small_or_bad_input() {
        let m = build_matrix(&series(345), &FeatureSpec::default()).unwrap();
        assert!(matches!(split_rows(m.clone(), SplitRatios::default(), 1), Err(Error::TooFewRows(9))));
        let bad = SplitRatios {
            train: 0.5,
            validation: 0.1,
            test: 0.1,
        };
        assert!(matches!(split_rows(m, bad, 1), Err(Error::Config(_))));
    }

    #[test]
    fn csv_header() {
        let m = build_matrix(&series(338), &FeatureSpec::default()).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lag_48,lag_144,lag_336,target,timestamp,split\n"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn lags_match_direct_indexing(len in 337usize..700, seed in any::<u64>()) {
            let values: Vec<u32> = (0..len as u64).map(|i| ((i.wrapping_mul(seed | 1)) >> 7) as u32 % 200).collect();
            let s = PluginSeries::unmasked(monday(), Resolution::HalfHour, values.clone()).unwrap();
            let m = build_matrix(&s, &FeatureSpec::default()).unwrap();
            prop_assert_eq!(m.rows.len(), len - 336);
            for row in &m.rows {
                for (lag, v) in DEFAULT_LAGS.iter().zip(&row.lag_values) {
                    prop_assert_eq!(*v, f64::from(values[row.step - lag]));
                }
            }
            prop_assert_eq!(build_matrix(&s, &FeatureSpec::default()).unwrap(), m);
        }

        #[test]
        fn splits_partition_rows(len in 346usize..900, seed in any::<u64>()) {
            let m = split_rows(build_matrix(&series(len), &FeatureSpec::default()).unwrap(), SplitRatios::default(), seed).unwrap();
            let n = m.rows.len();
            let total: usize = Split::ALL.iter().map(|s| m.rows_in(*s).count()).sum();
            prop_assert_eq!(total, n);
            let [tr, va, te] = m.split_counts();
            prop_assert!((tr as f64 - 0.8 * n as f64).abs() <= 1.0);
            prop_assert!((va as f64 - 0.1 * n as f64).abs() <= 1.0);
            prop_assert!((te as f64 - 0.1 * n as f64).abs() <= 2.0);
        }
    }
}
