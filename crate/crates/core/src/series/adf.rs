//! Augmented Dickey-Fuller unit-root test with a constant term.
//!
//! The regression is
//!
//! ```text
//! Δy_t = α + γ·y_{t-1} + Σ_{i=1..p} β_i·Δy_{t-i} + ε_t
//! ```
//!
//! and the statistic is the t-ratio of γ. With automatic lag selection every
//! order `0..=max_lag` is fitted on the common sample that the largest order
//! allows, the order with the smallest AIC wins (ties go to the smaller
//! order), and the winner is refitted on all rows available to it.
//! A regression row is usable only when the target and every lagged value it
//! touches are unmasked.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PluginSeries;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, LeastSquares};

/// Asymptotic critical values for the constant-only case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    #[serde(rename = "1%")]
    pub one_pct: f64,
    #[serde(rename = "5%")]
    pub five_pct: f64,
    #[serde(rename = "10%")]
    pub ten_pct: f64,
}

impl Default for CriticalValues {
    fn default() -> Self {
        Self {
            one_pct: -3.43,
            five_pct: -2.86,
            ten_pct: -2.57,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lag_order: usize,
    pub nobs: usize,
    pub critical_values: CriticalValues,
    pub stationary_at_5pct: bool,
}

impl AdfResult {
    fn new(statistic: f64, lag_order: usize, nobs: usize) -> Self {
        let critical_values = CriticalValues::default();
        Self {
            statistic,
            lag_order,
            nobs,
            stationary_at_5pct: statistic < critical_values.five_pct,
            critical_values,
        }
    }
}

struct Prepared {
    levels: Vec<f64>,
    diffs: Vec<f64>,
    mask: Vec<bool>,
}

impl Prepared {
    fn new(series: &PluginSeries, max_lag: usize) -> Result<Self> {
        let levels = series.values().iter().map(|v| f64::from(*v)).collect();
        Self::from_levels(levels, series.mask().to_vec(), max_lag)
    }

    fn from_levels(levels: Vec<f64>, mask: Vec<bool>, max_lag: usize) -> Result<Self> {
        let unmasked = mask.iter().filter(|m| !**m).count();
        if unmasked < max_lag + 10 {
            return Err(Error::InsufficientHistory {
                needed: max_lag + 10,
                available: unmasked,
            });
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries("non-finite value".into()));
        }
        let mut diffs = vec![f64::NAN; levels.len()];
        for t in 1..levels.len() {
            diffs[t] = levels[t] - levels[t - 1];
        }
        Ok(Self { levels, diffs, mask })
    }

    /// Target indices whose regression window back to `t - window - 1` is unmasked.
    fn rows(&self, window: usize) -> Vec<usize> {
        let n = self.levels.len();
        // Running count of masked steps for O(1) window checks.
        let mut masked_before = vec![0usize; n + 1];
        for i in 0..n {
            masked_before[i + 1] = masked_before[i] + usize::from(self.mask[i]);
        }
        (window + 1..n)
            .filter(|&t| masked_before[t + 1] - masked_before[t - window - 1] == 0)
            .collect()
    }

    fn fit(&self, rows: &[usize], lag: usize) -> Option<LeastSquares> {
        let k = 2 + lag;
        let x = DMatrix::from_fn(rows.len(), k, |r, c| {
            let t = rows[r];
            match c {
                0 => 1.0,
                1 => self.levels[t - 1],
                _ => self.diffs[t - (c - 1)],
            }
        });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&t| self.diffs[t]));
        lstsq(&x, &y)
    }

    fn statistic(&self, lag: usize) -> Result<AdfResult> {
        let rows = self.rows(lag);
        let fit = self
            .fit(&rows, lag)
            .ok_or_else(|| Error::DegenerateSeries(format!("singular ADF regression at lag order {lag}")))?;
        if fit.ssr <= f64::EPSILON * rows.len() as f64 {
            return Err(Error::DegenerateSeries("ADF regression has zero residual variance".into()));
        }
        let statistic = fit.beta[1] / fit.std_error(1);
        Ok(AdfResult::new(statistic, lag, fit.nobs))
    }
}

/// ADF test with the lag order chosen by minimum AIC over `0..=max_lag`.
pub fn adf_test(series: &PluginSeries, max_lag: usize) -> Result<AdfResult> {
    select_and_test(&Prepared::new(series, max_lag)?, max_lag)
}

/// ADF test at a fixed lag order.
pub fn adf_test_fixed_lag(series: &PluginSeries, lag: usize) -> Result<AdfResult> {
    Prepared::new(series, lag)?.statistic(lag)
}

/// [`adf_test`] on an unmasked real-valued sequence.
pub fn adf_test_values(values: &[f64], max_lag: usize) -> Result<AdfResult> {
    select_and_test(&Prepared::from_levels(values.to_vec(), vec![false; values.len()], max_lag)?, max_lag)
}

/// [`adf_test_fixed_lag`] on an unmasked real-valued sequence.
pub fn adf_test_values_fixed_lag(values: &[f64], lag: usize) -> Result<AdfResult> {
    Prepared::from_levels(values.to_vec(), vec![false; values.len()], lag)?.statistic(lag)
}

fn select_and_test(prepared: &Prepared, max_lag: usize) -> Result<AdfResult> {
    let common = prepared.rows(max_lag);
    let mut best: Option<(f64, usize)> = None;
    for lag in 0..=max_lag {
        let fit = prepared
            .fit(&common, lag)
            .ok_or_else(|| Error::DegenerateSeries(format!("singular ADF regression at lag order {lag}")))?;
        let aic = fit.aic();
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lag));
        }
    }
    let (_, lag) = best.expect("at least one lag order");
    prepared.statistic(lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Resolution;
    use chrono::NaiveDate;

    fn series(values: Vec<u32>) -> PluginSeries {
        let start = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        PluginSeries::unmasked(start, Resolution::HalfHour, values).unwrap()
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = series(vec![12; 500]);
        assert!(matches!(adf_test(&s, 5), Err(Error::DegenerateSeries(_))));
        assert!(matches!(adf_test_fixed_lag(&s, 0), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn too_short_series() {
        let s = series(vec![1, 2, 3, 4, 5]);
        assert!(matches!(adf_test(&s, 2), Err(Error::InsufficientHistory { .. })));
    }

    #[test]
    fn flag_follows_five_percent_value() {
        let r = AdfResult::new(-2.9, 0, 10);
        assert!(r.stationary_at_5pct);
        let r = AdfResult::new(-2.86, 0, 10);
        assert!(!r.stationary_at_5pct);
    }

    #[test]
    fn masked_steps_break_regression_windows() {
        let values: Vec<u32> = (0..400u32).map(|i| (i * 7919 % 31) + (i % 5)).collect();
        let s = series(values);
        let full = adf_test_fixed_lag(&s, 2).unwrap();
        assert_eq!(full.nobs, 400 - 3);
        let mut mask = vec![false; 400];
        mask[100] = true;
        let masked = adf_test_fixed_lag(&s.with_mask(mask).unwrap(), 2).unwrap();
        // Rows 100..=103 all touch step 100.
        assert_eq!(masked.nobs, 400 - 3 - 4);
    }
}
