use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy of one model on one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    /// `None` when every actual is zero and the percentage error is undefined.
    pub mape_pct: Option<f64>,
    pub mae: f64,
    pub n: usize,
    pub n_skipped_zero_actual: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    pub range: f64,
    pub iqr: f64,
}

fn check_lengths(predictions: &[f64], actuals: &[f64]) -> Result<()> {
    if predictions.len() != actuals.len() {
        return Err(Error::LengthMismatch(predictions.len(), actuals.len()));
    }
    Ok(())
}

/// `prediction - actual` per step: negative values are overestimates.
pub fn residuals(predictions: &[f64], actuals: &[f64]) -> Result<Vec<f64>> {
    check_lengths(predictions, actuals)?;
    Ok(predictions.iter().zip(actuals).map(|(p, a)| p - a).collect())
}

/// RMSE, MAE and MAPE. MAPE averages only over nonzero actuals and reports how
/// many zero actuals were skipped.
pub fn metrics(predictions: &[f64], actuals: &[f64]) -> Result<MetricSet> {
    let r = residuals(predictions, actuals)?;
    if r.is_empty() {
        return Err(Error::Empty("metrics need at least one prediction"));
    }
    let n = r.len() as f64;
    let rmse = (r.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let mae = r.iter().map(|e| e.abs()).sum::<f64>() / n;
    let (ape_sum, counted) = r
        .iter()
        .zip(actuals)
        .filter(|(_, a)| **a != 0.0)
        .fold((0.0, 0usize), |(s, c), (e, a)| (s + (e / a).abs(), c + 1));
    Ok(MetricSet {
        rmse,
        mape_pct: (counted > 0).then(|| 100.0 * ape_sum / counted as f64),
        mae,
        n: r.len(),
        n_skipped_zero_actual: r.len() - counted,
    })
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Descriptive statistics; the standard deviation divides by `n`.
pub fn residual_stats(residuals: &[f64]) -> Result<ResidualStats> {
    if residuals.is_empty() {
        return Err(Error::Empty("residual statistics need at least one value"));
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let sorted = sorted_copy(residuals);
    Ok(ResidualStats {
        mean,
        median: quantile_sorted(&sorted, 0.5),
        std_dev: var.sqrt(),
        range: sorted[sorted.len() - 1] - sorted[0],
        iqr: quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
    })
}
