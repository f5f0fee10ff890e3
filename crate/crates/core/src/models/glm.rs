//! Per-day-of-week linear model on calendar lags.
//!
//! For each day `d` the forecast is `Σ_i coef[d][i] · lag_i`, fitted by
//! ordinary least squares on that day's training rows. No intercept unless
//! explicitly requested.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, Split};
use crate::linalg::lstsq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    /// Lag offsets the coefficients refer to.
    pub lags: Vec<usize>,
    /// `coefficients[dow][i]` multiplies the value `lags[i]` steps back.
    pub coefficients: Vec<Vec<f64>>,
    /// Per-day constant, present only when fitted with an intercept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercepts: Option<Vec<f64>>,
}

impl GlmModel {
    /// Fits one regression per day of week on the given rows.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureRow>, lags: &[usize], intercept: bool) -> Result<Self> {
        let mut by_day: [Vec<&FeatureRow>; 7] = Default::default();
        for row in rows {
            by_day[usize::from(row.dow)].push(row);
        }
        let k = lags.len() + usize::from(intercept);
        let mut coefficients = Vec::with_capacity(7);
        let mut intercepts = Vec::with_capacity(7);
        for (day, rows) in by_day.iter().enumerate() {
            let day = day as u8;
            if rows.len() < k.max(3) {
                return Err(Error::GlmFit {
                    day,
                    reason: format!("{} training rows, need at least {}", rows.len(), k.max(3)),
                });
            }
            let x = DMatrix::from_fn(rows.len(), k, |r, c| {
                if c < lags.len() {
                    rows[r].lag_values[c]
                } else {
                    1.0
                }
            });
            let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.target));
            // Exactly determined systems are allowed here, unlike in `lstsq`.
            let beta = if rows.len() == k {
                x.clone().lu().solve(&y).map(|b| b.iter().copied().collect::<Vec<_>>())
            } else {
                lstsq(&x, &y).map(|fit| fit.beta)
            }
            .ok_or_else(|| Error::GlmFit {
                day,
                reason: "rank-deficient design".into(),
            })?;
            if beta.iter().any(|b| !b.is_finite()) {
                return Err(Error::GlmFit {
                    day,
                    reason: "non-finite coefficient".into(),
                });
            }
            coefficients.push(beta[..lags.len()].to_vec());
            if intercept {
                intercepts.push(beta[lags.len()]);
            }
        }
        Ok(Self {
            lags: lags.to_vec(),
            coefficients,
            intercepts: intercept.then_some(intercepts),
        })
    }

    pub fn predict_row(&self, row: &FeatureRow) -> f64 {
        let d = usize::from(row.dow);
        let linear: f64 = self.coefficients[d]
            .iter()
            .zip(&row.lag_values)
            .map(|(c, x)| c * x)
            .sum();
        linear + self.intercepts.as_ref().map_or(0.0, |b| b[d])
    }
}

/// Fits on the training split (or on every row of an unsplit matrix),
/// without an intercept.
pub fn glm_fit(matrix: &FeatureMatrix) -> Result<GlmModel> {
    glm_fit_with(matrix, false)
}

pub fn glm_fit_with(matrix: &FeatureMatrix, intercept: bool) -> Result<GlmModel> {
    if matrix.split.is_some() {
        GlmModel::fit(matrix.rows_in(Split::Train), &matrix.spec.lags, intercept)
    } else {
        GlmModel::fit(&matrix.rows, &matrix.spec.lags, intercept)
    }
}
