use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::correlation::{DayCorrelation, ExogenousCorrelation};
use super::distribution::{by_day_of_week, BoxSummary, GroupedDistribution};
use super::metrics::{metrics, residual_stats, residuals, MetricSet, ResidualStats};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, Split};
use crate::models::ModelArtifact;
use crate::series::{AdfResult, PluginSeries};

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

const BOX_HEADER: [&str; 9] = ["label", "n", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high"];

fn box_fields(b: &BoxSummary) -> Vec<String> {
    vec![
        b.label.clone(),
        b.n.to_string(),
        b.min.to_string(),
        b.q1.to_string(),
        b.median.to_string(),
        b.q3.to_string(),
        b.max.to_string(),
        b.whisker_low.to_string(),
        b.whisker_high.to_string(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: Split,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub name: String,
    pub splits: Vec<SplitMetrics>,
    pub test_residuals: ResidualStats,
    /// Test residuals summarised per day of week.
    pub residuals_by_day: Vec<BoxSummary>,
}

impl ModelEvaluation {
    pub fn metrics(&self, split: Split) -> Option<&MetricSet> {
        self.splits.iter().find(|s| s.split == split).map(|s| &s.metrics)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub models: Vec<ModelEvaluation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Round predictions down to whole vehicles before scoring.
    pub floor_predictions: bool,
}

/// Scores every model on every split of `matrix`.
pub fn build_report(models: &[ModelArtifact], matrix: &FeatureMatrix, series: &PluginSeries) -> Result<EvaluationReport> {
    build_report_with(models, matrix, series, ReportOptions::default())
}

pub fn build_report_with(
    models: &[ModelArtifact],
    matrix: &FeatureMatrix,
    series: &PluginSeries,
    options: ReportOptions,
) -> Result<EvaluationReport> {
    if matrix.split.is_none() {
        return Err(Error::Config("feature matrix must be split before evaluation".into()));
    }
    let by_split: Vec<(Split, Vec<&FeatureRow>)> = Split::ALL.iter().map(|s| (*s, matrix.rows_in(*s).collect())).collect();
    let mut evaluations = Vec::with_capacity(models.len());
    for model in models {
        let mut splits = Vec::with_capacity(3);
        let mut test = None;
        for (split, rows) in &by_split {
            if rows.is_empty() {
                continue;
            }
            let mut predicted = model.predict_rows(rows, &matrix.spec, series)?;
            if options.floor_predictions {
                predicted.iter_mut().for_each(|p| *p = p.floor());
            }
            let actual: Vec<f64> = rows.iter().map(|r| r.target).collect();
            splits.push(SplitMetrics {
                split: *split,
                metrics: metrics(&predicted, &actual)?,
            });
            if *split == Split::Test {
                let r = residuals(&predicted, &actual)?;
                let days: Vec<u8> = rows.iter().map(|r| r.dow).collect();
                test = Some((residual_stats(&r)?, by_day_of_week(&r, &days)));
            }
        }
        let (test_residuals, residuals_by_day) = test.ok_or(Error::Empty("test split"))?;
        evaluations.push(ModelEvaluation {
            name: model.name.clone(),
            splits,
            test_residuals,
            residuals_by_day,
        });
    }
    Ok(EvaluationReport { models: evaluations })
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `metrics.csv`, `residual_stats.csv`, `residuals_by_day.csv` and
    /// `report.json`, plus per-model box-plot files under `plot/` when asked.
    pub fn write_dir(&self, dir: &Path, plot: bool) -> Result<()> {
        write_csv(
            &dir.join("metrics.csv"),
            &["model", "split", "rmse", "mape_pct", "mae", "n"],
            self.models.iter().flat_map(|m| {
                m.splits.iter().map(|s| {
                    vec![
                        m.name.clone(),
                        s.split.as_str().to_string(),
                        s.metrics.rmse.to_string(),
                        opt(s.metrics.mape_pct),
                        s.metrics.mae.to_string(),
                        s.metrics.n.to_string(),
                    ]
                })
            }),
        )?;
        write_csv(
            &dir.join("residual_stats.csv"),
            &["model", "mean", "median", "std_dev", "range", "iqr"],
            self.models.iter().map(|m| {
                let r = &m.test_residuals;
                vec![
                    m.name.clone(),
                    r.mean.to_string(),
                    r.median.to_string(),
                    r.std_dev.to_string(),
                    r.range.to_string(),
                    r.iqr.to_string(),
                ]
            }),
        )?;
        let mut header = vec!["model"];
        header.extend(BOX_HEADER);
        write_csv(
            &dir.join("residuals_by_day.csv"),
            &header,
            self.models.iter().flat_map(|m| {
                m.residuals_by_day.iter().map(|b| {
                    let mut row = vec![m.name.clone()];
                    row.extend(box_fields(b));
                    row
                })
            }),
        )?;
        write_json(&dir.join("report.json"), self)?;
        if plot {
            for m in &self.models {
                write_csv(
                    &dir.join("plot").join(format!("residuals_by_day_{}.csv", m.name)),
                    &BOX_HEADER,
                    m.residuals_by_day.iter().map(box_fields),
                )?;
            }
        }
        Ok(())
    }
}

/// Feature-investigation results for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub grouped: Vec<GroupedDistribution>,
    pub lag_correlation: Vec<DayCorrelation>,
    /// `Err` text when the test could not run (for example a degenerate series).
    pub adf: std::result::Result<AdfResult, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exogenous: Vec<ExogenousCorrelation>,
}

impl AnalysisReport {
    /// Writes `grouped_<key>.csv`, `lag_correlation.csv`, optional
    /// `exogenous_correlation.csv` and `analysis.json`. With `plot`, box-plot
    /// files and the raw series go under `plot/`.
    pub fn write_dir(&self, dir: &Path, series: &PluginSeries, plot: bool) -> Result<()> {
        let mut header = vec!["group"];
        header.extend(BOX_HEADER);
        for g in &self.grouped {
            let rows = g.groups.iter().map(|b| {
                let mut row = vec![b.group.to_string()];
                row.extend(box_fields(b));
                row
            });
            write_csv(&dir.join(format!("grouped_{}.csv", g.key.as_str())), &header, rows)?;
        }
        write_csv(
            &dir.join("lag_correlation.csv"),
            &["day", "pearson", "spearman", "n_pairs"],
            self.lag_correlation
                .iter()
                .map(|d| vec![d.name.clone(), opt(d.pearson), opt(d.spearman), d.n_pairs.to_string()]),
        )?;
        if !self.exogenous.is_empty() {
            write_csv(
                &dir.join("exogenous_correlation.csv"),
                &["variable", "pearson", "spearman", "n"],
                self.exogenous
                    .iter()
                    .map(|e| vec![e.name.clone(), e.pearson.to_string(), e.spearman.to_string(), e.n.to_string()]),
            )?;
        }
        write_json(&dir.join("analysis.json"), self)?;
        if plot {
            for g in &self.grouped {
                write_csv(
                    &dir.join("plot").join(format!("plugin_by_{}.csv", g.key.as_str())),
                    &BOX_HEADER,
                    g.groups.iter().map(box_fields),
                )?;
            }
            let path = dir.join("plot").join("aggregate_series.csv");
            let w = create(&path)?;
            series.write_csv(w)?;
        }
        Ok(())
    }
}
