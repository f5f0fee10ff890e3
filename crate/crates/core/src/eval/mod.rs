//! Accuracy metrics, residual diagnostics, correlations and grouped
//! distributions, assembled into evaluation and analysis reports.

mod correlation;
mod distribution;
mod metrics;
mod report;

pub use correlation::{
    average_ranks, exogenous_correlation, lag_correlation_by_day, pearson, spearman, DayCorrelation,
    ExogenousCorrelation, ExogenousSeries,
};
pub use distribution::{grouped_distribution, BoxSummary, GroupKey, GroupedDistribution};
pub use metrics::{metrics, quantile_sorted, residual_stats, residuals, MetricSet, ResidualStats};
pub use report::{
    build_report, build_report_with, AnalysisReport, EvaluationReport, ModelEvaluation, ReportOptions, SplitMetrics,
};

pub(crate) use report::create;
