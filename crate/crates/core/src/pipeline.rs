//! End-to-end steps driven by a single JSON [`RunConfig`].
//!
//! Every step reads and writes inside `output_dir`:
//!
//! | step       | reads                          | writes |
//! |------------|--------------------------------|--------|
//! | `synth`    | config                         | `events.csv`, `synth_provenance.json` |
//! | `build`    | `input_csv` or `events.csv`    | `series.csv`, `ingest_report.json` |
//! | `analyze`  | `series.csv`, exogenous CSVs   | `grouped_*.csv`, `lag_correlation.csv`, `analysis.json` |
//! | `train`    | `series.csv`                   | `features.csv`, `models/<name>.json`, `models/<name>_loss.csv` |
//! | `evaluate` | `series.csv`, `models/*.json`  | `metrics.csv`, `residual_stats.csv`, `residuals_by_day.csv`, `report.json` |

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{
    self, build_report_with, exogenous_correlation, grouped_distribution, lag_correlation_by_day, AnalysisReport,
    EvaluationReport, ExogenousSeries, GroupKey, ReportOptions,
};
use crate::features::{build_matrix, split_rows, FeatureMatrix, FeatureSpec, SplitRatios};
use crate::ingest::{self, filter_overlong, parse_events, ColumnMapping, IngestReport};
use crate::models::{glm_fit_with, mlp_train, LossHistory, MlpModel, MlpVariant, ModelArtifact, TrainConfig};
use crate::rng::derive_seed;
use crate::series::{adf_test, aggregate, apply_exclusions, resample_halfhour_min, ExclusionConfig, PluginSeries, Resolution, TimeWindow};
use crate::synth::{generate_events, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "persistence")]
    Persistence,
    #[serde(rename = "glm")]
    Glm,
    #[serde(rename = "nn-v1")]
    NnV1,
    #[serde(rename = "nn-v2")]
    NnV2,
    #[serde(rename = "nn-v3")]
    NnV3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Persistence,
        ModelKind::Glm,
        ModelKind::NnV1,
        ModelKind::NnV2,
        ModelKind::NnV3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Persistence => "persistence",
            ModelKind::Glm => "glm",
            ModelKind::NnV1 => "nn-v1",
            ModelKind::NnV2 => "nn-v2",
            ModelKind::NnV3 => "nn-v3",
        }
    }

    fn variant(self) -> Option<MlpVariant> {
        match self {
            ModelKind::NnV1 => Some(MlpVariant::V1),
            ModelKind::NnV2 => Some(MlpVariant::V2),
            ModelKind::NnV3 => Some(MlpVariant::V3),
            _ => None,
        }
    }
}

/// Named seeds for every random step other than synthetic generation, whose
/// seed lives in [`SynthConfig::seed`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub nn_v1: u64,
    pub nn_v2: u64,
    pub nn_v3: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            split: 42,
            nn_v1: 101,
            nn_v2: 102,
            nn_v3: 103,
        }
    }
}

impl Seeds {
    pub fn for_variant(&self, variant: MlpVariant) -> u64 {
        match variant {
            MlpVariant::V1 => self.nn_v1,
            MlpVariant::V2 => self.nn_v2,
            MlpVariant::V3 => self.nn_v3,
        }
    }
}

/// Explicit aggregation window (`end` exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateSpan {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExogenousInput {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    /// Session CSV; `<output_dir>/events.csv` when absent.
    pub input_csv: Option<PathBuf>,
    pub columns: ColumnMapping,
    pub max_duration_days: u32,
    /// Aggregation window; inferred from session start dates when absent.
    pub window: Option<DateSpan>,
    pub exclusions: ExclusionConfig,
}

impl Default for BuildSection {
    fn default() -> Self {
        Self {
            input_csv: None,
            columns: ColumnMapping::default(),
            max_duration_days: 7,
            window: None,
            exclusions: ExclusionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub adf_max_lag: usize,
    /// Files that do not exist are skipped.
    pub exogenous: Vec<ExogenousInput>,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            adf_max_lag: 20,
            exogenous: Vec::new(),
        }
    }
}

/// Shared by `train` and `evaluate` so both see the same rows and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    /// One-hot flags are set per model.
    pub lags: Vec<usize>,
    pub split_ratios: SplitRatios,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            lags: FeatureSpec::default().lags,
            split_ratios: SplitRatios::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub glm_intercept: bool,
    /// Network training settings; the seed is replaced per variant.
    pub network: TrainConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub floor_predictions: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Also write per-figure box-plot data under `plot/`.
    pub plot: bool,
    pub models: Vec<ModelKind>,
    pub seeds: Seeds,
    pub synth: SynthConfig,
    pub build: BuildSection,
    pub analyze: AnalyzeSection,
    pub features: FeaturesSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            plot: false,
            models: ModelKind::ALL.to_vec(),
            seeds: Seeds::default(),
            synth: SynthConfig::default(),
            build: BuildSection::default(),
            analyze: AnalyzeSection::default(),
            features: FeaturesSection::default(),
            train: TrainSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Replaces every seed with one derived from `master`.
    pub fn apply_master_seed(&mut self, master: u64) {
        self.synth.seed = derive_seed(master, "synth");
        self.seeds = Seeds {
            split: derive_seed(master, "split"),
            nn_v1: derive_seed(master, "nn-v1"),
            nn_v2: derive_seed(master, "nn-v2"),
            nn_v3: derive_seed(master, "nn-v3"),
        };
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_spec().validate()?;
        self.train.network.validate()?;
        self.synth.validate()?;
        if self.models.is_empty() {
            return Err(Error::Config("no models requested".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("output_dir is empty".into()));
        }
        if let Some(w) = self.build.window {
            if w.end <= w.start {
                return Err(Error::Config("window end must follow its start".into()));
            }
        }
        let r = self.features.split_ratios;
        let parts = [r.train, r.validation, r.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split ratios must lie in [0, 1] and sum to 1".into()));
        }
        Ok(())
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec {
            lags: self.features.lags.clone(),
            ..FeatureSpec::default()
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn events_path(&self) -> PathBuf {
        self.build.input_csv.clone().unwrap_or_else(|| self.out("events.csv"))
    }

    fn model_path(&self, kind: ModelKind) -> PathBuf {
        self.output_dir.join("models").join(format!("{}.json", kind.name()))
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = eval::create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProvenance {
    pub seed: u64,
    pub config_sha256: String,
    pub n_events: usize,
}

/// Generates synthetic sessions into `events.csv`.
pub fn cmd_synth(config: &RunConfig) -> Result<SynthProvenance> {
    config.validate()?;
    let events = generate_events(&config.synth)?;
    let path = config.out("events.csv");
    let mut w = eval::create(&path)?;
    ingest::write_events(&mut w, &events)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let provenance = SynthProvenance {
        seed: config.synth.seed,
        config_sha256: sha256_hex(serde_json::to_string(&config.synth)?.as_bytes()),
        n_events: events.len(),
    };
    write_text(&config.out("synth_provenance.json"), &serde_json::to_string_pretty(&provenance)?)?;
    Ok(provenance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub series: PluginSeries,
    pub report: IngestReport,
}

/// Sessions to a masked half-hourly series, without touching the filesystem.
pub fn build_series(
    events: Vec<ingest::ChargingEvent>,
    mut report: IngestReport,
    config: &RunConfig,
) -> Result<BuildOutput> {
    let (events, removed) = filter_overlong(events, i64::from(config.build.max_duration_days) * 24 * 60);
    report.record_overlong(removed);
    let span = match config.build.window {
        Some(span) => span,
        None => {
            let first = events.iter().map(|e| e.start.date()).min();
            let last = events.iter().map(|e| e.start.date()).max();
            match (first, last) {
                (Some(first), Some(last)) => DateSpan {
                    start: first,
                    end: last + Days::new(1),
                },
                _ => return Err(Error::Empty("no sessions to aggregate and no window configured")),
            }
        }
    };
    let window = TimeWindow::whole_days(span.start, span.end)?;
    let minutely = aggregate(&events, &window);
    let series = apply_exclusions(&resample_halfhour_min(&minutely)?, &config.build.exclusions);
    Ok(BuildOutput { series, report })
}

/// Ingests sessions and writes `series.csv` plus `ingest_report.json`.
pub fn cmd_build(config: &RunConfig) -> Result<BuildOutput> {
    config.validate()?;
    let input = config.events_path();
    let (events, report) = parse_events(open(&input)?, &config.build.columns).map_err(|e| match e {
        Error::Csv(err) => Error::Config(format!("{}: {err}", input.display())),
        other => other,
    })?;
    let out = build_series(events, report, config)?;
    let path = config.out("series.csv");
    let mut w = eval::create(&path)?;
    out.series.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_text(&config.out("ingest_report.json"), &serde_json::to_string_pretty(&out.report)?)?;
    Ok(out)
}

pub fn load_series(config: &RunConfig) -> Result<PluginSeries> {
    let path = config.out("series.csv");
    PluginSeries::read_csv(open(&path)?, Resolution::HalfHour)
}

/// Distribution, correlation and stationarity analysis of a series.
pub fn analyze_series(series: &PluginSeries, config: &RunConfig) -> Result<AnalysisReport> {
    let mut exogenous = Vec::new();
    for input in &config.analyze.exogenous {
        if !input.path.exists() {
            continue;
        }
        let exo = ExogenousSeries::read_csv(&input.name, open(&input.path)?)?;
        exogenous.push(exogenous_correlation(series, &exo)?);
    }
    Ok(AnalysisReport {
        grouped: GroupKey::ALL.iter().map(|k| grouped_distribution(series, *k)).collect(),
        lag_correlation: lag_correlation_by_day(series),
        adf: adf_test(series, config.analyze.adf_max_lag).map_err(|e| e.to_string()),
        exogenous,
    })
}

/// Writes the analysis outputs for `series.csv`. Configured exogenous files
/// that do not exist are skipped.
pub fn cmd_analyze(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let series = load_series(config)?;
    let report = analyze_series(&series, config)?;
    report.write_dir(&config.output_dir, &series, config.plot)?;
    Ok(report)
}

/// Split feature matrix for the configured lags and split seed.
pub fn prepare_matrix(series: &PluginSeries, config: &RunConfig) -> Result<FeatureMatrix> {
    let matrix = build_matrix(series, &config.feature_spec())?;
    split_rows(matrix, config.features.split_ratios, config.seeds.split)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub artifact: ModelArtifact,
    pub history: Option<LossHistory>,
}

/// Fits or trains every configured model on `matrix`. Network variants train
/// on separate threads, each with its own seed.
pub fn train_models(matrix: &FeatureMatrix, config: &RunConfig) -> Result<Vec<TrainedModel>> {
    let networks: Vec<(ModelKind, MlpVariant)> = config
        .models
        .iter()
        .filter_map(|k| k.variant().map(|v| (*k, v)))
        .collect();
    let trained: Vec<Result<TrainedModel>> = std::thread::scope(|scope| {
        let handles: Vec<_> = networks
            .iter()
            .map(|(_, variant)| {
                let variant = *variant;
                scope.spawn(move || {
                    let seed = config.seeds.for_variant(variant);
                    let train = TrainConfig {
                        seed: derive_seed(seed, "batches"),
                        ..config.train.network.clone()
                    };
                    let model = MlpModel::new(variant, &config.features.lags, seed);
                    let (model, history) = mlp_train(model, matrix, &train)?;
                    Ok(TrainedModel {
                        artifact: ModelArtifact::mlp(model, train),
                        history: Some(history),
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    let mut trained = trained.into_iter();

    let mut out = Vec::with_capacity(config.models.len());
    for kind in &config.models {
        out.push(match kind {
            ModelKind::Persistence => TrainedModel {
                artifact: ModelArtifact::persistence(),
                history: None,
            },
            ModelKind::Glm => TrainedModel {
                artifact: ModelArtifact::glm(glm_fit_with(matrix, config.train.glm_intercept)?),
                history: None,
            },
            _ => trained.next().expect("one result per network")?,
        });
    }
    Ok(out)
}

/// Builds features, trains all requested models and writes their artifacts.
pub fn cmd_train(config: &RunConfig) -> Result<Vec<TrainedModel>> {
    config.validate()?;
    let series = load_series(config)?;
    let matrix = prepare_matrix(&series, config)?;
    let path = config.out("features.csv");
    let mut w = eval::create(&path)?;
    matrix.write_csv(&mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    let trained = train_models(&matrix, config)?;
    for (kind, t) in config.models.iter().zip(&trained) {
        write_text(&config.model_path(*kind), &t.artifact.to_json()?)?;
        if let Some(history) = &t.history {
            let path = config.output_dir.join("models").join(format!("{}_loss.csv", kind.name()));
            let mut w = eval::create(&path)?;
            history.write_csv(&mut w)?;
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(trained)
}

pub fn load_artifacts(config: &RunConfig) -> Result<Vec<ModelArtifact>> {
    config
        .models
        .iter()
        .map(|kind| {
            let path = config.model_path(*kind);
            if !path.exists() {
                return Err(Error::MissingArtifact(path));
            }
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            ModelArtifact::from_json(&text)
        })
        .collect()
}

/// Scores the stored artifacts and writes the evaluation report files.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let series = load_series(config)?;
    let artifacts = load_artifacts(config)?;
    let matrix = prepare_matrix(&series, config)?;
    let options = ReportOptions {
        floor_predictions: config.evaluate.floor_predictions,
    };
    let report = build_report_with(&artifacts, &matrix, &series, options)?;
    report.write_dir(&config.output_dir, config.plot)?;
    Ok(report)
}

/// `analyze` followed by `evaluate`.
pub fn cmd_report(config: &RunConfig) -> Result<(AnalysisReport, EvaluationReport)> {
    Ok((cmd_analyze(config)?, cmd_evaluate(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn master_seed_changes_every_seed() {
        let mut c = RunConfig::default();
        c.apply_master_seed(7);
        let d = RunConfig::default();
        assert_ne!(c.seeds.split, d.seeds.split);
        assert_ne!(c.synth.seed, d.synth.seed);
        let mut e = RunConfig::default();
        e.apply_master_seed(7);
        assert_eq!(c, e);
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let c: RunConfig = serde_json::from_str("{\"output_dir\": \"x\", \"train\": {\"network\": {\"epochs\": 5}}}").unwrap();
        assert_eq!(c.train.network.epochs, 5);
        assert_eq!(c.train.network.batch_size, 100);
        assert_eq!(c.models.len(), 5);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn invalid_config_is_a_validation_error() {
        let mut c = RunConfig::default();
        c.features.lags = vec![144, 48];
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
