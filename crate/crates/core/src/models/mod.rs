//! Forecast models and their on-disk artifacts.

pub mod adam;
pub mod glm;
pub mod mlp;
pub mod persistence;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig};
pub use glm::{glm_fit, glm_fit_with, GlmModel};
pub use mlp::{
    mlp_init, mlp_train, Dense, DenseGrad, FeatureScaler, ForwardMode, LossHistory, MlpModel, MlpVariant, Network,
    TrainConfig, HIDDEN_WIDTHS,
};
pub use persistence::{persistence_offset, persistence_predict};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, FeatureSpec};
use crate::series::PluginSeries;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Forecaster {
    Persistence,
    Glm(GlmModel),
    Mlp(MlpModel),
}

/// A trained (or rule-based) model with everything needed to reproduce its
/// predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub name: String,
    pub spec: FeatureSpec,
    pub model: Forecaster,
    pub train_config: Option<TrainConfig>,
}

impl ModelArtifact {
    pub fn persistence() -> Self {
        Self {
            name: "persistence".into(),
            spec: FeatureSpec::default(),
            model: Forecaster::Persistence,
            train_config: None,
        }
    }

    pub fn glm(model: GlmModel) -> Self {
        Self {
            name: "glm".into(),
            spec: FeatureSpec {
                lags: model.lags.clone(),
                ..FeatureSpec::default()
            },
            model: Forecaster::Glm(model),
            train_config: None,
        }
    }

    pub fn mlp(model: MlpModel, train_config: TrainConfig) -> Self {
        Self {
            name: model.variant.name().into(),
            spec: model.spec.clone(),
            model: Forecaster::Mlp(model),
            train_config: Some(train_config),
        }
    }

    /// Predictions for every row of `matrix`, in row order.
    pub fn predict(&self, matrix: &FeatureMatrix, series: &PluginSeries) -> Result<Vec<f64>> {
        let rows: Vec<&FeatureRow> = matrix.rows.iter().collect();
        self.predict_rows(&rows, &matrix.spec, series)
    }

    pub fn predict_rows(&self, rows: &[&FeatureRow], spec: &FeatureSpec, series: &PluginSeries) -> Result<Vec<f64>> {
        match &self.model {
            Forecaster::Persistence => rows.iter().map(|r| persistence_predict(series, r.step)).collect(),
            Forecaster::Glm(glm) => {
                self.check_lags(spec)?;
                Ok(rows.iter().map(|r| glm.predict_row(r)).collect())
            }
            Forecaster::Mlp(mlp) => {
                self.check_lags(spec)?;
                mlp.predict_rows(rows)
            }
        }
    }

    fn check_lags(&self, spec: &FeatureSpec) -> Result<()> {
        if spec.lags != self.spec.lags {
            return Err(Error::ModelMismatch {
                model: self.name.clone(),
                reason: format!("model lags {:?}, matrix lags {:?}", self.spec.lags, spec.lags),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ArtifactDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ArtifactDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct ArtifactDocument {
    format_version: u32,
    name: String,
    feature_spec: FeatureSpec,
    model: ModelDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_config: Option<TrainConfig>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ModelDocument {
    Persistence,
    Glm(GlmModel),
    Mlp {
        variant: MlpVariant,
        init_seed: u64,
        scaler: FeatureScaler,
        layers: Vec<LayerDocument>,
    },
}

/// Row-major weights with their declared `[out, in]` shape.
#[derive(Serialize, Deserialize)]
struct LayerDocument {
    shape: [usize; 2],
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<&ModelArtifact> for ArtifactDocument {
    fn from(a: &ModelArtifact) -> Self {
        let model = match &a.model {
            Forecaster::Persistence => ModelDocument::Persistence,
            Forecaster::Glm(g) => ModelDocument::Glm(g.clone()),
            Forecaster::Mlp(m) => ModelDocument::Mlp {
                variant: m.variant,
                init_seed: m.seed,
                scaler: m.scaler.clone(),
                layers: m
                    .network
                    .layers
                    .iter()
                    .map(|l| LayerDocument {
                        shape: [l.weights.nrows(), l.weights.ncols()],
                        weights: l.weights.iter().copied().collect(),
                        bias: l.bias.to_vec(),
                    })
                    .collect(),
            },
        };
        Self {
            format_version: ARTIFACT_FORMAT_VERSION,
            name: a.name.clone(),
            feature_spec: a.spec.clone(),
            model,
            train_config: a.train_config.clone(),
        }
    }
}

impl TryFrom<ArtifactDocument> for ModelArtifact {
    type Error = Error;

    fn try_from(doc: ArtifactDocument) -> Result<Self> {
        if doc.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "artifact `{}` has format version {}, expected {ARTIFACT_FORMAT_VERSION}",
                doc.name, doc.format_version
            )));
        }
        let model = match doc.model {
            ModelDocument::Persistence => Forecaster::Persistence,
            ModelDocument::Glm(g) => {
                if g.coefficients.len() != 7 || g.coefficients.iter().any(|c| c.len() != g.lags.len()) {
                    return Err(Error::Config(format!("artifact `{}` has malformed GLM coefficients", doc.name)));
                }
                Forecaster::Glm(g)
            }
            ModelDocument::Mlp {
                variant,
                init_seed,
                scaler,
                layers,
            } => {
                let layers = layers
                    .into_iter()
                    .map(|l| {
                        let weights = Array2::from_shape_vec((l.shape[0], l.shape[1]), l.weights)
                            .map_err(|e| Error::Config(format!("artifact `{}`: {e}", doc.name)))?;
                        if l.bias.len() != l.shape[0] {
                            return Err(Error::Shape {
                                expected: l.shape[0],
                                actual: l.bias.len(),
                            });
                        }
                        Ok(Dense {
                            weights,
                            bias: Array1::from(l.bias),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let network = Network { layers };
                if network.layers.is_empty() || network.input_width() != doc.feature_spec.input_width() {
                    return Err(Error::ModelMismatch {
                        model: doc.name.clone(),
                        reason: "network input width disagrees with its feature spec".into(),
                    });
                }
                Forecaster::Mlp(MlpModel {
                    variant,
                    spec: doc.feature_spec.clone(),
                    scaler,
                    network,
                    seed: init_seed,
                })
            }
        };
        Ok(Self {
            name: doc.name,
            spec: doc.feature_spec,
            model,
            train_config: doc.train_config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn persistence_and_glm_round_trip() {
        let p = ModelArtifact::persistence();
        assert_eq!(ModelArtifact::from_json(&p.to_json().unwrap()).unwrap(), p);
        let g = ModelArtifact::glm(GlmModel {
            lags: vec![48, 144, 336],
            coefficients: vec![vec![0.1, 1.0 / 3.0, -2e-17]; 7],
            intercepts: None,
        });
        assert_eq!(ModelArtifact::from_json(&g.to_json().unwrap()).unwrap(), g);
    }

    #[test]
    fn rejects_unknown_version() {
        let text = ModelArtifact::persistence().to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(ModelArtifact::from_json(&text).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mlp_weights_round_trip_bit_exact(seed in any::<u64>(), v in 0usize..3) {
            let mut model = mlp_init(MlpVariant::ALL[v], seed);
            model.scaler = FeatureScaler { mean: vec![1.0 / 7.0, 2.5, 1e-300], std: vec![3.3, 0.1, 9e15] };
            let a = ModelArtifact::mlp(model, TrainConfig { seed, ..Default::default() });
            let back = ModelArtifact::from_json(&a.to_json().unwrap()).unwrap();
            let (Forecaster::Mlp(x), Forecaster::Mlp(y)) = (&a.model, &back.model) else { unreachable!() };
            for (l1, l2) in x.network.layers.iter().zip(&y.network.layers) {
                prop_assert!(l1.weights.iter().zip(l2.weights.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
            }
            prop_assert_eq!(back, a);
        }
    }
}
