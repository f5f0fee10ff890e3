//! Fully connected rectifier network trained on mean squared error with Adam.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, FeatureSpec, Split, DEFAULT_LAGS};
use crate::rng::{self, Rng};

/// Hidden layer widths of the forecasting network.
pub const HIDDEN_WIDTHS: [usize; 2] = [100, 50];

/// Input sets of the three network variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MlpVariant {
    /// Lags and day-of-week one-hot.
    #[serde(rename = "nn-v1")]
    V1,
    /// V1 plus month one-hot.
    #[serde(rename = "nn-v2")]
    V2,
    /// V2 plus hour-of-day one-hot.
    #[serde(rename = "nn-v3")]
    V3,
}

impl MlpVariant {
    pub const ALL: [MlpVariant; 3] = [MlpVariant::V1, MlpVariant::V2, MlpVariant::V3];

    pub fn name(self) -> &'static str {
        match self {
            MlpVariant::V1 => "nn-v1",
            MlpVariant::V2 => "nn-v2",
            MlpVariant::V3 => "nn-v3",
        }
    }

    pub fn feature_spec(self, lags: &[usize]) -> FeatureSpec {
        FeatureSpec {
            lags: lags.to_vec(),
            use_dow_onehot: true,
            use_month_onehot: self != MlpVariant::V1,
            use_hour_onehot: self == MlpVariant::V3,
        }
    }
}

/// Dense layer computing `W·x + b`, with `W` shaped `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Rectifier on every layer but the last, which is linear with one output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
}

struct Trace {
    /// Input seen by each layer (after activation and dropout).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Array2<f64>>,
    /// Inverted-dropout multipliers per hidden layer.
    masks: Vec<Option<Array2<f64>>>,
    output: Array1<f64>,
}

impl Network {
    /// Weights drawn from `N(0, 2 / fan_in)`, biases zero.
    pub fn he_init(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                Dense {
                    weights: Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.weights.nrows())
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.input_width() {
            return Err(Error::Shape {
                expected: self.input_width(),
                actual: width,
            });
        }
        Ok(())
    }

    fn trace(&self, x: ArrayView2<f64>, mut dropout: Option<(f64, &mut Rng)>) -> Trace {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(last);
        let mut masks = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            inputs.push(a);
            if i == last {
                return Trace {
                    inputs,
                    pre,
                    masks,
                    output: z.index_axis_move(Axis(1), 0),
                };
            }
            pre.push(z.clone());
            z.mapv_inplace(|v| v.max(0.0));
            let mask = match dropout.as_mut() {
                Some((rate, rng)) if *rate > 0.0 => {
                    let keep = 1.0 / (1.0 - *rate);
                    let mask = Array2::from_shape_simple_fn(z.raw_dim(), || {
                        if rng.random::<f64>() < *rate {
                            0.0
                        } else {
                            keep
                        }
                    });
                    z *= &mask;
                    Some(mask)
                }
                _ => None,
            };
            masks.push(mask);
            a = z;
        }
        unreachable!("network has at least one layer")
    }

    /// Mean squared error and its gradient for the traced batch.
    fn backward(&self, trace: &Trace, y: ArrayView1<f64>) -> (f64, Vec<DenseGrad>) {
        let n = y.len() as f64;
        let diff = &trace.output - &y;
        let loss = diff.dot(&diff) / n;
        let mut delta = (diff * (2.0 / n)).insert_axis(Axis(1));
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            grads.push(DenseGrad {
                weights: delta.t().dot(&trace.inputs[i]).as_standard_layout().into_owned(),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weights);
                if let Some(mask) = &trace.masks[i - 1] {
                    upstream *= mask;
                }
                Zip::from(&mut upstream).and(&trace.pre[i - 1]).for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    /// Inference on a batch of rows.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_width(x.ncols())?;
        Ok(self.trace(x, None).output)
    }

    /// Mean squared error on a batch, no dropout.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<f64> {
        let out = self.predict(x)?;
        let diff = out - y;
        Ok(diff.dot(&diff) / y.len() as f64)
    }

    /// Backpropagated gradient of the batch MSE, no dropout.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<(f64, Vec<DenseGrad>)> {
        self.check_width(x.ncols())?;
        let trace = self.trace(x, None);
        Ok(self.backward(&trace, y))
    }

    /// Single-row forward pass.
    pub fn forward(&self, features: &[f64], mode: ForwardMode<'_>) -> Result<f64> {
        self.check_width(features.len())?;
        let x = ArrayView2::from_shape((1, features.len()), features).expect("row vector shape");
        let dropout = match mode {
            ForwardMode::Inference => None,
            ForwardMode::Train { dropout_rate, rng } => Some((dropout_rate, rng)),
        };
        Ok(self.trace(x, dropout).output[0])
    }
}

/// Forward pass behaviour: deterministic inference, or training with
/// inverted dropout drawn from `rng`.
pub enum ForwardMode<'a> {
    Inference,
    Train { dropout_rate: f64, rng: &'a mut Rng },
}

/// Standardisation of lag inputs, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Population mean and standard deviation per lag; a constant lag gets std 1.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureRow>, n_lags: usize) -> Self {
        let rows: Vec<&FeatureRow> = rows.into_iter().collect();
        if rows.is_empty() {
            return Self::identity(n_lags);
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..n_lags)
            .map(|i| rows.iter().map(|r| r.lag_values[i]).sum::<f64>() / n)
            .collect();
        let std = (0..n_lags)
            .map(|i| {
                let var = rows.iter().map(|r| (r.lag_values[i] - mean[i]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

/// A forecasting network together with the inputs it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub variant: MlpVariant,
    pub spec: FeatureSpec,
    pub scaler: FeatureScaler,
    pub network: Network,
    /// Seed of the weight initialisation.
    pub seed: u64,
}

/// Fresh network for `variant` on the default lags.
pub fn mlp_init(variant: MlpVariant, seed: u64) -> MlpModel {
    MlpModel::new(variant, &DEFAULT_LAGS, seed)
}

impl MlpModel {
    pub fn new(variant: MlpVariant, lags: &[usize], seed: u64) -> Self {
        let spec = variant.feature_spec(lags);
        Self {
            variant,
            network: Network::he_init(spec.input_width(), &HIDDEN_WIDTHS, seed),
            scaler: FeatureScaler::identity(lags.len()),
            spec,
            seed,
        }
    }

    pub fn input_width(&self) -> usize {
        self.network.input_width()
    }

    /// Encodes and scales rows into a design matrix.
    pub fn design(&self, rows: &[&FeatureRow]) -> Array2<f64> {
        let width = self.spec.input_width();
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in rows {
            let start = data.len();
            row.encode_into(&self.spec, &mut data);
            self.scaler.apply(&mut data[start..start + self.spec.lags.len()]);
        }
        Array2::from_shape_vec((rows.len(), width), data).expect("encoded width matches spec")
    }

    /// Single forward pass on an already encoded and scaled input vector.
    pub fn forward(&self, features: &[f64], mode: ForwardMode<'_>) -> Result<f64> {
        self.network.forward(features, mode)
    }

    pub fn predict_rows(&self, rows: &[&FeatureRow]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.network.predict(self.design(rows).view())?.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Keep the parameters of the epoch with the lowest validation loss.
    /// When false the last epoch's parameters are returned.
    pub restore_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 100,
            dropout_rate: 0.2,
            adam: AdamConfig::default(),
            seed: 0,
            restore_best: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses. Train loss is the mean training-mode batch loss;
/// validation loss is the inference-mode MSE (NaN without validation rows).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
    /// 1-based epoch whose parameters were kept (0 = initial parameters).
    pub selected_epoch: usize,
}

impl LossHistory {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "validation_loss"])?;
        for (i, (t, v)) in self.train.iter().zip(&self.validation).enumerate() {
            w.write_record([(i + 1).to_string(), t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct AdamBuffers {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

/// Trains `model` on the training split of `matrix`.
///
/// The lag scaler is refitted on training rows. Each epoch reshuffles the
/// training rows with the config's seeded stream, which also drives dropout.
pub fn mlp_train(mut model: MlpModel, matrix: &FeatureMatrix, config: &TrainConfig) -> Result<(MlpModel, LossHistory)> {
    config.validate()?;
    if matrix.split.is_none() {
        return Err(Error::Config("feature matrix must be split before training".into()));
    }
    if matrix.spec.lags != model.spec.lags {
        return Err(Error::ModelMismatch {
            model: model.variant.name().into(),
            reason: format!("model lags {:?} vs matrix lags {:?}", model.spec.lags, matrix.spec.lags),
        });
    }
    let train_rows: Vec<&FeatureRow> = matrix.rows_in(Split::Train).collect();
    let val_rows: Vec<&FeatureRow> = matrix.rows_in(Split::Validation).collect();
    if train_rows.is_empty() {
        return Err(Error::Empty("training split"));
    }
    model.scaler = FeatureScaler::fit(train_rows.iter().copied(), model.spec.lags.len());

    let x_train = model.design(&train_rows);
    let y_train = Array1::from_iter(train_rows.iter().map(|r| r.target));
    let x_val = model.design(&val_rows);
    let y_val = Array1::from_iter(val_rows.iter().map(|r| r.target));

    let mut buffers: Vec<AdamBuffers> = model
        .network
        .layers
        .iter()
        .map(|l| AdamBuffers {
            m_w: Array2::zeros(l.weights.raw_dim()),
            v_w: Array2::zeros(l.weights.raw_dim()),
            m_b: Array1::zeros(l.bias.raw_dim()),
            v_b: Array1::zeros(l.bias.raw_dim()),
        })
        .collect();

    let mut rng = rng::seeded(config.seed);
    let mut history = LossHistory::default();
    let mut best: Option<(f64, Network)> = None;
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut step: u64 = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x_train.select(Axis(0), batch);
            let yb = y_train.select(Axis(0), batch);
            let trace = model.network.trace(xb.view(), Some((config.dropout_rate, &mut rng)));
            let (loss, grads) = model.network.backward(&trace, yb.view());
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += loss * batch.len() as f64;
            step += 1;
            for ((layer, grad), buf) in model.network.layers.iter_mut().zip(&grads).zip(&mut buffers) {
                adam_step(
                    layer.weights.as_slice_mut().expect("standard layout"),
                    grad.weights.as_slice().expect("standard layout"),
                    buf.m_w.as_slice_mut().expect("standard layout"),
                    buf.v_w.as_slice_mut().expect("standard layout"),
                    step,
                    &config.adam,
                );
                adam_step(
                    layer.bias.as_slice_mut().expect("contiguous"),
                    grad.bias.as_slice().expect("contiguous"),
                    buf.m_b.as_slice_mut().expect("contiguous"),
                    buf.v_b.as_slice_mut().expect("contiguous"),
                    step,
                    &config.adam,
                );
            }
        }
        let train_loss = total / train_rows.len() as f64;
        let val_loss = if val_rows.is_empty() {
            f64::NAN
        } else {
            model.network.loss(x_val.view(), y_val.view())?
        };
        if !train_loss.is_finite() || !model.network.is_finite() || (!val_rows.is_empty() && !val_loss.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        history.train.push(train_loss);
        history.validation.push(val_loss);
        if config.restore_best && val_loss.is_finite() && best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, model.network.clone()));
            history.selected_epoch = epoch;
        }
    }

    match best {
        Some((_, network)) => model.network = network,
        None => history.selected_epoch = config.epochs,
    }
    Ok((model, history))
}
