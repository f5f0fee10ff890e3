// Train one network variant with Adam, mini-batches and dropout, keep the
// epoch with the lowest validation loss, then save and reload the artifact.
//
//     cargo run --release --example train_network [epochs] [nn-v1|nn-v2|nn-v3]

use plugin_forecast::features::{build_matrix, split_rows, FeatureRow, FeatureSpec, Split, SplitRatios};
use plugin_forecast::models::{glm_fit, mlp_train, MlpModel, MlpVariant, ModelArtifact, TrainConfig};
use plugin_forecast::eval::metrics;
use plugin_forecast::series::{aggregate, apply_exclusions, resample_halfhour_min, ExclusionConfig, TimeWindow};
use plugin_forecast::synth::{generate_events, SynthConfig};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().skip(1).collect())
}

pub fn run(args: Vec<String>) -> Result<(), Box<dyn std::error::Error>> {
    let mut args = args.into_iter();
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(20);
    let variant = match args.next().as_deref() {
        None | Some("nn-v3") => MlpVariant::V3,
        Some("nn-v2") => MlpVariant::V2,
        Some("nn-v1") => MlpVariant::V1,
        Some(other) => return Err(format!("unknown variant `{other}`").into()),
    };

    let config = SynthConfig::default();
    let events = generate_events(&config)?;
    let window = TimeWindow::whole_days(config.start_date, config.end_date)?;
    let series = apply_exclusions(
        &resample_halfhour_min(&aggregate(&events, &window))?,
        &ExclusionConfig::default(),
    );
    let spec = FeatureSpec::default();
    let matrix = split_rows(build_matrix(&series, &spec)?, SplitRatios::default(), 42)?;

    let train = TrainConfig {
        epochs,
        seed: 7,
        ..TrainConfig::default()
    };
    let model = MlpModel::new(variant, &spec.lags, 103);
    println!(
        "{}: inputs {}, {} parameters, {} epochs",
        variant.name(),
        model.input_width(),
        model.network.parameter_count(),
        epochs
    );
    let (model, history) = mlp_train(model, &matrix, &train)?;

    let every = (epochs / 10).max(1);
    for (i, (t, v)) in history.train.iter().zip(&history.validation).enumerate() {
        if (i + 1) % every == 0 || i + 1 == history.selected_epoch {
            let mark = if i + 1 == history.selected_epoch { "  <- kept" } else { "" };
            println!("  epoch {:>4}  train {:>9.3}  validation {:>9.3}{mark}", i + 1, t, v);
        }
    }

    let artifact = ModelArtifact::mlp(model, train);
    let json = artifact.to_json()?;
    let reloaded = ModelArtifact::from_json(&json)?;

    let test: Vec<&FeatureRow> = matrix.rows_in(Split::Test).collect();
    let actuals: Vec<f64> = test.iter().map(|r| r.target).collect();
    let predictions = reloaded.predict_rows(&test, &matrix.spec, &series)?;
    assert_eq!(predictions, artifact.predict_rows(&test, &matrix.spec, &series)?);

    let glm = ModelArtifact::glm(glm_fit(&matrix)?);
    let net = metrics(&predictions, &actuals)?;
    let base = metrics(&glm.predict_rows(&test, &matrix.spec, &series)?, &actuals)?;
    println!(
        "test RMSE {:.3} ({} from a {} byte artifact), GLM {:.3}",
        net.rmse,
        variant.name(),
        json.len(),
        base.rmse
    );
    Ok(())
}
