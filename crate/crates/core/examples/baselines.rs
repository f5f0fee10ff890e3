// The two reference forecasters: "same slot on the most recent comparable
// day" persistence, and one least-squares regression on lagged values per
// day of week.
//
//     cargo run --release --example baselines

use plugin_forecast::calendar::DAY_NAMES;
use plugin_forecast::eval::metrics;
use plugin_forecast::features::{build_matrix, split_rows, FeatureRow, FeatureSpec, Split, SplitRatios};
use plugin_forecast::models::{glm_fit, persistence_offset, ModelArtifact};
use plugin_forecast::series::{aggregate, apply_exclusions, resample_halfhour_min, ExclusionConfig, TimeWindow};
use plugin_forecast::synth::{generate_events, SynthConfig};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SynthConfig::default();
    let events = generate_events(&config)?;
    let window = TimeWindow::whole_days(config.start_date, config.end_date)?;
    let series = apply_exclusions(
        &resample_halfhour_min(&aggregate(&events, &window))?,
        &ExclusionConfig::default(),
    );

    let spec = FeatureSpec::default();
    let matrix = split_rows(build_matrix(&series, &spec)?, SplitRatios::default(), 42)?;
    let [train, validation, test] = matrix.split_counts();
    println!("lags {:?}; rows train {train}, validation {validation}, test {test}", spec.lags);

    println!("\npersistence looks back");
    for (dow, name) in DAY_NAMES.iter().enumerate() {
        println!("  {:<9} {:>3} steps", name, persistence_offset(dow as u8));
    }

    let glm = glm_fit(&matrix)?;
    println!("\nGLM coefficients (lag in steps)");
    println!("  {:<9} {}", "", spec.lags.iter().map(|l| format!("{l:>8}")).collect::<String>());
    for (name, row) in DAY_NAMES.iter().zip(&glm.coefficients) {
        println!("  {:<9} {}", name, row.iter().map(|c| format!("{c:>8.4}")).collect::<String>());
    }

    let test_rows: Vec<&FeatureRow> = matrix.rows_in(Split::Test).collect();
    let actuals: Vec<f64> = test_rows.iter().map(|r| r.target).collect();
    println!("\ntest split");
    for model in [ModelArtifact::persistence(), ModelArtifact::glm(glm)] {
        let predictions = model.predict_rows(&test_rows, &matrix.spec, &series)?;
        let m = metrics(&predictions, &actuals)?;
        let mape = m.mape_pct.map_or("n/a".to_string(), |p| format!("{p:.2}%"));
        println!("  {:<12} RMSE {:.3}  MAE {:.3}  MAPE {}", model.name, m.rmse, m.mae, mape);
    }
    Ok(())
}
