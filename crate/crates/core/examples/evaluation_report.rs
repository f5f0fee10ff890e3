// Score every model on every split and write the report files: metrics,
// residual statistics (residual = prediction - actual) and per-day residual
// box plots.
//
//     cargo run --release --example evaluation_report [epochs] [out_dir]

use std::path::PathBuf;

use plugin_forecast::eval::build_report;
use plugin_forecast::features::Split;
use plugin_forecast::models::ModelArtifact;
use plugin_forecast::pipeline::{build_series, prepare_matrix, train_models, RunConfig};
use plugin_forecast::ingest::IngestReport;
use plugin_forecast::synth::generate_events;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().skip(1).collect())
}

pub fn run(args: Vec<String>) -> Result<(), Box<dyn std::error::Error>> {
    let mut args = args.into_iter();
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(10);
    let out = args.next().map(PathBuf::from);

    let mut config = RunConfig::default();
    config.train.network.epochs = epochs;

    let events = generate_events(&config.synth)?;
    let report = IngestReport {
        accepted: events.len(),
        ..IngestReport::default()
    };
    let series = build_series(events, report, &config)?.series;
    let matrix = prepare_matrix(&series, &config)?;
    let artifacts: Vec<ModelArtifact> = train_models(&matrix, &config)?.into_iter().map(|t| t.artifact).collect();
    let report = build_report(&artifacts, &matrix, &series)?;

    println!("{:<12} {:>8} {:>8} {:>8} {:>8}", "model", "train", "valid", "test", "MAPE");
    for m in &report.models {
        let rmse = |s| m.metrics(s).map_or(f64::NAN, |x| x.rmse);
        let mape = m.metrics(Split::Test).and_then(|x| x.mape_pct).unwrap_or(f64::NAN);
        println!(
            "{:<12} {:>8.3} {:>8.3} {:>8.3} {:>7.2}%",
            m.name,
            rmse(Split::Train),
            rmse(Split::Validation),
            rmse(Split::Test),
            mape
        );
    }

    println!("\ntest residuals");
    for m in &report.models {
        let r = &m.test_residuals;
        println!(
            "{:<12} mean {:>7.3}  median {:>7.3}  sd {:>6.3}  IQR {:>6.3}  range {:>6.1}",
            m.name, r.mean, r.median, r.std_dev, r.iqr, r.range
        );
    }

    if let Some(dir) = out {
        report.write_dir(&dir, true)?;
        println!("\nwrote report files to {}", dir.display());
    }
    Ok(())
}
