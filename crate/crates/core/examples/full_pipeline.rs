// Every step as the command-line tool runs it, reading and writing files in
// one output directory.
//
//     cargo run --release --example full_pipeline [out_dir] [epochs]
//
// Without `out_dir` a temporary directory is used and removed afterwards.

use std::path::PathBuf;

use plugin_forecast::features::Split;
use plugin_forecast::pipeline::{self, RunConfig};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().skip(1).collect())
}

pub fn run(args: Vec<String>) -> Result<(), Box<dyn std::error::Error>> {
    let mut args = args.into_iter();
    let out = args.next().map(PathBuf::from);
    let epochs: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);

    let tmp = tempfile::tempdir()?;
    let mut config = RunConfig {
        output_dir: out.unwrap_or_else(|| tmp.path().to_path_buf()),
        plot: true,
        ..RunConfig::default()
    };
    config.train.network.epochs = epochs;
    config.apply_master_seed(2017);

    let provenance = pipeline::cmd_synth(&config)?;
    println!("synth: {} sessions, config sha256 {}", provenance.n_events, &provenance.config_sha256[..12]);

    let built = pipeline::cmd_build(&config)?;
    println!(
        "build: {} accepted, {} over the cutoff; {} steps, {} kept",
        built.report.accepted,
        built.report.rejected_overlong,
        built.series.len(),
        built.series.unmasked_count()
    );

    let analysis = pipeline::cmd_analyze(&config)?;
    if let Ok(adf) = &analysis.adf {
        println!("analyze: ADF {:.2} at lag {}", adf.statistic, adf.lag_order);
    }

    for t in pipeline::cmd_train(&config)? {
        match &t.history {
            Some(h) => println!("train: {} kept epoch {} of {}", t.artifact.name, h.selected_epoch, h.train.len()),
            None => println!("train: {} fitted", t.artifact.name),
        }
    }

    let report = pipeline::cmd_evaluate(&config)?;
    for m in &report.models {
        if let Some(t) = m.metrics(Split::Test) {
            println!("evaluate: {:<12} test RMSE {:.3}", m.name, t.rmse);
        }
    }

    let mut files: Vec<String> = std::fs::read_dir(&config.output_dir)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("files in {}: {}", config.output_dir.display(), files.join(", "));
    Ok(())
}
