use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plugin_forecast::pipeline::{self, RunConfig};
use plugin_forecast::Result;

#[derive(Parser)]
#[command(version, about = "Charge-point plug-in demand forecasting")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; every other seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write box-plot data files.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic sessions.
    Synth,
    /// Ingest sessions into a half-hourly plug-in series.
    Build {
        /// Session CSV (overrides the configuration).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Sessions longer than this many days are dropped.
        #[arg(long)]
        max_duration_days: Option<u32>,
    },
    /// Distributions, lag correlation, stationarity and exogenous correlation.
    Analyze,
    /// Fit the GLM and train the network variants.
    Train {
        /// Training epochs per network (overrides the configuration).
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score stored models on each split.
    Evaluate,
    /// Analyze and evaluate.
    Report,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.apply_master_seed(seed);
    }
    config.plot |= cli.plot;
    match cli.command {
        Command::Synth => {
            let p = pipeline::cmd_synth(&config)?;
            println!("wrote {} sessions (seed {})", p.n_events, p.seed);
        }
        Command::Build {
            input,
            max_duration_days,
        } => {
            if input.is_some() {
                config.build.input_csv = input;
            }
            if let Some(days) = max_duration_days {
                config.build.max_duration_days = days;
            }
            let out = pipeline::cmd_build(&config)?;
            let r = &out.report;
            println!(
                "{} sessions accepted, {} over the duration cutoff, {} malformed; {} half-hour steps ({} excluded)",
                r.accepted,
                r.rejected_overlong,
                r.malformed,
                out.series.len(),
                out.series.len() - out.series.unmasked_count()
            );
        }
        Command::Analyze => {
            let report = pipeline::cmd_analyze(&config)?;
            match &report.adf {
                Ok(adf) => println!(
                    "ADF statistic {:.4} at lag {} (5% critical value {})",
                    adf.statistic, adf.lag_order, adf.critical_values.five_pct
                ),
                Err(e) => println!("ADF not computed: {e}"),
            }
        }
        Command::Train { epochs } => {
            if let Some(epochs) = epochs {
                config.train.network.epochs = epochs;
            }
            for t in pipeline::cmd_train(&config)? {
                match t.history {
                    Some(h) if h.selected_epoch > 0 => println!(
                        "{}: kept epoch {} (validation loss {:.4})",
                        t.artifact.name,
                        h.selected_epoch,
                        h.validation[h.selected_epoch - 1]
                    ),
                    _ => println!("{}: fitted", t.artifact.name),
                }
            }
        }
        Command::Evaluate => print_metrics(&pipeline::cmd_evaluate(&config)?),
        Command::Report => print_metrics(&pipeline::cmd_report(&config)?.1),
    }
    Ok(())
}

fn print_metrics(report: &plugin_forecast::eval::EvaluationReport) {
    for m in &report.models {
        if let Some(t) = m.metrics(plugin_forecast::features::Split::Test) {
            println!("{:<12} test RMSE {:.4}  MAE {:.4}", m.name, t.rmse, t.mae);
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
