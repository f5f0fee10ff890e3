//! Day-ahead forecasting of the half-hourly minimum aggregate EV plug-in count.
//!
//! The crate covers the whole pipeline, from raw charge-point sessions to an
//! evaluation report:
//!
//! * [`ingest`]: parse and filter charging sessions from CSV.
//! * [`series`]: minutely occupancy, half-hourly minima, exclusion masks and
//!   the augmented Dickey-Fuller stationarity test.
//! * [`features`]: lag and calendar features plus the seeded 80/10/10 split.
//! * [`models`]: the day-of-week persistence rule, the per-day linear model
//!   and a small multilayer perceptron trained with Adam.
//! * [`eval`]: accuracy metrics, residual diagnostics, correlations and
//!   grouped distributions.
//! * [`synth`]: a seeded generator of synthetic sessions.
//! * [`pipeline`]: the `synth`/`build`/`analyze`/`train`/`evaluate` steps
//!   driven from one JSON config, as used by the `plugin-forecast` binary.
//!
//! ```
//! use plugin_forecast::features::{build_matrix, split_rows, FeatureSpec, SplitRatios};
//! use plugin_forecast::series::{aggregate, resample_halfhour_min, TimeWindow};
//! use plugin_forecast::synth::{generate_events, SynthConfig};
//!
//! let mut config = SynthConfig::default();
//! config.end_date = config.start_date + chrono::Days::new(28);
//! let events = generate_events(&config).unwrap();
//! let window = TimeWindow::whole_days(config.start_date, config.end_date).unwrap();
//! let minutely = aggregate(&events, &window);
//! let series = resample_halfhour_min(&minutely).unwrap();
//! assert_eq!(series.len(), 28 * 48);
//!
//! let matrix = build_matrix(&series, &FeatureSpec::default()).unwrap();
//! let matrix = split_rows(matrix, SplitRatios::default(), 7).unwrap();
//! assert_eq!(matrix.rows.len(), 21 * 48);
//! ```

pub mod calendar;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
mod linalg;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
