// Distributions by day, month and hour, day-on-day lag correlation and the
// correlation with an external variable.
//
//     cargo run --release --example feature_analysis

use chrono::Duration;
use plugin_forecast::eval::{
    exogenous_correlation, grouped_distribution, lag_correlation_by_day, ExogenousSeries, GroupKey,
};
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

    for key in GroupKey::ALL {
        let dist = grouped_distribution(&series, key);
        println!("by {}", key.as_str());
        for g in &dist.groups {
            println!(
                "  {:<9} n={:<5} median {:>5.1}  IQR [{:>5.1}, {:>5.1}]  whiskers [{:>5.1}, {:>5.1}]",
                g.label, g.n, g.median, g.q1, g.q3, g.whisker_low, g.whisker_high
            );
        }
    }

    println!("\nsame step one day earlier");
    for c in lag_correlation_by_day(&series) {
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        println!(
            "  {:<9} pairs {:<5} pearson {}  spearman {}",
            c.name,
            c.n_pairs,
            fmt(c.pearson),
            fmt(c.spearman)
        );
    }

    // An hourly "temperature" with a daily cycle and every fifth reading
    // missing; gaps are interpolated before the join.
    let points = (0..365 * 24)
        .map(|h| {
            let ts = series.start() + Duration::hours(h);
            let hour = (h % 24) as f64;
            let value = if h % 5 == 0 {
                f64::NAN
            } else {
                8.0 + 6.0 * ((hour - 9.0) * std::f64::consts::PI / 12.0).sin()
            };
            (ts, value)
        })
        .collect();
    let temperature = ExogenousSeries::new("temperature", points);
    let c = exogenous_correlation(&series, &temperature)?;
    println!(
        "\n{}: {} joined steps, pearson {:.3}, spearman {:.3}",
        c.name, c.n, c.pearson, c.spearman
    );
    Ok(())
}
