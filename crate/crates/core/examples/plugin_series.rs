// Turn sessions into the half-hourly minimum plug-in series, mask bank
// holidays plus the ramp-up and ramp-down days, and test the result for a
// unit root.
//
//     cargo run --example plugin_series [weeks]

use chrono::Days;
use plugin_forecast::calendar::uk_bank_holidays_2017;
use plugin_forecast::series::{
    adf_test, aggregate, apply_exclusions, resample_halfhour_min, ExclusionConfig, TimeWindow,
};
use plugin_forecast::synth::{generate_events, SynthConfig};

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().skip(1).collect())
}

pub fn run(args: Vec<String>) -> Result<(), Box<dyn std::error::Error>> {
    let weeks: u64 = args.first().map(|a| a.parse()).transpose()?.unwrap_or(8);

    let mut config = SynthConfig::default();
    config.end_date = config.start_date + Days::new(7 * weeks);
    let events = generate_events(&config)?;

    let window = TimeWindow::whole_days(config.start_date, config.end_date)?;
    let minutely = aggregate(&events, &window);
    let halfhour = resample_halfhour_min(&minutely)?;

    let exclusions = ExclusionConfig {
        drop_first_days: 7,
        drop_last_days: 14,
        holidays: uk_bank_holidays_2017().into_iter().collect(),
    };
    let series = apply_exclusions(&halfhour, &exclusions);

    println!(
        "{} sessions -> {} minutes -> {} half-hour steps, {} kept after exclusions",
        events.len(),
        minutely.len(),
        series.len(),
        series.unmasked_count()
    );

    // One weekday in the kept range, drawn as a bar per half hour.
    let day = 14 * 48;
    println!("\n{}", series.timestamp(day).date().format("%A %Y-%m-%d"));
    for i in day..day + 48 {
        let v = series.values()[i];
        println!("  {}  {:>3} {}", series.timestamp(i).format("%H:%M"), v, "#".repeat(v as usize / 2));
    }

    let adf = adf_test(&series, 20)?;
    println!(
        "\nADF statistic {:.3} (lag {}, {} obs); 1%/5%/10% critical values {}/{}/{}; stationary at 5%: {}",
        adf.statistic,
        adf.lag_order,
        adf.nobs,
        adf.critical_values.one_pct,
        adf.critical_values.five_pct,
        adf.critical_values.ten_pct,
        adf.stationary_at_5pct
    );
    Ok(())
}
