//! Seeded synthetic charge-point sessions.
//!
//! Arrivals follow an inhomogeneous Poisson process whose rate is constant
//! within each clock hour:
//!
//! ```text
//! λ(t) = base_rate_per_hour · dow_intensity[dow] · hour_profile[hour] · month_scale[month]
//! ```
//!
//! Each hour's arrival count is Poisson with that rate, and arrivals are
//! placed on uniformly drawn minutes of the hour. Plug-in durations are
//! log-normal with the configured mean, truncated at seven days by
//! rejection, and sessions are dealt to charge points round-robin.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};
use crate::ingest::{ChargingEvent, DEFAULT_MAX_DURATION_MINUTES};
use crate::rng;

/// Seed used by [`SynthConfig::default`].
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_charge_points: usize,
    pub start_date: NaiveDate,
    /// Exclusive.
    pub end_date: NaiveDate,
    pub base_rate_per_hour: f64,
    /// Monday first.
    pub dow_intensity: [f64; 7],
    pub hour_profile: [f64; 24],
    /// January first.
    pub month_scale: [f64; 12],
    pub mean_duration_minutes: f64,
    /// Standard deviation of the log-duration.
    pub duration_dispersion: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// One calendar year (2017) shaped like public-sector charging: weekdays
    /// about twice as busy as weekends, a daytime peak with quiet nights, and
    /// an irregular monthly scale with July and August 20% below the annual
    /// mean.
    fn default() -> Self {
        Self {
            n_charge_points: 400,
            start_date: NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            base_rate_per_hour: 40.0,
            dow_intensity: [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5],
            hour_profile: [
                0.06, 0.04, 0.03, 0.03, 0.05, 0.12, // 00-05
                0.35, 0.85, 1.40, 1.50, 1.30, 1.10, // 06-11
                1.20, 1.20, 1.00, 0.95, 0.90, 0.85, // 12-17
                0.55, 0.40, 0.30, 0.22, 0.14, 0.08, // 18-23
            ],
            month_scale: [1.10, 1.05, 0.95, 1.15, 1.00, 1.10, 0.80, 0.80, 1.10, 1.00, 1.15, 0.80],
            mean_duration_minutes: 150.0,
            duration_dispersion: 0.9,
            seed: DEFAULT_SEED,
        }
    }
}

/// The documented default configuration.
pub fn default_config() -> SynthConfig {
    SynthConfig::default()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let intensities = self
            .dow_intensity
            .iter()
            .chain(&self.hour_profile)
            .chain(&self.month_scale)
            .chain(std::iter::once(&self.base_rate_per_hour));
        for v in intensities {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Config(format!("synthetic intensities must be finite and >= 0, got {v}")));
            }
        }
        if self.end_date <= self.start_date {
            return Err(Error::Config("synthetic span is empty".into()));
        }
        if !(self.mean_duration_minutes > 0.0 && self.duration_dispersion > 0.0) {
            return Err(Error::Config("duration mean and dispersion must be positive".into()));
        }
        if self.n_charge_points == 0 {
            return Err(Error::Config("need at least one charge point".into()));
        }
        Ok(())
    }

    /// Arrival rate (per hour) for the clock hour starting at `ts`.
    pub fn rate_at(&self, ts: &NaiveDateTime) -> f64 {
        self.base_rate_per_hour
            * self.dow_intensity[usize::from(calendar::day_of_week(ts))]
            * self.hour_profile[usize::from(calendar::hour(ts))]
            * self.month_scale[usize::from(calendar::month(ts)) - 1]
    }
}

pub fn generate_events(config: &SynthConfig) -> Result<Vec<ChargingEvent>> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let sigma = config.duration_dispersion;
    let mu = config.mean_duration_minutes.ln() - sigma * sigma / 2.0;
    let durations = LogNormal::new(mu, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let cap = DEFAULT_MAX_DURATION_MINUTES as f64;

    let mut events = Vec::new();
    let mut hour_start = config.start_date.and_time(Default::default());
    let end = config.end_date.and_time(Default::default());
    let mut minutes = Vec::new();
    while hour_start < end {
        let rate = config.rate_at(&hour_start);
        if rate > 0.0 {
            let poisson = Poisson::new(rate).map_err(|e| Error::Config(e.to_string()))?;
            let count = poisson.sample(&mut rng) as usize;
            minutes.clear();
            minutes.extend((0..count).map(|_| rng.random_range(0..60i64)));
            minutes.sort_unstable();
            for &minute in &minutes {
                let mut d = durations.sample(&mut rng);
                let mut attempts = 0;
                while d > cap && attempts < 1000 {
                    d = durations.sample(&mut rng);
                    attempts += 1;
                }
                let d = d.round().clamp(1.0, cap) as i64;
                let start = hour_start + Duration::minutes(minute);
                let n = events.len();
                let cp = n % config.n_charge_points;
                events.push(ChargingEvent::new(
                    format!("S{:07}", n + 1),
                    Some(format!("CP{cp:04}")),
                    1,
                    start,
                    start + Duration::minutes(d),
                    (d as f64 / 60.0 * 7.0).min(60.0),
                    format!("Organisation {}", cp % 7),
                )?);
            }
        }
        hour_start += Duration::hours(1);
    }
    Ok(events)
}
