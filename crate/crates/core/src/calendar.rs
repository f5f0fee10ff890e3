//! Calendar helpers shared by feature construction, persistence and analysis.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

pub const DAY_NAMES: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

pub const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Day of week with Monday = 0 through Sunday = 6.
pub fn day_of_week(ts: &NaiveDateTime) -> u8 {
    ts.weekday().num_days_from_monday() as u8
}

/// Month of year, 1..=12.
pub fn month(ts: &NaiveDateTime) -> u8 {
    ts.month() as u8
}

/// Hour of day, 0..=23.
pub fn hour(ts: &NaiveDateTime) -> u8 {
    ts.hour() as u8
}

/// Bank holidays in England and Wales for 2017.
pub fn uk_bank_holidays_2017() -> Vec<NaiveDate> {
    [
        (1, 2),
        (4, 14),
        (4, 17),
        (5, 1),
        (5, 29),
        (8, 28),
        (12, 25),
        (12, 26),
    ]
    .into_iter()
    .map(|(m, d)| NaiveDate::from_ymd_opt(2017, m, d).expect("valid date"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monday_is_zero() {
        let ts = NaiveDate::from_ymd_opt(2017, 3, 6)
            .unwrap()
            .and_hms_opt(9, 30, 0)
            .unwrap();
        assert_eq!(day_of_week(&ts), 0);
        assert_eq!(hour(&ts), 9);
        assert_eq!(month(&ts), 3);
        let sunday = NaiveDate::from_ymd_opt(2017, 3, 12)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        assert_eq!(day_of_week(&sunday), 6);
    }

    #[test]
    fn holidays_are_weekdays() {
        for d in uk_bank_holidays_2017() {
            assert!(d.weekday().num_days_from_monday() < 5, "{d}");
        }
    }
}
