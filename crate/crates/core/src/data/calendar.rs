use chrono::{Datelike, Duration, NaiveDate};

use crate::error::{Error, Result};

/// Length of the seasonal cycle in days (mean Gregorian year).
pub const YEAR_DAYS: f64 = 365.2425;

/// Maps between calendar dates and real-valued time in days since an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Calendar {
    epoch: NaiveDate,
}

impl Calendar {
    pub fn new(epoch: NaiveDate) -> Self {
        Self { epoch }
    }

    pub fn epoch(&self) -> NaiveDate {
        self.epoch
    }

    pub fn day_index(&self, date: NaiveDate) -> i64 {
        (date - self.epoch).num_days()
    }

    pub fn date_of_day(&self, day: i64) -> NaiveDate {
        self.epoch + Duration::days(day)
    }

    /// Date containing time `t`.
    pub fn date_of(&self, t: f64) -> NaiveDate {
        self.date_of_day(t.floor() as i64)
    }

    /// Position of `t` within the seasonal cycle, in `[0, YEAR_DAYS)`.
    /// Time zero is placed at the epoch's own offset from January 1.
    pub fn day_of_year(&self, t: f64) -> f64 {
        let offset = f64::from(self.epoch.ordinal0());
        let r = (t + offset).rem_euclid(YEAR_DAYS);
        // rem_euclid can round up to the modulus itself
        if r >= YEAR_DAYS {
            0.0
        } else {
            r
        }
    }

    pub fn month_of(&self, t: f64) -> u32 {
        self.date_of(t).month()
    }
}

/// Parses an ISO-8601 calendar date (`YYYY-MM-DD`).
pub fn parse_date(text: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").map_err(|_| Error::MalformedDate {
        row,
        value: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jan1() -> Calendar {
        Calendar::new(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap())
    }

    #[test]
    fn day_of_year_examples() {
        let cal = jan1();
        assert_eq!(cal.day_of_year(0.0), 0.0);
        assert!(cal.day_of_year(YEAR_DAYS).abs() < 1e-9);
        assert!((cal.day_of_year(400.0) - 34.7575).abs() < 1e-9);
    }

    #[test]
    fn day_of_year_agrees_with_calendar_within_the_first_year() {
        let cal = jan1();
        // independent date arithmetic: 1970-02-04 is ordinal day 35 → offset 34
        let d = NaiveDate::from_ymd_opt(1970, 2, 4).unwrap();
        assert_eq!(cal.day_of_year(cal.day_index(d) as f64), 34.0);
        // 1971-02-04 lies 400 days after the epoch
        let d = NaiveDate::from_ymd_opt(1971, 2, 5).unwrap();
        assert_eq!(cal.day_index(d), 400);
    }

    #[test]
    fn non_january_epoch_is_offset() {
        let cal = Calendar::new(NaiveDate::from_ymd_opt(2001, 3, 1).unwrap());
        assert_eq!(cal.day_of_year(0.0), 59.0);
    }

    #[test]
    fn parse_date_rejects_garbage() {
        assert!(parse_date("2001-02-30", 3).is_err());
        assert_eq!(
            parse_date(" 2001-02-28 ", 1).unwrap(),
            NaiveDate::from_ymd_opt(2001, 2, 28).unwrap()
        );
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        proptest! {
            #[test]
            fn day_of_year_is_periodic(t in -20000.0f64..20000.0, k in -60i32..60) {
                let cal = jan1();
                let a = cal.day_of_year(t);
                let b = cal.day_of_year(t + f64::from(k) * YEAR_DAYS);
                let diff = (a - b).abs();
                prop_assert!(diff.min(YEAR_DAYS - diff) < 1e-9);
                prop_assert!((0.0..YEAR_DAYS).contains(&a));
            }
        }
    }
}
