//! Weekday business-day calendar and IMM premium dates.
//!
//! No holiday calendar is applied: every Monday-Friday is a business day.

use chrono::{Datelike, Days, NaiveDate, Weekday};

/// Business days in a year; also the unit for grid steps.
pub const BUSINESS_DAYS_PER_YEAR: f64 = 252.0;

pub fn is_business_day(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// The date `n` business days after `d`.
pub fn add_business_days(d: NaiveDate, n: u32) -> NaiveDate {
    let mut date = d;
    let mut left = n;
    while left > 0 {
        date = date + Days::new(1);
        if is_business_day(date) {
            left -= 1;
        }
    }
    date
}

/// Number of business days in `(a, b]`; negative when `b < a`.
pub fn business_days_between(a: NaiveDate, b: NaiveDate) -> i64 {
    if b < a {
        return -business_days_between(b, a);
    }
    let days = (b - a).num_days();
    let full_weeks = days / 7;
    let mut count = full_weeks * 5;
    let mut d = a + Days::new((full_weeks * 7) as u64);
    while d < b {
        d = d + Days::new(1);
        if is_business_day(d) {
            count += 1;
        }
    }
    count
}

/// Calendar days between `a` and `b` over 365.
pub fn act365(a: NaiveDate, b: NaiveDate) -> f64 {
    (b - a).num_days() as f64 / 365.0
}

/// Unadjusted IMM dates (20 March, June, September, December) in `[from, to]`.
pub fn imm_dates(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let mut dates = Vec::new();
    if to < from {
        return dates;
    }
    for year in from.year()..=to.year() {
        for month in [3, 6, 9, 12] {
            let d = NaiveDate::from_ymd_opt(year, month, 20).expect("the 20th exists in every month");
            if d >= from && d <= to {
                dates.push(d);
            }
        }
    }
    dates
}
