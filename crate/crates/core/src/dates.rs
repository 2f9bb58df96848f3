//! Calendar helpers shared across modules.
//!
//! Semesters end on Jun-30 and Dec-31. A round "in the semester" ending at
//! `b` means `announced_on` in `(prev_semester_end(b), b]`.

use chrono::{Datelike, NaiveDate};

/// All semester boundaries (Jun-30 / Dec-31) within `[start, end]`, ascending.
pub fn semester_ends(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    for year in start.year()..=end.year() {
        for (m, d) in [(6u32, 30u32), (12, 31)] {
            let b = NaiveDate::from_ymd_opt(year, m, d).expect("fixed boundary is valid");
            if b >= start && b <= end {
                out.push(b);
            }
        }
    }
    out
}

/// The semester boundary immediately preceding `boundary`.
pub fn prev_semester_end(boundary: NaiveDate) -> NaiveDate {
    if boundary.month() <= 6 {
        NaiveDate::from_ymd_opt(boundary.year() - 1, 12, 31).unwrap()
    } else {
        NaiveDate::from_ymd_opt(boundary.year(), 6, 30).unwrap()
    }
}

/// `date` shifted by `years` (may be negative), clamping Feb-29 to Feb-28.
pub fn shift_years(date: NaiveDate, years: i32) -> NaiveDate {
    let year = date.year() + years;
    NaiveDate::from_ymd_opt(year, date.month(), date.day())
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(year, 2, 28).unwrap())
}

/// Days from `from` to `to` (negative when `to` precedes `from`).
pub fn days_between(from: NaiveDate, to: NaiveDate) -> i64 {
    (to - from).num_days()
}
