//! Day-resolution calendar dates.
//!
//! All lifecycle data in the toolkit is day-granular, so dates are stored as
//! whole days since 1970-01-01 and only converted to calendar form at the
//! serialization boundary. Active intervals are half-open `[start, end)`:
//! adjacent segments partition time with no overlap and no gap.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DateError {
    #[error("invalid date `{0}`: expected ISO-8601 (YYYY-MM-DD)")]
    Parse(String),
    #[error("date out of supported range")]
    OutOfRange,
}

/// A calendar date stored as whole days since 1970-01-01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Day(i64);

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch is a valid date")
}

impl Day {
    pub fn new(days_since_epoch: i64) -> Day {
        Day(days_since_epoch)
    }

    pub fn days_since_epoch(self) -> i64 {
        self.0
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Day, DateError> {
        let d = NaiveDate::from_ymd_opt(year, month, day)
            .ok_or_else(|| DateError::Parse(format!("{year:04}-{month:02}-{day:02}")))?;
        Ok(Day::from_naive(d))
    }

    pub fn from_naive(d: NaiveDate) -> Day {
        Day(d.signed_duration_since(epoch()).num_days())
    }

    pub fn to_naive(self) -> NaiveDate {
        epoch()
            .checked_add_signed(chrono::Duration::days(self.0))
            .expect("day within chrono range")
    }

    pub fn parse_iso(s: &str) -> Result<Day, DateError> {
        let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map_err(|_| DateError::Parse(s.to_string()))?;
        Ok(Day::from_naive(d))
    }

    pub fn year(self) -> i32 {
        self.to_naive().year()
    }

    /// Number of days from `earlier` to `self` (may be negative).
    pub fn days_since(self, earlier: Day) -> i64 {
        self.0 - earlier.0
    }

    pub fn add_days(self, days: i64) -> Day {
        Day(self.0 + days)
    }

    /// First day of this date's month.
    pub fn month_floor(self) -> Day {
        let d = self.to_naive();
        Day::from_naive(NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("valid"))
    }

    /// January 1st of this date's year.
    pub fn year_floor(self) -> Day {
        Day::from_naive(NaiveDate::from_ymd_opt(self.to_naive().year(), 1, 1).expect("valid"))
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_naive().format("%Y-%m-%d"))
    }
}

impl FromStr for Day {
    type Err = DateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Day::parse_iso(s)
    }
}

impl Serialize for Day {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Day {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Day::parse_iso(&s).map_err(de::Error::custom)
    }
}

/// True when `t` falls inside the half-open interval `[start, end)`;
/// a missing `end` means the interval is unbounded on the right.
pub fn active_at(start: Day, end: Option<Day>, t: Day) -> bool {
    t >= start && end.map_or(true, |e| t < e)
}

/// Snapshot cadence for time-series operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cadence {
    Daily,
    Monthly,
    Yearly,
}

impl FromStr for Cadence {
    type Err = DateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "daily" => Ok(Cadence::Daily),
            "monthly" => Ok(Cadence::Monthly),
            "yearly" => Ok(Cadence::Yearly),
            other => Err(DateError::Parse(format!("unknown cadence `{other}`"))),
        }
    }
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cadence::Daily => "daily",
            Cadence::Monthly => "monthly",
            Cadence::Yearly => "yearly",
        };
        f.write_str(s)
    }
}

/// All cadence boundary days `t` with `from <= t <= to`, ascending.
///
/// Boundaries are every day (daily), the 1st of each month (monthly), and
/// January 1st (yearly).
pub fn cadence_boundaries(from: Day, to: Day, cadence: Cadence) -> Vec<Day> {
    if from > to {
        return Vec::new();
    }
    let mut out = Vec::new();
    match cadence {
        Cadence::Daily => {
            let mut t = from;
            while t <= to {
                out.push(t);
                t = t.add_days(1);
            }
        }
        Cadence::Monthly => {
            let mut t = from.month_floor();
            if t < from {
                let d = t.to_naive();
                let (y, m) = if d.month() == 12 {
                    (d.year() + 1, 1)
                } else {
                    (d.year(), d.month() + 1)
                };
                t = Day::from_naive(NaiveDate::from_ymd_opt(y, m, 1).expect("valid"));
            }
            while t <= to {
                out.push(t);
                let d = t.to_naive();
                let (y, m) = if d.month() == 12 {
                    (d.year() + 1, 1)
                } else {
                    (d.year(), d.month() + 1)
                };
                t = Day::from_naive(NaiveDate::from_ymd_opt(y, m, 1).expect("valid"));
            }
        }
        Cadence::Yearly => {
            let mut t = from.year_floor();
            if t < from {
                t = Day::from_ymd(t.year() + 1, 1, 1).expect("valid");
            }
            while t <= to {
                out.push(t);
                t = Day::from_ymd(t.year() + 1, 1, 1).expect("valid");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let d = Day::parse_iso("2020-09-10").unwrap();
        assert_eq!(d.to_string(), "2020-09-10");
        assert_eq!(Day::from_ymd(1970, 1, 1).unwrap().days_since_epoch(), 0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Day::parse_iso("04/2014").is_err());
        assert!(Day::parse_iso("2014-13-01").is_err());
        assert!(Day::parse_iso("").is_err());
    }

    #[test]
    fn day_arithmetic() {
        let start = Day::parse_iso("2018-01-01").unwrap();
        let end = Day::parse_iso("2018-12-31").unwrap();
        assert_eq!(end.days_since(start), 364);
        assert_eq!(
            Day::parse_iso("2010-01-01").unwrap().add_days(500),
            Day::parse_iso("2011-05-16").unwrap()
        );
    }

    #[test]
    fn half_open_interval() {
        let s = Day::parse_iso("2010-01-01").unwrap();
        let e = Day::parse_iso("2012-01-01").unwrap();
        assert!(active_at(s, Some(e), s));
        assert!(!active_at(s, Some(e), e));
        assert!(active_at(s, None, e.add_days(10_000)));
        assert!(!active_at(s, Some(e), s.add_days(-1)));
    }

    #[test]
    fn yearly_boundaries_count() {
        let from = Day::parse_iso("2006-01-01").unwrap();
        let to = Day::parse_iso("2020-12-31").unwrap();
        let b = cadence_boundaries(from, to, Cadence::Yearly);
        assert_eq!(b.len(), 15);
        assert_eq!(b[0], from);
        assert_eq!(b[14], Day::parse_iso("2020-01-01").unwrap());
    }

    #[test]
    fn monthly_boundaries_skip_partial_month() {
        let from = Day::parse_iso("2019-11-15").unwrap();
        let to = Day::parse_iso("2020-02-01").unwrap();
        let b = cadence_boundaries(from, to, Cadence::Monthly);
        let expect: Vec<Day> = ["2019-12-01", "2020-01-01", "2020-02-01"]
            .iter()
            .map(|s| Day::parse_iso(s).unwrap())
            .collect();
        assert_eq!(b, expect);
    }

    #[test]
    fn empty_range() {
        let from = Day::parse_iso("2020-01-02").unwrap();
        assert!(cadence_boundaries(from, from.add_days(-1), Cadence::Daily).is_empty());
    }
}
