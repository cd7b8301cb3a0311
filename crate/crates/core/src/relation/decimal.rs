//! Fixed-point decimal numbers with six fractional digits.
//!
//! Every non-integer numeric in the engine is a [`Decimal`]. Addition,
//! comparison and the averaging division are exact (the latter rounds
//! half-to-even at the last digit), so aggregate constraints such as
//! `sum(Rating) > 5.5` never suffer binary floating point drift.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SCALE: u32 = 6;
const ONE: i128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decimal {
    units: i128,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { units: 0 };

    /// Builds a decimal from its raw scaled representation (value * 10^6).
    pub const fn from_units(units: i128) -> Self {
        Decimal { units }
    }

    pub const fn units(self) -> i128 {
        self.units
    }

    pub fn from_int(v: i64) -> Self {
        Decimal {
            units: v as i128 * ONE,
        }
    }

    pub fn is_negative(self) -> bool {
        self.units < 0
    }

    pub fn checked_add(self, other: Decimal) -> Result<Decimal> {
        self.units
            .checked_add(other.units)
            .map(Decimal::from_units)
            .ok_or(Error::Overflow("decimal addition"))
    }

    pub fn checked_sub(self, other: Decimal) -> Result<Decimal> {
        self.units
            .checked_sub(other.units)
            .map(Decimal::from_units)
            .ok_or(Error::Overflow("decimal subtraction"))
    }

    /// Divides by a positive integer count, rounding half to even.
    pub fn div_count(self, count: u64) -> Result<Decimal> {
        if count == 0 {
            return Err(Error::Overflow("division by zero"));
        }
        let d = count as i128;
        let q = self.units.div_euclid(d);
        let r = self.units.rem_euclid(d);
        // q is the floor; decide whether to step up.
        let twice = r * 2;
        let up = match twice.cmp(&d) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => q.rem_euclid(2) == 1,
        };
        Ok(Decimal::from_units(if up { q + 1 } else { q }))
    }
}

impl fmt::Display for Decimal {
    /// Trailing zeros are trimmed but at least one fractional digit is kept.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.units < 0 { "-" } else { "" };
        let abs = self.units.unsigned_abs();
        let int = abs / ONE as u128;
        let frac = format!("{:06}", abs % ONE as u128);
        let trimmed = frac.trim_end_matches('0');
        let frac = if trimmed.is_empty() { "0" } else { trimmed };
        write!(f, "{sign}{int}.{frac}")
    }
}

impl FromStr for Decimal {
    type Err = Error;

    /// Accepts `[+-]digits[.digits]` and `[+-].digits` with at most six
    /// fractional digits.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Load(format!("`{s}` is not a decimal"));
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > SCALE as usize {
            return Err(bad());
        }
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let mut frac: i128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        for _ in frac_part.len()..SCALE as usize {
            frac *= 10;
        }
        let units = int
            .checked_mul(ONE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Ok(Decimal::from_units(if neg { -units } else { units }))
    }
}
