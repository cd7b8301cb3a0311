use std::cmp::Ordering;
use std::fmt;

use super::decimal::Decimal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Int,
    Dec,
    Str,
}

impl Kind {
    pub fn is_numeric(self) -> bool {
        matches!(self, Kind::Int | Kind::Dec)
    }

    /// Two kinds may be compared when both are numeric or both are text.
    pub fn comparable_with(self, other: Kind) -> bool {
        self.is_numeric() == other.is_numeric()
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int => "Int",
            Kind::Dec => "Dec",
            Kind::Str => "Str",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Dec(Decimal),
    Str(String),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Int(_) => Kind::Int,
            Value::Dec(_) => Kind::Dec,
            Value::Str(_) => Kind::Str,
        }
    }

    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    /// Parses a decimal literal; panics on malformed input. Test helper.
    pub fn dec(s: &str) -> Self {
        Value::Dec(s.parse().expect("valid decimal literal"))
    }

    /// Numeric view at scale 6; `None` for text.
    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            Value::Int(i) => Some(Decimal::from_int(*i)),
            Value::Dec(d) => Some(*d),
            Value::Str(_) => None,
        }
    }

    /// Ordering used by comparison operators. Int and Dec compare
    /// numerically; text against a number is an error.
    pub fn compare(&self, other: &Value) -> Result<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Ok(a.cmp(b)),
            (Value::Str(_), _) | (_, Value::Str(_)) => Err(Error::KindMismatch(format!(
                "cannot compare {} with {}",
                self.kind(),
                other.kind()
            ))),
            _ => Ok(self.as_decimal().cmp(&other.as_decimal())),
        }
    }

    /// Total order for sorting group keys and rendering: kinds first
    /// (Int, Dec, Str), then values.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Int(_) => 0,
                Value::Dec(_) => 1,
                Value::Str(_) => 2,
            }
        }
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Dec(a), Value::Dec(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Adds two numeric values. Int + Int stays Int; anything involving a
    /// Dec becomes Dec.
    pub fn checked_add(&self, other: &Value) -> Result<Value> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a
                .checked_add(*b)
                .map(Value::Int)
                .ok_or(Error::Overflow("integer addition")),
            _ => match (self.as_decimal(), other.as_decimal()) {
                (Some(a), Some(b)) => Ok(Value::Dec(a.checked_add(b)?)),
                _ => Err(Error::KindMismatch(format!(
                    "cannot add {} and {}",
                    self.kind(),
                    other.kind()
                ))),
            },
        }
    }

    /// Parses a CSV cell as the given kind.
    pub fn parse_as(text: &str, kind: Kind) -> Result<Value> {
        match kind {
            Kind::Int => text
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| Error::Load(format!("`{text}` is not an integer"))),
            Kind::Dec => text.parse::<Decimal>().map(Value::Dec),
            Kind::Str => Ok(Value::Str(text.to_string())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Dec(d) => write!(f, "{d}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_promotion() {
        assert_eq!(
            Value::Int(4).compare(&Value::dec("4.0")).unwrap(),
            Ordering::Equal
        );
        assert_eq!(
            Value::dec("4.5").compare(&Value::Int(4)).unwrap(),
            Ordering::Greater
        );
        assert!(Value::str("a").compare(&Value::Int(1)).is_err());
        assert_ne!(Value::Int(4), Value::dec("4.0"));
    }

    #[test]
    fn addition_kinds() {
        assert_eq!(
            Value::Int(2).checked_add(&Value::Int(3)).unwrap(),
            Value::Int(5)
        );
        assert_eq!(
            Value::Int(2).checked_add(&Value::dec("0.5")).unwrap(),
            Value::dec("2.5")
        );
        assert!(Value::Int(i64::MAX).checked_add(&Value::Int(1)).is_err());
        assert!(Value::str("x").checked_add(&Value::Int(1)).is_err());
    }
}
