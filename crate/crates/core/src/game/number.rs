use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, ToPrimitive, Zero};

/// A payoff or probability value: exact rational when the source was exact,
/// otherwise a double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Exact(Rational64),
    Float(f64),
}

impl Number {
    pub fn ratio(num: i64, den: i64) -> Self {
        Number::Exact(Rational64::new(num, den))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(f) => *f,
        }
    }

    pub fn as_rational(&self) -> Option<Rational64> {
        match self {
            Number::Exact(r) => Some(*r),
            Number::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(f) => *f == 0.0,
        }
    }

    /// Exact when both sides are exact and the sum does not overflow.
    pub fn add(self, other: Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a
                .checked_add(&b)
                .map(Number::Exact)
                .unwrap_or(Number::Float(self.to_f64() + other.to_f64())),
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }
}

impl From<i64> for Number {
    fn from(v: i64) -> Self {
        Number::Exact(Rational64::from_integer(v))
    }
}

impl From<f64> for Number {
    fn from(v: f64) -> Self {
        Number::Float(v)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Number::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            // Debug formatting is the shortest representation that parses back
            // to the same double, and always carries a '.' or an exponent.
            Number::Float(v) => write!(f, "{v:?}"),
        }
    }
}

impl FromStr for Number {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid number {s:?}");
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.parse().map_err(|_| bad())?;
            let d: i64 = d.parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            return Ok(Number::ratio(n, d));
        }
        if s.contains(['.', 'e', 'E']) || s.contains("inf") || s.contains("NaN") {
            let v: f64 = s.parse().map_err(|_| bad())?;
            return Ok(Number::Float(v));
        }
        match s.parse::<i64>() {
            Ok(v) => Ok(Number::from(v)),
            Err(_) => s.parse::<f64>().map(Number::Float).map_err(|_| bad()),
        }
    }
}
