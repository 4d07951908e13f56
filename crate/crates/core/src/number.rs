//! Stable index parameter and a numeric type that stays exact when it can.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// The stable index α ∈ (1, 2], kept as an exact fraction when possible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Alpha {
    value: f64,
    exact: Option<(i64, i64)>,
}

impl Alpha {
    /// Exact α = p/q, reduced to lowest terms.
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q <= 0 || p <= q || p > 2 * q {
            return Err(Error::InvalidParameter(format!("alpha {p}/{q} not in (1,2]")));
        }
        let g = num_integer::gcd(p, q);
        let (p, q) = (p / g, q / g);
        Ok(Self { value: p as f64 / q as f64, exact: Some((p, q)) })
    }

    /// Floating α; exact arithmetic paths are disabled for such values.
    pub fn float(x: f64) -> Result<Self> {
        if !(x > 1.0 && x <= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha {x} not in (1,2]")));
        }
        Ok(Self { value: x, exact: None })
    }

    /// Parses "P/Q" as an exact rational and anything else as a decimal.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
            let q = q.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
            return Self::rational(p, q);
        }
        if let Ok(k) = s.parse::<i64>() {
            return Self::rational(k, 1);
        }
        let x = s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
        Self::float(x)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Numerator and denominator when α is exact.
    pub fn ratio(&self) -> Option<(i64, i64)> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn number(&self) -> Number {
        match self.exact {
            Some((p, q)) => Number::ratio(p, q),
            None => Number::Float(self.value),
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some((p, q)) => write!(f, "{p}/{q}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// An exact rational or a binary float; mixed arithmetic degrades to float.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn int(k: i64) -> Self {
        Number::Exact(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Number::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn zero() -> Self {
        Number::int(0)
    }

    pub fn one() -> Self {
        Number::int(1)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Number::Exact(r) => Some(r),
            Number::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_one(),
            Number::Float(x) => *x == 1.0,
        }
    }

    /// Numerator and denominator as decimal strings, or the float rendered twice.
    pub fn num_den(&self) -> (String, String) {
        match self {
            Number::Exact(r) => (r.numer().to_string(), r.denom().to_string()),
            Number::Float(x) => (format!("{x}"), "1".to_string()),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Number::Exact(r) => s.serialize_str(&r.to_string()),
            Number::Float(x) => s.serialize_f64(*x),
        }
    }
}

macro_rules! number_op {
    ($tr:ident, $m:ident) => {
        impl $tr<&Number> for &Number {
            type Output = Number;
            fn $m(self, rhs: &Number) -> Number {
                match (self, rhs) {
                    (Number::Exact(a), Number::Exact(b)) => Number::Exact(a.$m(b)),
                    _ => Number::Float(self.to_f64().$m(rhs.to_f64())),
                }
            }
        }
        impl $tr<Number> for Number {
            type Output = Number;
            fn $m(self, rhs: Number) -> Number {
                (&self).$m(&rhs)
            }
        }
    };
}

number_op!(Add, add);
number_op!(Sub, sub);
number_op!(Mul, mul);
number_op!(Div, div);

impl std::iter::Sum for Number {
    fn sum<I: Iterator<Item = Number>>(iter: I) -> Number {
        iter.fold(Number::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Number {
    fn product<I: Iterator<Item = Number>>(iter: I) -> Number {
        iter.fold(Number::one(), |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        let a = Alpha::parse("10/8").unwrap();
        assert_eq!(a.ratio(), Some((5, 4)));
        assert_eq!(a.to_string(), "5/4");
        assert_eq!(Alpha::parse("2").unwrap().ratio(), Some((2, 1)));
        let b = Alpha::parse("1.5").unwrap();
        assert!(!b.is_exact());
        assert!(Alpha::parse("1").is_err());
        assert!(Alpha::parse("5/2").is_err());
    }

    #[test]
    fn exact_arithmetic_stays_exact() {
        let x = Number::ratio(1, 3) + Number::ratio(1, 6);
        assert_eq!(x, Number::ratio(1, 2));
        let y = x * Number::Float(2.0);
        assert_eq!(y, Number::Float(1.0));
    }
}
