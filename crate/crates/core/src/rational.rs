//! Exact rational helpers and the log-deferred distance scalar.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            // huge numerators: scale through logs
            let n = x.numer().to_f64().unwrap_or(f64::MAX);
            let d = x.denom().to_f64().unwrap_or(f64::MAX);
            n / d
        }
    }
}

pub fn ln_q(x: &Q) -> f64 {
    let n = x.numer().abs();
    let d = x.denom();
    ln_big(&n) - ln_big(d)
}

fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ceil_q(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

pub fn max_q<'a>(xs: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    xs.into_iter().max().cloned()
}

/// A distance `log(ratio)` kept as its exact ratio.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogScalar {
    #[serde(with = "q_string")]
    pub ratio: Q,
}

impl LogScalar {
    pub fn new(ratio: Q) -> Self {
        assert!(ratio.is_positive(), "LogScalar ratio must be positive");
        LogScalar { ratio }
    }

    pub fn zero() -> Self {
        LogScalar { ratio: Q::one() }
    }

    pub fn log(&self) -> f64 {
        ln_q(&self.ratio)
    }

    /// Sum of distances is the product of ratios.
    pub fn add(&self, other: &LogScalar) -> LogScalar {
        LogScalar { ratio: &self.ratio * &other.ratio }
    }

    pub fn sub(&self, other: &LogScalar) -> LogScalar {
        LogScalar { ratio: &self.ratio / &other.ratio }
    }
}

impl fmt::Debug for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log({})", fmt_q(&self.ratio))
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.log())
    }
}

pub mod q_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("4/6").unwrap(), q(2, 3));
        assert_eq!(parse_q(" 7 ").unwrap(), qi(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
        assert_eq!(fmt_q(&q(6, 4)), "3/2");
        assert_eq!(fmt_q(&qi(-2)), "-2");
    }

    #[test]
    fn logs() {
        assert!((ln_q(&q(4, 3)) - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let big = Q::from_integer(BigInt::from(3).pow(2000));
        assert!((ln_q(&big) - 2000.0 * 3f64.ln()).abs() < 1e-6);
        let d = LogScalar::new(q(4, 3)).add(&LogScalar::new(q(3, 2)));
        assert_eq!(d.ratio, qi(2));
    }
}
