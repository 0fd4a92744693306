//! Arithmetic backends for opinion coordinates.
//!
//! Two backends are provided: `f64` for Monte Carlo throughput and
//! [`BigRational`] for exact checks. Averaging is closed over the rationals,
//! so every structural inequality can be evaluated without tolerances in
//! exact mode.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Which arithmetic a [`Configuration`](crate::Configuration) is evaluated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarMode {
    Float64,
    ExactRational,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Float64 => "float",
            ScalarMode::ExactRational => "rational",
        }
    }
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalarMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" | "float64" | "f64" => Ok(ScalarMode::Float64),
            "rational" | "exact" | "exact_rational" => Ok(ScalarMode::ExactRational),
            other => Err(Error::InvalidArgument(format!(
                "unknown scalar mode {other:?} (expected float or rational)"
            ))),
        }
    }
}

/// A real-number backend for opinion coordinates.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const MODE: ScalarMode;

    /// Exact conversion from a finite `f64` (every finite double is a dyadic rational).
    fn from_f64(value: f64) -> Result<Self>;

    fn to_f64(&self) -> f64;

    fn from_count(count: usize) -> Self;

    fn half(&self) -> Self {
        self.clone() / Self::from_count(2)
    }

    fn to_json(&self) -> Value;

    fn from_json(value: &Value) -> Result<Self>;
}

fn require_finite(value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!(
            "non-finite coordinate {value}"
        )))
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float64;

    fn from_f64(value: f64) -> Result<Self> {
        require_finite(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_count(count: usize) -> Self {
        count as f64
    }

    fn half(&self) -> Self {
        self * 0.5
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(value: &Value) -> Result<Self> {
        match value {
            Value::Number(num) => num
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("unrepresentable number {num}")))
                .and_then(require_finite),
            Value::String(s) => parse_rational(s).map(|r| Scalar::to_f64(&r)),
            other => Err(Error::Parse(format!("expected a number, got {other}"))),
        }
    }
}

impl Scalar for BigRational {
    const MODE: ScalarMode = ScalarMode::ExactRational;

    fn from_f64(value: f64) -> Result<Self> {
        BigRational::from_float(require_finite(value)?)
            .ok_or_else(|| Error::InvalidArgument(format!("cannot represent {value} exactly")))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_count(count: usize) -> Self {
        BigRational::from_usize(count).expect("usize always fits a BigRational")
    }

    /// Always `"p/q"`, including integers (`"1/1"`).
    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(value: &Value) -> Result<Self> {
        match value {
            Value::String(s) => parse_rational(s),
            Value::Number(num) => {
                if let Some(i) = num.as_i64() {
                    Ok(BigRational::from_integer(BigInt::from(i)))
                } else {
                    let f = num
                        .as_f64()
                        .ok_or_else(|| Error::Parse(format!("unrepresentable number {num}")))?;
                    <BigRational as Scalar>::from_f64(f)
                }
            }
            other => Err(Error::Parse(format!("expected a rational, got {other}"))),
        }
    }
}

/// Parses `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    let (numer, denom) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let numer = BigInt::from_str(numer).map_err(|_| bad())?;
    let denom = BigInt::from_str(denom).map_err(|_| bad())?;
    if denom == BigInt::from(0) {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(numer, denom))
}

/// Shorthand for building exact values in tests and examples.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
