//! Probability values: exact rationals or tolerant floats.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Absolute tolerance used by every float comparison.
pub const EPS_NUM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rational,
    Float,
}

/// Arithmetic needed by systems, the simplex and gauge reconstruction.
///
/// The rational backend decides signs exactly; the float backend treats
/// anything within [`EPS_NUM`] of zero as zero.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    /// Canonical string used for hashing and memo keys.
    fn key(&self) -> String;

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero()
    }

    fn abs_diff(&self, other: &Self) -> f64 {
        (self.to_f64() - other.to_f64()).abs()
    }
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn key(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
    fn abs_diff(&self, other: &Self) -> f64 {
        Scalar::to_f64(&(self - other).abs())
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        self.abs() <= EPS_NUM
    }
    fn is_positive(&self) -> bool {
        *self > EPS_NUM
    }
    fn is_negative(&self) -> bool {
        *self < -EPS_NUM
    }
    fn key(&self) -> String {
        // Round away float noise so equal tables share a key.
        let r = (self * 1e9).round() / 1e9;
        if r == 0.0 {
            "0".to_string()
        } else {
            format!("{r}")
        }
    }
}

/// Format a rational as `"num/den"`, or `"num"` when integral.
pub fn rational_to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cannot parse {0:?} as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parse `"p/q"`, an integer, or a finite decimal such as `"0.0625"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Exact rational equal to the binary value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    BigRational::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parse_is_exact() {
        assert_eq!(parse_rational("0.0625").unwrap(), Rational::from_ratio(1, 16));
        assert_eq!(parse_rational("-1/4").unwrap(), Rational::from_ratio(-1, 4));
        assert_eq!(parse_rational("3").unwrap(), Rational::from_ratio(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), Rational::from_ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rationals_are_canonical() {
        let r = Rational::from_ratio(2, -4);
        assert_eq!(r.key(), "-1/2");
        assert_eq!(rational_to_string(&Rational::from_ratio(4, 2)), "2");
    }

    #[test]
    fn float_tolerance() {
        assert!(Scalar::is_zero(&1e-10_f64));
        assert!(!Scalar::is_zero(&1e-8_f64));
        assert!(0.1_f64.approx_eq(&(0.1 + 5e-10)));
    }
}
