//! Exact rational scalars.
//!
//! Every length, size, budget and utility in the model is a [`Rational`]. On the
//! wire a rational is the string `"p/q"` in lowest terms with `q > 0`; integers
//! may omit the `/q` part.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn from_usize(value: usize) -> Rational {
    BigRational::from_integer(BigInt::from(value))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.45"`.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        if text.contains('/') {
            return Err(Error::Parse(format!("malformed rational {text:?}")));
        }
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("malformed rational {text:?}")));
        }
        let numer = BigInt::from_str(&digits).map_err(|e| Error::Parse(e.to_string()))?;
        let denom = num_traits::pow(BigInt::from(10), frac_part.len());
        let value = BigRational::new(numer, denom);
        return Ok(if negative { -value } else { value });
    }
    let value = BigRational::from_str(text).map_err(|e| Error::Parse(format!("{text:?}: {e}")))?;
    Ok(value)
}

/// Canonical wire form: `"p/q"`, or `"p"` for integers.
pub fn format(value: &Rational) -> String {
    value.to_string()
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite float.
pub fn from_f64(value: f64) -> Option<Rational> {
    BigRational::from_float(value)
}

/// Smallest-denominator rational within `tol` of `value`, by continued fractions.
pub fn approximate(value: f64, tol: f64) -> Option<Rational> {
    if !value.is_finite() {
        return None;
    }
    let exact = from_f64(value)?;
    let tol = from_f64(tol.abs())?;
    let mut x = exact.clone();
    // Convergent recurrences, seeded with h_{-1}/k_{-1} = 1/0 and h_{-2}/k_{-2} = 0/1.
    let mut h_m1 = BigInt::one();
    let mut h_m2 = BigInt::zero();
    let mut k_m1 = BigInt::zero();
    let mut k_m2 = BigInt::one();
    for _ in 0..128 {
        let a = x.floor().to_integer();
        let h_new = &a * &h_m1 + &h_m2;
        let k_new = &a * &k_m1 + &k_m2;
        let candidate = BigRational::new(h_new.clone(), k_new.clone());
        if (&candidate - &exact).abs() <= tol {
            return Some(candidate);
        }
        let frac = &x - BigRational::from_integer(a);
        if frac.is_zero() {
            return Some(candidate);
        }
        x = frac.recip();
        h_m2 = std::mem::replace(&mut h_m1, h_new);
        k_m2 = std::mem::replace(&mut k_m1, k_new);
    }
    Some(exact)
}

pub fn floor(value: &Rational) -> BigInt {
    value.floor().to_integer()
}

pub fn ceil(value: &Rational) -> BigInt {
    value.ceil().to_integer()
}

pub fn floor_rat(value: &Rational) -> Rational {
    value.floor()
}

pub fn ceil_rat(value: &Rational) -> Rational {
    value.ceil()
}

/// `floor(value)` as `usize`, clamped at zero.
pub fn floor_usize(value: &Rational) -> usize {
    if value.is_negative() {
        return 0;
    }
    floor(value).to_usize().unwrap_or(usize::MAX)
}

/// `ceil(value)` as `usize`, clamped at zero.
pub fn ceil_usize(value: &Rational) -> usize {
    if value.is_negative() {
        return 0;
    }
    ceil(value).to_usize().unwrap_or(usize::MAX)
}

pub fn is_integer(value: &Rational) -> bool {
    value.is_integer()
}

pub fn min(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serde adapter: a [`Rational`] as its `"p/q"` string.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&super::format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_vec {
    use super::Rational;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&super::format(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(deserializer)?;
        texts
            .iter()
            .map(|t| super::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_opt {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&super::format(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Rational>, D::Error> {
        let text = Option::<String>::deserialize(deserializer)?;
        text.map(|t| super::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_wire_forms() {
        assert_eq!(parse("9/10").unwrap(), ratio(9, 10));
        assert_eq!(parse("18/20").unwrap(), ratio(9, 10));
        assert_eq!(parse("3").unwrap(), int(3));
        assert_eq!(parse("0.45").unwrap(), ratio(9, 20));
        assert_eq!(parse("-1/2").unwrap(), ratio(-1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format(&ratio(18, 20)), "9/10");
        assert_eq!(format(&int(2)), "2");
        assert_eq!(format(&ratio(4, -6)), "-2/3");
    }

    #[test]
    fn approximates_simple_fractions() {
        assert_eq!(approximate(0.5, 1e-12).unwrap(), ratio(1, 2));
        assert_eq!(approximate(1.0 / 3.0, 1e-12).unwrap(), ratio(1, 3));
        let pi = approximate(std::f64::consts::PI, 1e-6).unwrap();
        assert!((to_f64(&pi) - std::f64::consts::PI).abs() <= 1e-6);
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(floor_usize(&ratio(5, 2)), 2);
        assert_eq!(ceil_usize(&ratio(5, 2)), 3);
        assert_eq!(ceil_usize(&int(3)), 3);
        assert_eq!(floor_usize(&ratio(-1, 2)), 0);
    }
}
