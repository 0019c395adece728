//! Scalar arithmetic used by every engine.
//!
//! The model runs either over exact rationals ([`Rational`]) or over `f64`.
//! Both implement [`Scalar`], and every algorithm in this crate is generic
//! over it. In rational mode no rounding happens anywhere; in float mode all
//! comparisons are the plain IEEE comparisons with no epsilon.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Rational = BigRational;

/// Which arithmetic a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Rational,
    Float,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arithmetic::Rational => f.write_str("rational"),
            Arithmetic::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Arithmetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" | "exact" => Ok(Arithmetic::Rational),
            "float" | "f64" => Ok(Arithmetic::Float),
            other => Err(Error::Parse(format!("unknown arithmetic mode `{other}`"))),
        }
    }
}

/// A number the model can run on.
pub trait Scalar: Num + Signed + Clone + PartialOrd + fmt::Debug + Send + Sync + 'static {
    const ARITHMETIC: Arithmetic;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value. For floats this is the binary value of the double.
    fn to_rational(&self) -> Rational;

    /// `p/q` for rationals, shortest round-trip decimal for floats.
    fn render(&self) -> String;

    /// Appends a stable byte encoding of the value.
    fn encode(&self, out: &mut Vec<u8>);

    fn from_usize(v: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for Rational {
    const ARITHMETIC: Arithmetic = Arithmetic::Rational;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn render(&self) -> String {
        render_rational(self)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        // Ratio is always kept in lowest terms with a positive denominator.
        encode_bigint(self.numer(), out);
        encode_bigint(self.denom(), out);
    }
}

impl Scalar for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Float;

    fn from_rational(r: &Rational) -> Self {
        ratio_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn encode(&self, out: &mut Vec<u8>) {
        // Collapse -0.0 onto 0.0 so equal values encode equally.
        let v = if *self == 0.0 { 0.0f64 } else { *self };
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

fn encode_bigint(v: &BigInt, out: &mut Vec<u8>) {
    let (sign, bytes) = v.to_bytes_le();
    out.push(match sign {
        Sign::Minus => 0,
        Sign::NoSign => 1,
        Sign::Plus => 2,
    });
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&bytes);
}

/// Correctly handles numerators and denominators beyond the `f64` range.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 9.0e15 && d < 9.0e15 {
            return n / d;
        }
    }
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// `p/q`, or just `p` for integers.
pub fn render_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal string with `digits` places, rounded half away from zero.
pub fn render_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let rounded = (scaled + half).floor().to_integer();
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !rounded.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
    }
}

/// Parses `p/q`, an integer, or a decimal such as `0.255`, `-1.5e-3`, exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad_number(s))?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad_number(s))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| bad_number(s))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_digits, frac_digits) = digits.split_once('.').unwrap_or((digits, ""));
    if int_digits.is_empty() && frac_digits.is_empty() {
        return Err(bad_number(s));
    }
    if !int_digits.chars().chain(frac_digits.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad_number(s));
    }
    let all: String = format!("{int_digits}{frac_digits}");
    let mut numer = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10)
        .map_err(|_| bad_number(s))?;
    if negative {
        numer = -numer;
    }
    let shift = exponent - frac_digits.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if shift >= 0 {
        Rational::from_integer(numer * ten.pow(shift as u32))
    } else {
        Rational::new(numer, ten.pow((-shift) as u32))
    };
    Ok(value)
}

fn bad_number(s: &str) -> Error {
    Error::Parse(format!("cannot parse `{s}` as an exact rational"))
}

/// Shorthand used throughout tests and presets: `rat("0.255")`, `rat("2/5")`.
///
/// Panics on malformed input; use [`parse_rational`] for untrusted text.
pub fn rat(s: &str) -> Rational {
    parse_rational(s).unwrap_or_else(|e| panic!("{e}"))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact `⌈r⌉`.
pub fn ceil_int(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Exact `⌊r⌋`.
pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

/// Rational number serialized as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalString(pub Rational);

impl Serialize for RationalString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RationalString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        rational_from_json(&value)
            .map(RationalString)
            .map_err(serde::de::Error::custom)
    }
}

/// Accepts `"p/q"`, decimal strings, or JSON numbers (read through their
/// shortest decimal form, so `0.3` means exactly 3/10).
pub fn rational_from_json(value: &serde_json::Value) -> Result<Rational> {
    match value {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!("expected a number, found {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(rat("0.255"), Rational::new(BigInt::from(51), BigInt::from(200)));
        assert_eq!(rat("0.3"), Rational::new(BigInt::from(3), BigInt::from(10)));
        assert_eq!(rat("-1.5e-3"), Rational::new(BigInt::from(-3), BigInt::from(2000)));
        assert_eq!(rat("2e2"), int(200));
        assert_eq!(rat(".5"), Rational::new(BigInt::from(1), BigInt::from(2)));
        assert_eq!(rat("1"), int(1));
    }

    #[test]
    fn parses_fractions_in_lowest_terms() {
        let r = rat("6/8");
        assert_eq!(r.numer(), &BigInt::from(3));
        assert_eq!(r.denom(), &BigInt::from(4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn decimal_rendering_rounds_half_up() {
        assert_eq!(render_decimal(&rat("0.1995"), 3), "0.200");
        assert_eq!(render_decimal(&rat("0.19948"), 3), "0.199");
        assert_eq!(render_decimal(&rat("1"), 3), "1.000");
        assert_eq!(render_decimal(&rat("6/125"), 3), "0.048");
        assert_eq!(render_decimal(&rat("-0.0004"), 3), "0.000");
        assert_eq!(render_decimal(&rat("2/3"), 0), "1");
    }

    #[test]
    fn json_numbers_use_their_decimal_text() {
        let v: serde_json::Value = serde_json::from_str("0.12").unwrap();
        assert_eq!(rational_from_json(&v).unwrap(), rat("3/25"));
        let v: serde_json::Value = serde_json::from_str("\"12/100\"").unwrap();
        assert_eq!(rational_from_json(&v).unwrap(), rat("3/25"));
    }

    #[test]
    fn encodings_are_canonical() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        rat("2/4").encode(&mut a);
        rat("0.5").encode(&mut b);
        assert_eq!(a, b);
        let mut z1 = Vec::new();
        let mut z2 = Vec::new();
        0.0f64.encode(&mut z1);
        (-0.0f64).encode(&mut z2);
        assert_eq!(z1, z2);
    }

    #[test]
    fn huge_ratios_convert_to_float() {
        let big = BigInt::from(10u32).pow(400);
        let r = Rational::new(big.clone() + 1, big * 3);
        assert!((ratio_to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
    }
}
