//! Exact rational helpers. Weights travel as `"p/q"` strings in files.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.125"`.
pub fn parse(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !whole_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let mut num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(num, den));
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Canonical `"p/q"` form; integers still carry `/1`.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn floor_u64(r: &Rational) -> Result<u64> {
    r.floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Budget(format!("{} does not fit in u64", format(r))))
}

/// Least common multiple of all denominators.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Rescales to integers over `denominator`: returns `v * denominator` as i128.
pub fn scaled_i128(v: &Rational, denominator: &BigInt) -> Result<i128> {
    let scaled = v * Rational::from_integer(denominator.clone());
    debug_assert!(scaled.is_integer());
    scaled
        .to_integer()
        .to_i128()
        .ok_or_else(|| Error::Budget("scaled weight overflows i128".into()))
}

pub fn max_of<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> Option<Rational> {
    values.into_iter().max().cloned()
}

pub fn min_of<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> Option<Rational> {
    values.into_iter().min().cloned()
}

/// `x` clamped below at zero.
pub fn nonneg(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

/// Validates `0 < eps <= 1/2`.
pub fn check_epsilon(eps: &Rational) -> Result<()> {
    if eps.is_positive() && *eps <= ratio(1, 2) {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "epsilon {} outside (0, 1/2]",
            format(eps)
        )))
    }
}

/// `ceil(1/eps)` for positive `eps`.
pub fn ceil_inverse(eps: &Rational) -> u64 {
    eps.recip()
        .ceil()
        .to_integer()
        .to_u64()
        .expect("1/eps fits in u64")
}

pub mod serde_rational {
    use super::{format, parse, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::{format, parse, Rational};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(format).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert!(matches!(parse("1/0"), Err(Error::Parse(_))));
        assert!(matches!(parse("x"), Err(Error::Parse(_))));
        assert!(matches!(parse("1."), Err(Error::Parse(_))));
        assert_eq!(format(&ratio(4, 2)), "2/1");
    }

    #[test]
    fn epsilon_window() {
        assert!(check_epsilon(&ratio(1, 2)).is_ok());
        assert!(check_epsilon(&ratio(1, 10)).is_ok());
        assert!(check_epsilon(&int(0)).is_err());
        assert!(check_epsilon(&ratio(3, 5)).is_err());
        assert_eq!(ceil_inverse(&ratio(1, 10)), 10);
        assert_eq!(ceil_inverse(&ratio(3, 10)), 4);
    }

    #[test]
    fn scaling_is_exact() {
        let ws = [ratio(1, 3), ratio(5, 4)];
        let d = common_denominator(ws.iter());
        assert_eq!(d, BigInt::from(12));
        assert_eq!(scaled_i128(&ws[0], &d).unwrap(), 4);
        assert_eq!(scaled_i128(&ws[1], &d).unwrap(), 15);
    }
}
