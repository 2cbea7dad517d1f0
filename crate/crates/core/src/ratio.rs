//! Exact rational helpers and their text forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Result};

pub fn ratio_of(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn ratio_int(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

/// Always `"p/q"`, including `q = 1`.
pub fn rational_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || invalid(format!("'{text}' is not an exact rational (use p/q, an integer or a decimal)"));
    if let Some((p, q)) = t.split_once('/') {
        let (Ok(p), Ok(q)) = (p.trim().parse::<BigInt>(), q.trim().parse::<BigInt>()) else {
            return bad();
        };
        if q.is_zero() {
            return invalid(format!("'{text}': zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return bad();
        }
        let negative = ip.starts_with('-');
        let ip = if ip.is_empty() || ip == "-" { "0" } else { ip };
        let Ok(whole) = ip.parse::<BigInt>() else {
            return bad();
        };
        let frac: BigInt = fp.parse().expect("digits");
        let scale = num_traits::pow(BigInt::from(10), fp.len());
        let frac = BigRational::new(frac, scale);
        let whole = BigRational::from_integer(whole.clone());
        return Ok(if negative { whole - frac } else { whole + frac });
    }
    match t.parse::<BigInt>() {
        Ok(p) => Ok(BigRational::from_integer(p)),
        Err(_) => bad(),
    }
}

/// `x^n` for a nonnegative integer power.
pub fn pow(x: &BigRational, n: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("7/2").unwrap(), ratio_of(7, 2));
        assert_eq!(parse_rational("1000").unwrap(), ratio_int(1000));
        assert_eq!(parse_rational("0.125").unwrap(), ratio_of(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio_of(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(rational_string(&ratio_int(3)), "3/1");
    }
}
