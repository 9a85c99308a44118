//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Exact arbitrary-precision rational used for weights, costs and margins.
pub type Q = BigRational;

/// Exact small rational used for ground distances.
///
/// Shift distances are dyadic and circle distances are `p/Q`, so a 64-bit
/// numerator/denominator pair never overflows for represented points.
pub type Dist = Rational64;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn dist_to_q(d: Dist) -> Q {
    q_frac(*d.numer(), *d.denom())
}

/// Converts an exact rational back to a [`Dist`]; fails if it does not fit.
pub fn q_to_dist(q: &Q) -> Result<Dist> {
    match (q.numer().to_i64(), q.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Dist::new(n, d)),
        _ => Err(Error::InvalidParameter(format!(
            "{} does not fit a 64-bit rational",
            fmt_q(q)
        ))),
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Huge numerator or denominator: fall back to a log-scale estimate.
        let (n, d) = (q.numer(), q.denom());
        let ln = big_ln(n.abs()) - big_ln(d.clone());
        let v = ln.exp();
        if n.is_negative() {
            -v
        } else {
            v
        }
    })
}

/// Natural log of a positive big integer without overflowing f64.
pub fn big_ln(n: BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().map(f64::ln).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top: BigInt = &n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a positive rational, robust to huge values.
pub fn q_ln(q: &Q) -> f64 {
    big_ln(q.numer().clone()) - big_ln(q.denom().clone())
}

pub fn pow2_neg(j: u32) -> Dist {
    Dist::new(1, 1i64 << j)
}

pub fn q_pow(base: &Q, exp: u32) -> Q {
    let mut acc = Q::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Parses `"3"`, `"-2/7"` or a finite decimal such as `"0.125"` exactly.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse {s:?} as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

pub fn parse_dist(s: &str) -> Result<Dist> {
    q_to_dist(&parse_q(s)?)
}

/// `a/b`, or just `a` for integers.
pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn fmt_dist(d: &Dist) -> String {
    fmt_q(&dist_to_q(*d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_q("1/3").unwrap(), q_frac(1, 3));
        assert_eq!(parse_q("0.125").unwrap(), q_frac(1, 8));
        assert_eq!(parse_q("-0.5").unwrap(), q_frac(-1, 2));
        assert_eq!(parse_q("7").unwrap(), q_int(7));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["1/3", "7", "-2/9"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
    }

    #[test]
    fn log_of_huge_rationals() {
        let big = q_pow(&q_int(128), 256);
        let expected = 256.0 * 128f64.ln();
        assert!((q_ln(&big) - expected).abs() < 1e-9 * expected);
    }
}
