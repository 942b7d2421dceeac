//! Exact rational arithmetic helpers.
//!
//! Every probability, distance and audit constant in this crate is an
//! exact `BigRational`; floating point never enters a definitional
//! computation.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::error::{LtcError, Result};

pub type Rational = num_rational::BigRational;

/// Shorthand for `n/d` from machine integers.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `count / total` as an exact fraction; an empty total maps to 0.
pub fn ratio_of_counts(count: usize, total: usize) -> Rational {
    if total == 0 {
        return Rational::zero();
    }
    Rational::new(BigInt::from(count), BigInt::from(total))
}

/// Canonical wire form `num/den`, denominator always written.
pub fn format_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` (or a bare integer) back into a rational.
pub fn parse_ratio(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num)
        .map_err(|e| LtcError::Format(format!("bad numerator {num:?}: {e}")))?;
    let d = BigInt::from_str(den)
        .map_err(|e| LtcError::Format(format!("bad denominator {den:?}: {e}")))?;
    if d.is_zero() {
        return Err(LtcError::Format(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Fixed-point decimal rendering with `digits` fractional digits,
/// rounded half away from zero. Pure integer arithmetic, so output is
/// identical on every platform.
pub fn decimal_string(r: &Rational, digits: u32) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let scale = BigInt::from(10u32).pow(digits);
    // round(abs * scale)
    let scaled_num = abs.numer() * &scale;
    let den = abs.denom();
    let quotient = (&scaled_num + den / 2u32) / den;
    let int_part = &quotient / &scale;
    let frac_part = &quotient % &scale;
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!(
            "{sign}{int_part}.{frac:0>width$}",
            frac = frac_part,
            width = digits as usize
        )
    }
}

/// Smallest `c >= 0` with `2^c >= r`; used for logarithmic round caps.
pub fn ceil_log2(r: &Rational) -> u32 {
    if *r <= Rational::one() {
        return 0;
    }
    let mut c = 0u32;
    let mut power = Rational::one();
    let two = rat_int(2);
    while power < *r {
        power *= &two;
        c += 1;
    }
    c
}

pub fn to_f64_lossy(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse_round_trip() {
        let r = rat(-7, 12);
        assert_eq!(format_ratio(&r), "-7/12");
        assert_eq!(parse_ratio("-7/12").unwrap(), r);
        assert_eq!(parse_ratio("5").unwrap(), rat_int(5));
        assert_eq!(parse_ratio(" 3 / 9 ").unwrap(), rat(1, 3));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x/2").is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&rat(1, 3), 6), "0.333333");
        assert_eq!(decimal_string(&rat(2, 3), 6), "0.666667");
        assert_eq!(decimal_string(&rat(-1, 2), 3), "-0.500");
        assert_eq!(decimal_string(&rat_int(4), 2), "4.00");
        assert_eq!(decimal_string(&rat_int(0), 0), "0");
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(&rat_int(1)), 0);
        assert_eq!(ceil_log2(&rat_int(2)), 1);
        assert_eq!(ceil_log2(&rat_int(28)), 5);
        assert_eq!(ceil_log2(&rat(1, 2)), 0);
        assert_eq!(ceil_log2(&rat(9, 4)), 2);
    }
}
