//! Exact arithmetic over the rationals and real quadratic fields.
//!
//! Every comparison in the crate bottoms out here. Quadratic numbers
//! `(a + b√d)/c` are compared by integer sign evaluation only, so no
//! floating point ever participates in a decision.

mod cf;
mod homogeneous;
mod power;
mod quadratic;

pub use cf::{cf_convergents, ContinuedFraction};
pub use homogeneous::{check_homogeneous, HomogeneousMinimum};
pub use power::{cmp_root_power, cmp_with_power, ln_enclosure, pow_enclosure, ExactPositive};
pub use quadratic::{Enclosure, QuadraticIrrational, QuadraticNumber};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("radicand {0} must be a positive non-square integer greater than 1")]
    BadRadicand(BigInt),
    #[error("value is rational; an irrational quadratic number is required")]
    Rational,
    #[error("partial quotient a_{index} = {value} must be at least 1")]
    BadPartialQuotient { index: usize, value: BigInt },
    #[error("continued fraction is not eventually periodic")]
    NotPeriodic,
    #[error("continued fraction period not found within {0} steps")]
    PeriodLimit(usize),
    #[error("cannot parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },
}

/// `||x||`, the distance from a rational to the nearest integer.
///
/// Half-integers return exactly 1/2.
pub fn nearest_int_dist(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let other = BigRational::one() - &frac;
    if frac <= other {
        frac
    } else {
        other
    }
}

/// Parses `p/q`, a plain integer, or a decimal such as `0.0001` / `1e-4`.
pub fn parse_rational(input: &str) -> Result<BigRational, ExactError> {
    let err = || ExactError::Parse {
        what: "rational",
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| err())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all: BigInt = format!("{int_part}{frac_part}0")
        .parse()
        .map_err(|_| err())?;
    let all = all / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact `num/den` rendering used by every serialized artifact.
pub fn rational_to_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub(crate) fn gcd3(a: &BigInt, b: &BigInt, c: &BigInt) -> BigInt {
    a.gcd(b).gcd(c)
}
