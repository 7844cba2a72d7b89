//! Exact comparisons involving rational powers, plus certified rational
//! enclosures of `R^{p/q}` and `ln x` for reporting.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Enclosure, QuadraticNumber};

/// A value type supporting the operations `cmp_root_power` needs.
pub trait ExactPositive: Clone {
    fn pow_u(&self, e: u32) -> Self;
    fn scale_int(&self, k: &BigInt) -> Self;
    fn cmp_exact(&self, other: &Self) -> Ordering;
}

impl ExactPositive for BigRational {
    fn pow_u(&self, e: u32) -> Self {
        num_traits::pow(self.clone(), e as usize)
    }
    fn scale_int(&self, k: &BigInt) -> Self {
        self * BigRational::from_integer(k.clone())
    }
    fn cmp_exact(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl ExactPositive for QuadraticNumber {
    fn pow_u(&self, e: u32) -> Self {
        self.pow(e)
    }
    fn scale_int(&self, k: &BigInt) -> Self {
        self.mul_int(k)
    }
    fn cmp_exact(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

fn exponent_parts(exp: &BigRational) -> (i64, u32) {
    let p = exp
        .numer()
        .to_i64()
        .expect("exponent numerator fits in i64");
    let q = exp
        .denom()
        .to_u32()
        .expect("exponent denominator fits in u32");
    (p, q)
}

/// Compares `lhs^(1/lhs_root)` against `rhs^(1/rhs_root) · scale^exp`.
///
/// Both bases must be non-negative. All powers are raised to a common
/// integer exponent first, so the comparison is exact.
pub fn cmp_root_power<T: ExactPositive>(
    lhs: &T,
    lhs_root: u32,
    rhs: &T,
    rhs_root: u32,
    scale: &BigUint,
    exp: &BigRational,
) -> Ordering {
    assert!(lhs_root > 0 && rhs_root > 0);
    let (p, q) = exponent_parts(exp);
    let l = lhs_root.lcm(&rhs_root).lcm(&q);
    let mut left = lhs.pow_u(l / lhs_root);
    let mut right = rhs.pow_u(l / rhs_root);
    let e = p * i64::from(l / q);
    let r = BigInt::from(scale.clone());
    if e >= 0 {
        right = right.scale_int(&num_traits::pow(r, e as usize));
    } else {
        left = left.scale_int(&num_traits::pow(r, (-e) as usize));
    }
    left.cmp_exact(&right)
}

/// Compares a positive rational with `scale^exp`.
pub fn cmp_with_power(x: &BigRational, scale: &BigUint, exp: &BigRational) -> Ordering {
    cmp_root_power(x, 1, &BigRational::one(), 1, scale, exp)
}

/// Rational enclosure of `base^exp` with `bits` fractional bits.
pub fn pow_enclosure(base: &BigUint, exp: &BigRational, bits: u32) -> Enclosure {
    assert!(!base.is_zero());
    let (p, q) = exponent_parts(exp);
    let n = num_traits::pow(base.clone(), p.unsigned_abs() as usize);
    let shifted = n << (bits as usize * q as usize);
    let root = shifted.nth_root(q);
    let den = BigInt::one() << bits as usize;
    let exact = num_traits::pow(root.clone(), q as usize) == shifted;
    let lo = BigRational::new(BigInt::from(root.clone()), den.clone());
    let hi = if exact {
        lo.clone()
    } else {
        BigRational::new(BigInt::from(root) + 1, den)
    };
    if p >= 0 {
        Enclosure { lo, hi }
    } else {
        Enclosure {
            lo: hi.recip(),
            hi: lo.recip(),
        }
    }
}

/// Bounds on `2·atanh(z) = ln((1+z)/(1−z))` for `0 ≤ z < 1`.
fn atanh2_bounds(z: &BigRational, terms: u32) -> (BigRational, BigRational) {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = BigRational::zero();
    for i in 0..terms {
        sum += &power / BigRational::from_integer(BigInt::from(2 * i + 1));
        power = &power * &z2;
    }
    let lo = &sum * BigRational::from_integer(2.into());
    let tail = &power * BigRational::from_integer(2.into())
        / (BigRational::from_integer(BigInt::from(2 * terms + 1)) * (BigRational::one() - z2));
    let hi = &lo + tail;
    (lo, hi)
}

/// Certified enclosure of the natural logarithm of `x ≥ 1`.
pub fn ln_enclosure(x: &BigRational, bits: u32) -> Enclosure {
    assert!(x >= &BigRational::one(), "ln_enclosure requires x ≥ 1");
    // x = 2^m · y with 1 ≤ y < 2
    let mut m = x.numer().bits() as i64 - x.denom().bits() as i64;
    let two = BigRational::from_integer(2.into());
    let pow2 = |k: i64| -> BigRational {
        if k >= 0 {
            BigRational::from_integer(BigInt::one() << k as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
        }
    };
    let mut y = x / pow2(m);
    while y >= two {
        y /= &two;
        m += 1;
    }
    while y < BigRational::one() {
        y *= &two;
        m -= 1;
    }
    let scale = BigInt::one() << bits as usize;
    let y_scaled = &y * BigRational::from_integer(scale.clone());
    let y_lo = BigRational::new(y_scaled.floor().to_integer(), scale.clone());
    let y_hi = BigRational::new(y_scaled.ceil().to_integer(), scale);
    let z = |v: &BigRational| (v - BigRational::one()) / (v + BigRational::one());
    let terms = bits / 3 + 2;
    let (ly_lo, _) = atanh2_bounds(&z(&y_lo), terms);
    let (_, ly_hi) = atanh2_bounds(&z(&y_hi), terms);
    let (l2_lo, l2_hi) = atanh2_bounds(&BigRational::new(1.into(), 3.into()), terms);
    let mb = BigRational::from_integer(BigInt::from(m));
    debug_assert!(!mb.is_negative());
    Enclosure {
        lo: &mb * l2_lo + ly_lo,
        hi: &mb * l2_hi + ly_hi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn power_comparisons() {
        let r = BigUint::from(32u32);
        // 32^{6/5} = 64
        assert_eq!(cmp_with_power(&q(64, 1), &r, &q(6, 5)), Ordering::Equal);
        assert_eq!(cmp_with_power(&q(63, 1), &r, &q(6, 5)), Ordering::Less);
        // 32^{−1/5} = 1/2
        assert_eq!(cmp_with_power(&q(1, 2), &r, &q(-1, 5)), Ordering::Equal);
        // √2 vs 2^{1/2}: (2)^{1/2} compared to 1·2^{1/2}
        let two = BigUint::from(2u32);
        assert_eq!(
            cmp_root_power(&q(2, 1), 2, &q(1, 1), 1, &two, &q(1, 2)),
            Ordering::Equal
        );
    }

    #[test]
    fn quadratic_power_comparison() {
        let phi = QuadraticNumber::new(1, 1, 2, 5).unwrap();
        let one = QuadraticNumber::from_integer(1, &phi);
        // φ² = φ + 1 ≈ 2.618 < 2^{1.5} ≈ 2.83
        let lhs = phi.pow(2);
        let r = BigUint::from(2u32);
        assert_eq!(
            cmp_root_power(&lhs, 1, &one, 1, &r, &q(3, 2)),
            Ordering::Less
        );
        assert_eq!(
            cmp_root_power(&lhs, 1, &one, 1, &r, &q(4, 3)),
            Ordering::Greater
        );
    }

    #[test]
    fn pow_enclosure_exact_and_inexact() {
        let e = pow_enclosure(&BigUint::from(32u32), &q(52, 55), 40);
        let approx = 32f64.powf(52.0 / 55.0);
        assert!(e.lo.to_f64().unwrap() <= approx && approx <= e.hi.to_f64().unwrap());
        assert!(e.width() <= q(1, 1 << 39));
        let exact = pow_enclosure(&(BigUint::one() << 55usize), &q(52, 55), 10);
        assert_eq!(exact.lo, exact.hi);
        assert_eq!(
            exact.lo,
            BigRational::from_integer(BigInt::one() << 52usize)
        );
        let neg = pow_enclosure(&BigUint::from(4u32), &q(-1, 2), 8);
        assert_eq!(neg.lo, q(1, 2));
    }

    #[test]
    fn ln_enclosure_brackets_float() {
        for (n, d) in [(1, 1), (2, 1), (32, 1), (10, 3), (1_000_003, 7)] {
            let x = q(n, d);
            let e = ln_enclosure(&x, 64);
            let f = (n as f64 / d as f64).ln();
            assert!(e.lo.to_f64().unwrap() <= f + 1e-12, "{n}/{d}");
            assert!(e.hi.to_f64().unwrap() >= f - 1e-12, "{n}/{d}");
            assert!(e.width() < q(1, 1_000_000_000_000));
        }
    }
}
