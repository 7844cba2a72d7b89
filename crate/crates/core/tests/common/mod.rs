//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's enumeration, sieve, or verification
//! code; only exact number types are reused.

#![allow(dead_code)]

use std::collections::BTreeSet;

use badsieve::exactnum::{QuadraticIrrational, QuadraticNumber};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn golden() -> QuadraticIrrational {
    QuadraticIrrational::golden()
}

pub fn height(a: i64, b: i64) -> u128 {
    let a2 = (a.unsigned_abs() as u128).pow(2);
    let b2 = (b as u128).pow(2);
    b as u128 * a2.max(b2)
}

/// Whether the closed interval of half-width `δ/H` about `(Aθ + C)/B`
/// meets `[lo, hi]`, from scratch.
pub fn interval_meets(
    theta: &QuadraticNumber,
    delta: &BigRational,
    (a, b, c): (i64, i64, i64),
    lo: &BigRational,
    hi: &BigRational,
) -> bool {
    let h = BigRational::from_integer(BigInt::from(height(a, b)));
    let w = delta / h;
    // (Aθ + C)/B ∈ [lo − w, hi + w]  ⇔  Aθ + C ∈ [B(lo − w), B(hi + w)]
    let bq = BigRational::from_integer(b.into());
    let v = theta
        .mul_int(&BigInt::from(a))
        .add_rational(&BigRational::from_integer(c.into()));
    let left = &bq * (lo - &w);
    let right = &bq * (hi + &w);
    v.cmp_rational(&left).is_ge() && v.cmp_rational(&right).is_le()
}

/// All primitive `(A, B, C)` with `B ≥ 1`, `h_lo ≤ H < h_hi`, whose closed
/// forbidden interval meets `[lo, hi]`. Assumes `0 ≤ θ ≤ 1` and
/// `0 ≤ lo ≤ hi ≤ 1`. Plain loops: `B` and `|A|` run until the height
/// alone exceeds the bound, `C` over every integer in `[−B − |A| − 1, 2B + |A| + 1]`,
/// which contains every `C` whose center lands in `[−1, 2]`. A float
/// prefilter with a wide margin skips centers far from the window; the
/// exact test decides everything else.
pub fn naive_lines(
    theta: &QuadraticNumber,
    delta: &BigRational,
    h_lo: u128,
    h_hi: u128,
    lo: &BigRational,
    hi: &BigRational,
) -> BTreeSet<(i64, i64, i64)> {
    let mut out = BTreeSet::new();
    let (tf, lof, hif) = (theta.to_f64(), rat_f64(lo), rat_f64(hi));
    let slack = rat_f64(delta) + 1e-6;
    let mut b: i64 = 1;
    while (b as u128).pow(3) < h_hi {
        let mut mag: i64 = 0;
        loop {
            if height(mag, b) >= h_hi && mag >= b {
                break;
            }
            for a in if mag == 0 { vec![0] } else { vec![-mag, mag] } {
                let h = height(a, b);
                if h < h_lo || h >= h_hi {
                    continue;
                }
                for c in -(b + mag + 1)..=(2 * b + mag + 1) {
                    let center = (a as f64 * tf + c as f64) / b as f64;
                    if center < lof - slack || center > hif + slack {
                        continue;
                    }
                    if a.unsigned_abs().gcd(&(b as u64)).gcd(&c.unsigned_abs()) != 1 {
                        continue;
                    }
                    if interval_meets(theta, delta, (a, b, c), lo, hi) {
                        out.insert((a, b, c));
                    }
                }
            }
            mag += 1;
        }
        b += 1;
    }
    out
}

fn rat_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

/// `||Aθ − Bξ||·max(A², B²)` at a single rational `ξ`.
pub fn dual_value(theta: &QuadraticNumber, a: i64, b: i64, xi: &BigRational) -> QuadraticNumber {
    let x = theta
        .mul_int(&BigInt::from(a))
        .sub_rational(&(xi * BigRational::from_integer(b.into())));
    let scale = (a.unsigned_abs() as u128)
        .pow(2)
        .max((b.unsigned_abs() as u128).pow(2));
    x.nearest_int_dist().mul_int(&BigInt::from(scale))
}

/// `F_{n}/F_{n+1}`, which tends to `(√5 − 1)/2` with error below `1/F_{n+1}²`.
pub fn fibonacci_ratio(n: usize) -> (BigRational, BigRational) {
    let (mut f0, mut f1) = (BigInt::from(0), BigInt::from(1));
    for _ in 0..n {
        let next = &f0 + &f1;
        f0 = f1;
        f1 = next;
    }
    let err = BigRational::new(BigInt::from(1), &f1 * &f1);
    (BigRational::new(f0, f1), err)
}
