mod common;

use badsieve::exactnum::{
    cf_convergents, check_homogeneous, cmp_with_power, nearest_int_dist, parse_rational,
    rational_to_string, ContinuedFraction, QuadraticIrrational, QuadraticNumber,
};
use common::{fibonacci_ratio, golden, q};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn tol(bits: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

#[test]
fn distance_examples() {
    assert_eq!(nearest_int_dist(&q(7, 3)), q(1, 3));
    assert_eq!(nearest_int_dist(&q(1, 2)), q(1, 2));
    assert_eq!(nearest_int_dist(&q(-7, 3)), q(1, 3));
}

#[test]
fn golden_distance_against_fibonacci() {
    // ||θ|| = 1 − θ, and F_n/F_{n+1} approximates θ to better than 1/F_{n+1}²
    let (ratio, err) = fibonacci_ratio(90);
    let reference = BigRational::one() - ratio;
    let d = golden().value().nearest_int_dist();
    let enc = d.enclosure(&BigRational::new(BigInt::one(), BigInt::from(10).pow(30)));
    assert!(&enc.hi - &enc.lo <= BigRational::new(BigInt::one(), BigInt::from(10).pow(30)));
    assert!(enc.lo <= &reference + &err && &reference - &err <= enc.hi);
    assert!((d.to_f64() - 0.381_966_011_250_105).abs() < 1e-14);
}

#[test]
fn convergent_examples() {
    let golden_cf = ContinuedFraction::parse_spec("cf:0,1~1").unwrap();
    let expect: Vec<(BigInt, BigInt)> = [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5)]
        .iter()
        .map(|&(p, q)| (p.into(), q.into()))
        .collect();
    assert_eq!(cf_convergents(&golden_cf, 5), expect);
    let two = ContinuedFraction::parse_spec("cf:0,2~1").unwrap();
    let expect: Vec<(BigInt, BigInt)> = [(0, 1), (1, 2), (2, 5)]
        .iter()
        .map(|&(p, q)| (p.into(), q.into()))
        .collect();
    assert_eq!(cf_convergents(&two, 3), expect);
    let first = cf_convergents(&ContinuedFraction::parse_spec("cf:3,7,15").unwrap(), 1);
    assert_eq!(first, vec![(BigInt::from(3), BigInt::one())]);
    assert_eq!(
        QuadraticIrrational::parse("cf:0,1~1").unwrap(),
        golden(),
        "periodic expansion converts to the closed form"
    );
}

#[test]
fn homogeneous_examples() {
    let delta = q(1, 10_000);
    let m = check_homogeneous(&golden(), &delta, 1000);
    assert_eq!(m.q, 1);
    assert!((m.value.to_f64() - 0.381_966).abs() < 1e-6);
    let root2 = QuadraticIrrational::new(QuadraticNumber::new(-1, 1, 1, 2).unwrap()).unwrap();
    let m = check_homogeneous(&root2, &delta, 1);
    assert_eq!(m.value, root2.value().clone());
    assert!((m.value.to_f64() - 0.414_213_562).abs() < 1e-9);
}

#[test]
fn homogeneous_scan_matches_plain_loop() {
    // independent plain loop with exact quadratic arithmetic only
    for spec in [
        "quad:-1,1,2,5",
        "quad:-1,1,1,2",
        "quad:-1,1,2,3",
        "cf:0,3,1~1",
    ] {
        let theta = QuadraticIrrational::parse(spec).unwrap();
        let mut best: Option<(u64, QuadraticNumber)> = None;
        for qq in 1..=300u64 {
            let b = BigInt::from(qq);
            let v = theta
                .value()
                .mul_int(&b)
                .nearest_int_dist()
                .mul_int(&(&b * &b));
            if best.as_ref().is_none_or(|(_, cur)| v < *cur) {
                best = Some((qq, v));
            }
        }
        let (bq, bv) = best.unwrap();
        let m = check_homogeneous(&theta, &q(1, 100), 300);
        assert_eq!((m.q, m.value), (bq, bv), "{spec}");
    }
}

fn small_quadratic() -> impl Strategy<Value = QuadraticNumber> {
    (
        -50i64..50,
        prop_oneof![-20i64..-1, 1i64..20],
        1i64..30,
        2i64..60,
    )
        .prop_filter_map("square radicand", |(a, b, c, d)| {
            QuadraticNumber::new(a, b, c, d).ok()
        })
}

proptest! {
    #[test]
    fn rational_distance_in_range_and_periodic(n in -10_000i64..10_000, d in 1i64..500, k in -100i64..100) {
        let x = q(n, d);
        let dist = nearest_int_dist(&x);
        prop_assert!(!dist.is_negative() && dist <= q(1, 2));
        prop_assert_eq!(nearest_int_dist(&(&x + q(k, 1))), dist);
    }

    #[test]
    fn convergent_determinant(a0 in 0i64..5, body in prop::collection::vec(1i64..9, 1..8), start in 1usize..3) {
        let mut terms = vec![a0];
        terms.extend(body);
        let start = start.min(terms.len() - 1).max(1);
        let spec = format!(
            "cf:{}~{}",
            terms.iter().map(i64::to_string).collect::<Vec<_>>().join(","),
            start
        );
        let cf = ContinuedFraction::parse_spec(&spec).unwrap();
        let conv = cf_convergents(&cf, 25);
        for w in conv.windows(2) {
            let (p0, q0) = &w[0];
            let (p1, q1) = &w[1];
            let det = p1 * q0 - p0 * q1;
            prop_assert_eq!(det.abs(), BigInt::one());
        }
        // the expansion round-trips through the closed form
        let x = cf.to_quadratic().unwrap();
        let back = ContinuedFraction::from_quadratic(&x).unwrap();
        prop_assert_eq!(back.to_quadratic().unwrap(), x);
    }

    #[test]
    fn homogeneous_non_increasing(q1 in 1u64..400, extra in 0u64..400) {
        let theta = QuadraticIrrational::parse("quad:-1,1,1,2").unwrap();
        let a = check_homogeneous(&theta, &q(1, 100), q1);
        let b = check_homogeneous(&theta, &q(1, 100), q1 + extra);
        prop_assert!(b.value <= a.value);
    }

    #[test]
    fn quadratic_ops_match_enclosures(x in small_quadratic(), y in -40i64..40, z in 1i64..40) {
        let fx = x.to_f64();
        let r = q(y, z);
        let fr = y as f64 / z as f64;
        prop_assert!((x.add_rational(&r).to_f64() - (fx + fr)).abs() < 1e-9);
        prop_assert!((x.mul_rational(&r).to_f64() - fx * fr).abs() < 1e-9 * (1.0 + fx.abs()));
        let enc = x.enclosure(&tol(100));
        if r < enc.lo {
            prop_assert!(x.cmp_rational(&r).is_gt());
        } else if r > enc.hi {
            prop_assert!(x.cmp_rational(&r).is_lt());
        }
        let d = x.nearest_int_dist();
        prop_assert!(!d.signum().is_lt() && d.cmp_rational(&q(1, 2)).is_le());
        prop_assert!((d.to_f64() - (fx - fx.round()).abs()).abs() < 1e-9);
        if enc.lo.floor() == enc.hi.floor() {
            prop_assert_eq!(x.floor(), enc.lo.floor().to_integer());
        }
    }

    #[test]
    fn quadratic_field_ops(x in small_quadratic(), y in -30i64..30, z in 1i64..20) {
        let same_field = x.add_rational(&q(y, z)).mul_int(&BigInt::from(3));
        let prod = &x * &same_field;
        let fprod = x.to_f64() * same_field.to_f64();
        prop_assert!((prod.to_f64() - fprod).abs() < 1e-7 * (1.0 + fprod.abs()));
        if let Some(inv) = x.recip() {
            prop_assert_eq!(&x * &inv, QuadraticNumber::from_integer(1, &x));
        }
        prop_assert_eq!(QuadraticNumber::parse_spec(&x.to_spec_string()).unwrap(), x.clone());
        prop_assert_eq!((&x - &x).signum(), std::cmp::Ordering::Equal);
    }

    #[test]
    fn rational_text_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..100_000) {
        let x = q(n, d);
        prop_assert_eq!(parse_rational(&rational_to_string(&x)).unwrap(), x);
    }

    #[test]
    fn power_comparison_matches_integers(x in 1u64..5000, base in 2u32..40, num in -6i64..12, den in 1i64..6) {
        // x vs base^{num/den}  ⇔  x^den vs base^num
        let exp = q(num, den);
        let got = cmp_with_power(&q(x as i64, 1), &BigUint::from(base), &exp);
        let lhs = BigRational::from_integer(BigInt::from(x).pow(den as u32));
        let rhs = if num >= 0 {
            BigRational::from_integer(BigInt::from(base).pow(num as u32))
        } else {
            BigRational::new(BigInt::one(), BigInt::from(base).pow((-num) as u32))
        };
        prop_assert_eq!(got, lhs.cmp(&rhs));
    }
}

#[test]
fn decimal_parsing() {
    assert_eq!(parse_rational("1e-4").unwrap(), q(1, 10_000));
    assert_eq!(parse_rational("0.0001").unwrap(), q(1, 10_000));
    assert_eq!(parse_rational("-2.5").unwrap(), q(-5, 2));
    assert_eq!(parse_rational("3/12").unwrap(), q(1, 4));
    assert!(parse_rational("1/0").is_err());
    assert!(parse_rational("abc").is_err());
}
